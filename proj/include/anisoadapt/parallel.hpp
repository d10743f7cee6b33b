#ifndef ANISOADAPT_PARALLEL_HPP
#define ANISOADAPT_PARALLEL_HPP

#include <functional>

namespace aniso {

// Runs fn(chunk_index, begin, end) over a fixed contiguous partition of
// [0, n) into `threads` chunks. Chunk boundaries depend only on n and
// threads, and callers merge per-chunk buffers in chunk-index order, so
// results are bit-identical for any thread count.
void parallel_chunks(int n, int threads,
                     const std::function<void(int, int, int)>& fn);

// Clamp a requested thread count (0 meaning "pick for me") to something sane.
int resolve_threads(int requested);

}  // namespace aniso

#endif
