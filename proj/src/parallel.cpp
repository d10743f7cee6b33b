#include "anisoadapt/parallel.hpp"

#include <algorithm>
#include <thread>
#include <vector>

namespace aniso {

int resolve_threads(int requested) {
  if (requested > 0) return std::min(requested, 64);
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(std::min(hw, 8u));
}

void parallel_chunks(int n, int threads,
                     const std::function<void(int, int, int)>& fn) {
  threads = std::max(1, threads);
  int chunks = std::min(threads, std::max(1, n));
  if (chunks == 1) {
    fn(0, 0, n);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(chunks);
  for (int c = 0; c < chunks; ++c) {
    int begin = static_cast<int>(static_cast<long long>(n) * c / chunks);
    int end = static_cast<int>(static_cast<long long>(n) * (c + 1) / chunks);
    pool.emplace_back(fn, c, begin, end);
  }
  for (auto& t : pool) t.join();
}

}  // namespace aniso
