#ifndef ANISOADAPT_SPARSE_HPP
#define ANISOADAPT_SPARSE_HPP

#include <vector>

namespace aniso {

struct Triplet {
  int r, c;
  double v;
};

// Row-compressed square sparse matrix. Duplicate triplets are summed in
// arrival order so assembly stays bit-reproducible.
struct CsrMatrix {
  int n = 0;
  std::vector<int> row_ptr;
  std::vector<int> col;
  std::vector<double> val;

  static CsrMatrix from_triplets(int n, const std::vector<Triplet>& trips);

  void multiply(const std::vector<double>& x, std::vector<double>& y) const;
  // pointer to a stored entry, nullptr when the position is not in the pattern
  double* find(int r, int c);
  const double* find(int r, int c) const;
  double diag(int r) const;
  int nnz() const { return static_cast<int>(val.size()); }
};

struct SolveOptions {
  double rtol = 1e-13;     // relative residual target
  int max_cg_iters = 0;    // 0: pick from n
  bool allow_direct = true;
};

struct SolveReport {
  int cg_iterations = 0;
  double residual = 0.0;   // relative, achieved
  bool used_direct = false;
};

// Solves A x = b for symmetric positive definite A: Jacobi-preconditioned
// conjugate gradients first, banded LDL^T (with reverse Cuthill-McKee
// reordering) as the direct fallback when CG stalls. Throws SolverError if
// neither route reaches a usable residual.
SolveReport solve_spd(const CsrMatrix& a, const std::vector<double>& b,
                      std::vector<double>& x, const SolveOptions& opt = {});

}  // namespace aniso

#endif
