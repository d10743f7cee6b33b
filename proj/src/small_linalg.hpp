#ifndef ANISOADAPT_SMALL_LINALG_HPP
#define ANISOADAPT_SMALL_LINALG_HPP

// Dense helpers for the tiny systems that appear per vertex or per patch
// (node patches, quadratic least-squares fits). Not part of the public API.

#include <cmath>
#include <utility>
#include <vector>

#include "anisoadapt/errors.hpp"

namespace aniso::internal {

// Gaussian elimination with partial pivoting; a is row-major n*n.
inline std::vector<double> dense_solve(std::vector<double> a, std::vector<double> b,
                                       const char* what) {
  int n = static_cast<int>(b.size());
  for (int k = 0; k < n; ++k) {
    int piv = k;
    for (int i = k + 1; i < n; ++i)
      if (std::fabs(a[i * n + k]) > std::fabs(a[piv * n + k])) piv = i;
    if (std::fabs(a[piv * n + k]) < 1e-300) throw SolverError(what);
    if (piv != k) {
      for (int j = 0; j < n; ++j) std::swap(a[k * n + j], a[piv * n + j]);
      std::swap(b[k], b[piv]);
    }
    for (int i = k + 1; i < n; ++i) {
      double f = a[i * n + k] / a[k * n + k];
      for (int j = k; j < n; ++j) a[i * n + j] -= f * a[k * n + j];
      b[i] -= f * b[k];
    }
  }
  std::vector<double> x(n);
  for (int i = n; i-- > 0;) {
    double s = b[i];
    for (int j = i + 1; j < n; ++j) s -= a[i * n + j] * x[j];
    x[i] = s / a[i * n + i];
  }
  return x;
}

// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations; a is
// destroyed. Used only for condition estimates of small normal equations.
inline std::vector<double> sym_eigenvalues(std::vector<double> a, int n) {
  for (int sweep = 0; sweep < 64; ++sweep) {
    double off = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) off += a[i * n + j] * a[i * n + j];
    if (off < 1e-30) break;
    for (int p = 0; p < n; ++p) {
      for (int q = p + 1; q < n; ++q) {
        double apq = a[p * n + q];
        if (apq == 0.0) continue;
        double theta = 0.5 * std::atan2(2.0 * apq, a[p * n + p] - a[q * n + q]);
        double c = std::cos(theta), s = std::sin(theta);
        for (int k = 0; k < n; ++k) {
          double akp = a[k * n + p], akq = a[k * n + q];
          a[k * n + p] = c * akp + s * akq;
          a[k * n + q] = -s * akp + c * akq;
        }
        for (int k = 0; k < n; ++k) {
          double apk = a[p * n + k], aqk = a[q * n + k];
          a[p * n + k] = c * apk + s * aqk;
          a[q * n + k] = -s * apk + c * aqk;
        }
      }
    }
  }
  std::vector<double> ev(n);
  for (int i = 0; i < n; ++i) ev[i] = a[i * n + i];
  return ev;
}

}  // namespace aniso::internal

#endif
