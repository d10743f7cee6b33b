#ifndef ANISOADAPT_METRIC_HPP
#define ANISOADAPT_METRIC_HPP

#include <optional>
#include <vector>

#include "anisoadapt/hessian.hpp"
#include "anisoadapt/mesh.hpp"

namespace aniso {

// |H| = V |diag| V^T; maps a symmetric matrix to its positive-semidefinite
// absolute value.
SymMat2 matrix_abs(const SymMat2& h);

// Per-triangle metric field. Unnormalized fields carry the unit-density
// metric built straight from the Hessian; normalize_metric rescales so the
// metric volume matches a target element count. alpha and sigma record the
// regularization level and the density integral the field was built with
// (sigma stays 0 until normalization, which is where it is first needed).
struct MetricField {
  std::vector<SymMat2> m;
  bool normalized = false;
  double alpha = 0.0;
  double sigma = 0.0;
  int n_target = 0;
};

struct VertexMetricField {
  std::vector<SymMat2> m;
};

// Regularization level alpha solving
//   sum_K det(I + |H_K|/alpha)^(q/(d+2q)) |K| = 2^max{1, dq/(d+2q)} |Omega|
// by bisection inside an analytic bracket. The left side decreases strictly
// in alpha, so the root is unique. Returns nullopt when every H_K is exactly
// zero: the solution is already resolved and the caller should fall back to
// the identity metric.
std::optional<double> solve_alpha(const ElementHessianField& hess, const Mesh& m,
                                  double q = 2.0, int d = 2);

// M_K = det(I + |H_K|/alpha)^(-1/(d+2q)) (I + |H_K|/alpha). Takes the raw
// (possibly indefinite) Hessian field and applies matrix_abs itself. Always
// SPD: eigenvalues of I + |H|/alpha are >= 1.
MetricField metric_from_hessian(const ElementHessianField& hess, double alpha,
                                double q = 2.0, int d = 2, int threads = 1);

// Scales so that sum_K |K| sqrt(det M_K) = n_target; records the density
// integral sigma of the input field.
MetricField normalize_metric(const MetricField& metric, int n_target, const Mesh& m);

// Area-weighted log-Euclidean mean over the triangles incident to each
// vertex: exp(sum w_K log M_K / sum w_K). Unreferenced vertices get the
// identity.
VertexMetricField element_to_vertex(const MetricField& metric, const Mesh& m);

// Alignment, equidistribution and overall quality of a mesh measured against
// a metric field. q_ali >= 1 with equality when F'^T M F' is isotropic;
// q_eq averages to 1 over the elements (individual values dip below 1 on
// oversized elements); q_mesh >= 1 with equality only for an M-uniform mesh.
struct QualityReport {
  std::vector<double> q_ali;
  std::vector<double> q_eq;
  double q_mesh = 1.0;
  double max_aspect_ratio = 1.0;  // longest edge over shortest altitude
  double alpha = 0.0;             // copied from the metric record
  double sigma = 0.0;             // sum |K| sqrt(det M_K) over this mesh
};

QualityReport quality(const Mesh& m, const MetricField& metric, double q = 2.0,
                      int d = 2);

}  // namespace aniso

#endif
