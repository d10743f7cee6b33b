#include "anisoadapt/metric.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "anisoadapt/errors.hpp"
#include "anisoadapt/parallel.hpp"

namespace aniso {

namespace {

void check_sizes(size_t have, const Mesh& m, const char* what) {
  if (have != static_cast<size_t>(m.triangle_count()))
    throw MeshError(std::string(what) + ": field has " + std::to_string(have) +
                    " entries for " + std::to_string(m.triangle_count()) + " triangles");
}

void check_exponents(double q, int d) {
  if (!(q >= 1.0)) throw ConfigError("norm index q must be >= 1");
  if (d < 1) throw ConfigError("dimension d must be >= 1");
}

void check_spd(const MetricField& metric, const char* what) {
  for (size_t k = 0; k < metric.m.size(); ++k) {
    const SymMat2& mk = metric.m[k];
    if (!(mk.xx > 0.0) || !(mk.det() > 0.0))
      throw ConfigError(std::string(what) + ": metric not positive definite at element " +
                        std::to_string(k));
  }
}

// sqrt(det M) for SPD M through the eigenvalues; the raw determinant loses
// digits when the regularized metric is nearly singular.
double sqrt_det(const SymMat2& m) {
  SymEigen2 e = eig_sym(m);
  return std::sqrt(std::max(e.l1, 0.0)) * std::sqrt(std::max(e.l2, 0.0));
}

double spectral_norm(const SymMat2& m) {
  SymEigen2 e = eig_sym(m);
  return std::max(std::abs(e.l1), std::abs(e.l2));
}

struct AlphaProblem {
  std::vector<SymMat2> habs;  // |H_K|
  std::vector<double> area;
  double domain_area = 0.0;
  double rhs = 0.0;
  double lhs_exponent = 0.0;  // q/(d+2q)

  // sum_K det(I + |H_K|/alpha)^(q/(d+2q)) |K|
  double lhs(double alpha) const {
    double s = 0.0;
    for (size_t k = 0; k < habs.size(); ++k) {
      const SymMat2& h = habs[k];
      double det = 1.0 + h.trace() / alpha + h.det() / (alpha * alpha);
      s += std::pow(det, lhs_exponent) * area[k];
    }
    return s;
  }
};

AlphaProblem setup_alpha(const ElementHessianField& hess, const Mesh& m, double q, int d) {
  AlphaProblem ap;
  int n = m.triangle_count();
  ap.habs.resize(n);
  ap.area.resize(n);
  for (int k = 0; k < n; ++k) {
    ap.habs[k] = matrix_abs(hess.h[k]);
    ap.area[k] = triangle_area(m, k);
    ap.domain_area += ap.area[k];
  }
  double dq = d * q / (d + 2.0 * q);
  ap.rhs = std::pow(2.0, std::max(1.0, dq)) * ap.domain_area;
  ap.lhs_exponent = q / (d + 2.0 * q);
  return ap;
}

}  // namespace

SymMat2 matrix_abs(const SymMat2& h) {
  return sym_map_eigen(h, [](double l) { return std::abs(l); });
}

std::optional<double> solve_alpha(const ElementHessianField& hess, const Mesh& m,
                                  double q, int d) {
  check_sizes(hess.h.size(), m, "solve_alpha");
  check_exponents(q, d);
  if (m.triangle_count() == 0) throw MeshError("solve_alpha: empty mesh");

  bool all_zero = true;
  for (const SymMat2& h : hess.h)
    if (h.xx != 0.0 || h.xy != 0.0 || h.yy != 0.0) { all_zero = false; break; }
  if (all_zero) return std::nullopt;

  AlphaProblem ap = setup_alpha(hess, m, q, d);

  // Analytic bracket: the equation's right side was chosen so that
  //   [(2^(max{2, dq/(d+2q)+1} - q/(d+2q)) - 1)^-1 |Omega|^-1 sum det(|H|)^(q/(d+2q)) |K|]^((d+2q)/(dq))
  // bounds alpha from below and the same expression with det(|H|)^(q/(d+2q))
  // replaced by ||H||^(dq/(d+2q)) (and no leading constant) from above.
  double dq = d * q / (d + 2.0 * q);
  double sum_det = 0.0, sum_norm = 0.0;
  for (size_t k = 0; k < ap.habs.size(); ++k) {
    sum_det += std::pow(ap.habs[k].det(), ap.lhs_exponent) * ap.area[k];
    sum_norm += std::pow(spectral_norm(ap.habs[k]), dq) * ap.area[k];
  }
  double lo_const = 1.0 / (std::pow(2.0, std::max(2.0, dq + 1.0) - ap.lhs_exponent) - 1.0);
  double lo = std::pow(lo_const * sum_det / ap.domain_area, 1.0 / dq);
  double hi = std::pow(sum_norm / ap.domain_area, 1.0 / dq);

  // Guard against a degenerate lower end (rank-deficient Hessians make every
  // det(|H_K|) vanish) and against roundoff at either end.
  if (!(lo > 0.0)) lo = hi * 1e-12;
  while (lo > 0.0 && ap.lhs(lo) < ap.rhs) lo *= 0.0625;
  while (ap.lhs(hi) > ap.rhs) hi *= 2.0;

  const double tol = 1e-10 * ap.rhs;
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (lo + hi);
    double r = ap.lhs(mid) - ap.rhs;
    if (std::abs(r) < tol) return mid;
    if (r > 0.0)
      lo = mid;
    else
      hi = mid;
  }
  throw SolverError("alpha bisection failed to meet its residual tolerance");
}

MetricField metric_from_hessian(const ElementHessianField& hess, double alpha,
                                double q, int d, int threads) {
  check_exponents(q, d);
  if (!(alpha > 0.0)) throw ConfigError("metric regularization alpha must be positive");

  MetricField out;
  out.alpha = alpha;
  out.m.resize(hess.h.size());
  double exponent = -1.0 / (d + 2.0 * q);
  int n = static_cast<int>(hess.h.size());
  parallel_chunks(n, threads, [&](int, int begin, int end) {
    for (int k = begin; k < end; ++k) {
      SymMat2 b = matrix_abs(hess.h[k]) * (1.0 / alpha);
      b.xx += 1.0;
      b.yy += 1.0;
      out.m[k] = b * std::pow(b.det(), exponent);
    }
  });
  return out;
}

MetricField normalize_metric(const MetricField& metric, int n_target, const Mesh& m) {
  check_sizes(metric.m.size(), m, "normalize_metric");
  check_spd(metric, "normalize_metric");
  if (metric.normalized) throw ConfigError("normalize_metric: field is already normalized");
  if (n_target < 1) throw ConfigError("normalize_metric: target count must be positive");

  double sigma = 0.0;
  for (int k = 0; k < m.triangle_count(); ++k)
    sigma += triangle_area(m, k) * sqrt_det(metric.m[k]);
  if (!(sigma > 0.0)) throw ConfigError("normalize_metric: zero metric volume");

  MetricField out = metric;
  double scale = n_target / sigma;  // (N/sigma)^(2/d) with d = 2
  for (SymMat2& mk : out.m) mk = mk * scale;
  out.normalized = true;
  out.sigma = sigma;
  out.n_target = n_target;
  return out;
}

VertexMetricField element_to_vertex(const MetricField& metric, const Mesh& m) {
  check_sizes(metric.m.size(), m, "element_to_vertex");
  check_spd(metric, "element_to_vertex");

  std::vector<SymMat2> logsum(m.vertex_count());
  std::vector<double> weight(m.vertex_count(), 0.0);
  for (int k = 0; k < m.triangle_count(); ++k) {
    double w = triangle_area(m, k);
    SymMat2 lg = sym_map_eigen(metric.m[k], [](double l) { return std::log(l); });
    for (int j = 0; j < 3; ++j) {
      int v = m.tris[k].v[j];
      logsum[v] += lg * w;
      weight[v] += w;
    }
  }

  VertexMetricField out;
  out.m.resize(m.vertex_count());
  for (int v = 0; v < m.vertex_count(); ++v) {
    if (weight[v] == 0.0) {
      out.m[v] = SymMat2::identity();
      continue;
    }
    out.m[v] = sym_map_eigen(logsum[v] * (1.0 / weight[v]),
                             [](double l) { return std::exp(l); });
  }
  return out;
}

QualityReport quality(const Mesh& m, const MetricField& metric, double q, int d) {
  check_sizes(metric.m.size(), m, "quality");
  check_spd(metric, "quality");
  check_exponents(q, d);
  if (d < 2) throw ConfigError("quality: alignment exponent needs d >= 2");
  if (m.triangle_count() == 0) throw MeshError("quality: empty mesh");

  int n = m.triangle_count();
  QualityReport rep;
  rep.alpha = metric.alpha;
  rep.q_ali.resize(n);
  rep.q_eq.resize(n);

  std::vector<double> density(n);  // |K| sqrt(det M_K)
  double sigma = 0.0;
  double ali_exponent = d / (2.0 * (d - 1.0));
  for (int k = 0; k < n; ++k) {
    AffineMap map = affine_map(m, k);
    SymMat2 a = congruence(map.f, metric.m[k]);
    double det_a = std::max(sqrt_det(a), 0.0);
    rep.q_ali[k] = std::pow(a.trace() / (d * std::pow(det_a, 2.0 / d)), ali_exponent);
    // The AM-GM floor can dip a few ulps under 1 for a perfectly aligned
    // element; clamp so downstream powers never amplify that noise.
    rep.q_ali[k] = std::max(rep.q_ali[k], 1.0);
    density[k] = map.area * sqrt_det(metric.m[k]);
    sigma += density[k];

    double longest = 0.0;
    for (int j = 0; j < 3; ++j) {
      Vec2 e = m.points[m.tris[k].v[(j + 2) % 3]] - m.points[m.tris[k].v[(j + 1) % 3]];
      longest = std::max(longest, norm(e));
    }
    rep.max_aspect_ratio =
        std::max(rep.max_aspect_ratio, longest * longest / (2.0 * map.area));
  }
  rep.sigma = sigma;

  double acc = 0.0;
  for (int k = 0; k < n; ++k) {
    rep.q_eq[k] = n * density[k] / sigma;
    acc += density[k] / sigma * std::pow(rep.q_ali[k], q) *
           std::pow(rep.q_eq[k], 2.0 * q / d);
  }
  rep.q_mesh = std::max(std::pow(acc, 1.0 / q), 1.0);
  return rep;
}

}  // namespace aniso
