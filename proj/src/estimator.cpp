#include "anisoadapt/estimator.hpp"

#include <algorithm>
#include <cmath>

#include "anisoadapt/errors.hpp"
#include "anisoadapt/parallel.hpp"
#include "anisoadapt/quadrature.hpp"
#include "small_linalg.hpp"

namespace aniso {

namespace {

void check_zero_diag(const ErrorProblem& ep) {
  for (int e = 0; e < ep.a.n; ++e)
    if (ep.a.diag(e) == 0.0)
      throw SolverError("error problem has a zero diagonal entry at edge " + std::to_string(e));
}

}  // namespace

ErrorProblem assemble_error_problem(const ProblemSpec& p, const Mesh& m, const EdgeTable& et,
                                    const NodalField& uh, int threads) {
  int nt = m.triangle_count();
  int ne = et.edge_count();
  if (static_cast<int>(uh.v.size()) != m.vertex_count())
    throw MeshError("solution size does not match the mesh");
  if (static_cast<int>(et.tri_edges.size()) != nt)
    throw MeshError("edge table does not match the mesh");
  threads = resolve_threads(threads);

  static const ScalarFn no_source{};
  std::vector<std::vector<Triplet>> trips(std::min(threads, std::max(1, nt)));
  std::vector<std::vector<std::pair<int, double>>> rhs(trips.size());
  parallel_chunks(nt, threads, [&](int chunk, int begin, int end) {
    auto& t = trips[chunk];
    auto& r = rhs[chunk];
    double a[6][6], f[6];
    for (int k = begin; k < end; ++k) {
      const SymMat2& d = diffusion_for(p, m.tris[k].region);
      element_operator(m, k, d, a);
      const ScalarFn* src = source_for(p, m.tris[k].region);
      element_load(m, k, src ? *src : no_source, p.source_sign, f);
      const auto& tv = m.tris[k].v;
      const auto& te = et.tri_edges[k];
      for (int i = 0; i < 3; ++i) {
        double ri = f[3 + i];
        for (int j = 0; j < 3; ++j) {
          t.push_back({te[i], te[j], a[3 + i][3 + j]});
          ri -= a[3 + i][j] * uh.v[tv[j]];
        }
        r.emplace_back(te[i], ri);
      }
    }
  });

  std::vector<Triplet> all;
  for (auto& t : trips) {
    all.insert(all.end(), t.begin(), t.end());
    t.clear();
  }
  ErrorProblem ep;
  ep.r.assign(ne, 0.0);
  for (const auto& r : rhs)
    for (const auto& [idx, val] : r) ep.r[idx] += val;

  // boundary terms: a bubble vanishes on every edge except its own, so Robin
  // sides touch only the diagonal and the residual of their own edge
  ep.eliminated.assign(ne, 0);
  ep.dirichlet_vtx.assign(m.vertex_count(), 0);
  for (int e = 0; e < ne; ++e) {
    const auto& ed = et.edges[e];
    if (!ed.boundary) continue;
    if (!ed.recorded)
      throw ConfigError("boundary edge " + std::to_string(ed.a) + "-" + std::to_string(ed.b) +
                        " carries no side tag");
    auto bc = p.boundary.find(ed.tag);
    if (bc == p.boundary.end())
      throw ConfigError("problem '" + p.name + "' has no boundary condition for side tag " +
                        std::to_string(ed.tag));
    if (bc->second.type == BcType::Dirichlet) {
      ep.eliminated[e] = 1;
      ep.dirichlet_vtx[ed.a] = 1;
      ep.dirichlet_vtx[ed.b] = 1;
    } else {
      double a[3][3], g[3];
      robin_edge_matrix(m, ed.a, ed.b, bc->second.alpha, a);
      robin_edge_load(m, ed.a, ed.b, bc->second.value, g);
      all.push_back({e, e, a[2][2]});
      ep.r[e] += g[2] - a[2][0] * uh.v[ed.a] - a[2][1] * uh.v[ed.b];
    }
  }

  ep.a = CsrMatrix::from_triplets(ne, all);

  for (int e = 0; e < ne; ++e) {
    if (ep.eliminated[e]) {
      for (int k = ep.a.row_ptr[e]; k < ep.a.row_ptr[e + 1]; ++k)
        ep.a.val[k] = (ep.a.col[k] == e) ? 1.0 : 0.0;
      ep.r[e] = 0.0;
    } else {
      for (int k = ep.a.row_ptr[e]; k < ep.a.row_ptr[e + 1]; ++k)
        if (ep.eliminated[ep.a.col[k]]) ep.a.val[k] = 0.0;
    }
  }
  return ep;
}

BubbleField solve_edge_based(const ErrorProblem& ep) {
  check_zero_diag(ep);
  BubbleField z;
  z.c.assign(ep.a.n, 0.0);
  for (int e = 0; e < ep.a.n; ++e)
    if (!ep.eliminated[e]) z.c[e] = ep.r[e] / ep.a.diag(e);
  return z;
}

BubbleField solve_node_based(const ErrorProblem& ep, const EdgeTable& et) {
  check_zero_diag(ep);
  int ne = ep.a.n;
  BubbleField z;
  z.c.assign(ne, 0.0);
  std::vector<double> sum(ne, 0.0);
  std::vector<int> count(ne, 0);

  int nv = static_cast<int>(et.vtx_ptr.size()) - 1;
  std::vector<int> patch;
  std::vector<int> local(ne, -1);
  for (int v = 0; v < nv; ++v) {
    if (ep.dirichlet_vtx[v]) continue;
    patch.clear();
    et.for_vertex_edges(v, [&](int e) {
      if (!ep.eliminated[e]) patch.push_back(e);
    });
    if (patch.empty()) continue;
    int n = static_cast<int>(patch.size());
    for (int i = 0; i < n; ++i) local[patch[i]] = i;
    std::vector<double> a(n * n, 0.0), b(n);
    for (int i = 0; i < n; ++i) {
      int e = patch[i];
      b[i] = ep.r[e];
      for (int k = ep.a.row_ptr[e]; k < ep.a.row_ptr[e + 1]; ++k) {
        int lj = local[ep.a.col[k]];
        if (lj >= 0) a[i * n + lj] += ep.a.val[k];
      }
    }
    std::vector<double> x =
        internal::dense_solve(std::move(a), std::move(b), "singular node patch in the error problem");
    for (int i = 0; i < n; ++i) {
      sum[patch[i]] += x[i];
      count[patch[i]] += 1;
      local[patch[i]] = -1;
    }
  }

  for (int e = 0; e < ne; ++e) {
    if (ep.eliminated[e]) continue;
    z.c[e] = count[e] > 0 ? sum[e] / count[e] : ep.r[e] / ep.a.diag(e);
  }
  return z;
}

GsResult solve_full_gs(const ErrorProblem& ep, double rtol, int max_sweeps) {
  if (!(rtol >= 0.0)) throw ConfigError("Gauss-Seidel tolerance must be nonnegative");
  if (max_sweeps < 1) throw ConfigError("Gauss-Seidel needs at least one sweep");
  check_zero_diag(ep);
  int n = ep.a.n;
  GsResult out;
  out.z.c.assign(n, 0.0);
  std::vector<double>& z = out.z.c;
  std::vector<double> prev(n, 0.0);

  auto relax = [&](int e) {
    double s = ep.r[e];
    double d = 0.0;
    for (int k = ep.a.row_ptr[e]; k < ep.a.row_ptr[e + 1]; ++k) {
      if (ep.a.col[k] == e)
        d = ep.a.val[k];
      else
        s -= ep.a.val[k] * z[ep.a.col[k]];
    }
    z[e] = s / d;
  };

  for (int sweep = 1; sweep <= max_sweeps; ++sweep) {
    out.sweeps = sweep;
    for (int e = 0; e < n; ++e) relax(e);
    for (int e = n; e-- > 0;) relax(e);
    double dz = 0.0, nz = 0.0;
    for (int e = 0; e < n; ++e) {
      dz += (z[e] - prev[e]) * (z[e] - prev[e]);
      nz += z[e] * z[e];
    }
    if (nz == 0.0 || std::sqrt(dz) < rtol * std::sqrt(nz)) break;
    prev = z;
  }
  return out;
}

BubbleField solve_full_exact(const ErrorProblem& ep) {
  check_zero_diag(ep);
  BubbleField z;
  SolveOptions opt;
  opt.rtol = 1e-13;
  SolveReport rep = solve_spd(ep.a, ep.r, z.c, opt);
  if (rep.residual > 1e-10)
    throw SolverError("error problem solve exceeded the residual tolerance", rep.residual);
  return z;
}

EstimatorKind estimator_from_name(const std::string& name) {
  if (name == "edge" || name == "edge-based") return EstimatorKind::EdgeBased;
  if (name == "node" || name == "node-based") return EstimatorKind::NodeBased;
  if (name == "gs" || name == "full-gs") return EstimatorKind::FullGs;
  if (name == "exact" || name == "full-exact") return EstimatorKind::FullExact;
  throw ConfigError("unknown estimator '" + name +
                    "' (expected edge, node, gs or exact)");
}

std::string estimator_name(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::EdgeBased: return "edge";
    case EstimatorKind::NodeBased: return "node";
    case EstimatorKind::FullGs: return "gs";
    case EstimatorKind::FullExact: return "exact";
  }
  return "?";
}

BubbleField solve_error_problem(const ErrorProblem& ep, const EdgeTable& et, EstimatorKind kind,
                                double gs_rtol, int gs_max_sweeps, int* gs_sweeps) {
  if (gs_sweeps) *gs_sweeps = 0;
  switch (kind) {
    case EstimatorKind::EdgeBased: return solve_edge_based(ep);
    case EstimatorKind::NodeBased: return solve_node_based(ep, et);
    case EstimatorKind::FullGs: {
      GsResult g = solve_full_gs(ep, gs_rtol, gs_max_sweeps);
      if (gs_sweeps) *gs_sweeps = g.sweeps;
      return std::move(g.z);
    }
    case EstimatorKind::FullExact: return solve_full_exact(ep);
  }
  throw ConfigError("unknown estimator kind");
}

double estimate_l2(const BubbleField& z, const Mesh& m, const EdgeTable& et) {
  if (static_cast<int>(z.c.size()) != et.edge_count())
    throw MeshError("bubble field size does not match the edge table");
  double s = 0.0;
  for (int k = 0; k < m.triangle_count(); ++k) {
    double area = triangle_area(m, k);
    const auto& te = et.tri_edges[k];
    for (const auto& q : tri_rule_order4()) {
      double l[3] = {q.l0, q.l1, q.l2};
      double w = 0.0;
      for (int j = 0; j < 3; ++j)
        w += z.c[te[j]] * 4.0 * l[(j + 1) % 3] * l[(j + 2) % 3];
      s += q.w * area * w * w;
    }
  }
  return std::sqrt(s);
}

Effectivity effectivity(const BubbleField& z, const NodalField& uh, const ProblemSpec& p,
                        const Mesh& m, const EdgeTable& et) {
  if (!p.has_exact())
    throw ConfigError("problem '" + p.name + "' has no exact solution for effectivity");
  double err2 = 0.0, corr2 = 0.0;
  for (int k = 0; k < m.triangle_count(); ++k) {
    double area = triangle_area(m, k);
    const auto& tv = m.tris[k].v;
    const auto& te = et.tri_edges[k];
    for (const auto& q : tri_rule_order4()) {
      double l[3] = {q.l0, q.l1, q.l2};
      Vec2 x = l[0] * m.points[tv[0]] + l[1] * m.points[tv[1]] + l[2] * m.points[tv[2]];
      double uhv = 0.0, zv = 0.0;
      for (int i = 0; i < 3; ++i) uhv += l[i] * uh.v[tv[i]];
      for (int j = 0; j < 3; ++j) zv += z.c[te[j]] * 4.0 * l[(j + 1) % 3] * l[(j + 2) % 3];
      double u = p.exact(x);
      err2 += q.w * area * (uhv - u) * (uhv - u);
      corr2 += q.w * area * (uhv + zv - u) * (uhv + zv - u);
    }
  }
  Effectivity out;
  double err = std::sqrt(err2);
  if (err < 1e-14) return out;
  out.defined = true;
  out.index = estimate_l2(z, m, et) / err;
  out.beta = std::sqrt(corr2) / err;
  return out;
}

}  // namespace aniso
