#include "anisoadapt/fem.hpp"

#include <algorithm>
#include <cmath>

#include "anisoadapt/errors.hpp"
#include "anisoadapt/parallel.hpp"
#include "anisoadapt/quadrature.hpp"

namespace aniso {

const SymMat2& diffusion_for(const ProblemSpec& p, int region) {
  auto it = p.diffusion.find(region);
  if (it == p.diffusion.end())
    throw ConfigError("problem '" + p.name + "' has no diffusion tensor for region " +
                      std::to_string(region));
  return it->second;
}

const ScalarFn* source_for(const ProblemSpec& p, int region) {
  auto it = p.source.find(region);
  return it == p.source.end() ? nullptr : &it->second;
}

void retag_regions(Mesh& m, const ProblemSpec& p) {
  if (!p.classify) return;
  for (auto& t : m.tris) {
    Vec2 c = (m.points[t.v[0]] + m.points[t.v[1]] + m.points[t.v[2]]) / 3.0;
    t.region = p.classify(c);
  }
}

namespace {

Vec2 bary_point(const Mesh& m, int k, double l0, double l1, double l2) {
  const Tri& t = m.tris[k];
  return l0 * m.points[t.v[0]] + l1 * m.points[t.v[1]] + l2 * m.points[t.v[2]];
}

// values and gradients of the six local functions at a barycentric point
void eval_basis(const TriGeometry& g, const double l[3], double phi[6], Vec2 grad[6]) {
  for (int i = 0; i < 3; ++i) {
    phi[i] = l[i];
    grad[i] = g.grad[i];
  }
  for (int j = 0; j < 3; ++j) {
    int a = (j + 1) % 3, b = (j + 2) % 3;
    phi[3 + j] = 4.0 * l[a] * l[b];
    grad[3 + j] = 4.0 * (l[a] * g.grad[b] + l[b] * g.grad[a]);
  }
}

}  // namespace

void element_operator(const Mesh& m, int k, const SymMat2& d, double a[6][6]) {
  TriGeometry g = tri_geometry(m, k);
  if (!(g.area > 0.0)) throw MeshError("element " + std::to_string(k) + " is degenerate or inverted");
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j) a[i][j] = 0.0;
  double phi[6];
  Vec2 grad[6];
  for (const auto& q : tri_rule_order4()) {
    double l[3] = {q.l0, q.l1, q.l2};
    eval_basis(g, l, phi, grad);
    double w = q.w * g.area;
    for (int i = 0; i < 6; ++i) {
      Vec2 dgi = d * grad[i];
      for (int j = i; j < 6; ++j) a[i][j] += w * dot(dgi, grad[j]);
    }
  }
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < i; ++j) a[i][j] = a[j][i];
}

void element_load(const Mesh& m, int k, const ScalarFn& f, double sign, double out[6]) {
  TriGeometry g = tri_geometry(m, k);
  for (int i = 0; i < 6; ++i) out[i] = 0.0;
  if (!f) return;
  double phi[6];
  Vec2 grad[6];
  for (const auto& q : tri_rule_order4()) {
    double l[3] = {q.l0, q.l1, q.l2};
    eval_basis(g, l, phi, grad);
    double w = sign * q.w * g.area * f(bary_point(m, k, q.l0, q.l1, q.l2));
    for (int i = 0; i < 6; ++i) out[i] += w * phi[i];
  }
}

void robin_edge_matrix(const Mesh& m, int va, int vb, double alpha, double a[3][3]) {
  double len = norm(m.points[vb] - m.points[va]);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) a[i][j] = 0.0;
  for (const auto& q : seg_rule()) {
    double phi[3] = {1.0 - q.t, q.t, 4.0 * q.t * (1.0 - q.t)};
    double w = alpha * len * q.w;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) a[i][j] += w * phi[i] * phi[j];
  }
}

void robin_edge_load(const Mesh& m, int va, int vb, const ScalarFn& g, double out[3]) {
  out[0] = out[1] = out[2] = 0.0;
  if (!g) return;
  Vec2 pa = m.points[va], pb = m.points[vb];
  double len = norm(pb - pa);
  for (const auto& q : seg_rule()) {
    double phi[3] = {1.0 - q.t, q.t, 4.0 * q.t * (1.0 - q.t)};
    double w = len * q.w * g(pa + q.t * (pb - pa));
    for (int i = 0; i < 3; ++i) out[i] += w * phi[i];
  }
}

SparseSystem assemble(const ProblemSpec& p, const Mesh& m, int threads) {
  int nv = m.vertex_count();
  int nt = m.triangle_count();
  threads = resolve_threads(threads);

  // element contributions, chunked; both triplets and load pairs are
  // concatenated in chunk order and accumulated sequentially, so the sums are
  // grouped identically for any thread count
  std::vector<std::vector<Triplet>> trips(std::min(threads, std::max(1, nt)));
  std::vector<std::vector<std::pair<int, double>>> loads(trips.size());
  parallel_chunks(nt, threads, [&](int chunk, int begin, int end) {
    auto& t = trips[chunk];
    auto& b = loads[chunk];
    double a[6][6], f[6];
    for (int k = begin; k < end; ++k) {
      const SymMat2& d = diffusion_for(p, m.tris[k].region);
      element_operator(m, k, d, a);
      const ScalarFn* src = source_for(p, m.tris[k].region);
      const auto& tv = m.tris[k].v;
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) t.push_back({tv[i], tv[j], a[i][j]});
      if (src) {
        element_load(m, k, *src, p.source_sign, f);
        for (int i = 0; i < 3; ++i) b.emplace_back(tv[i], f[i]);
      }
    }
  });

  std::vector<Triplet> all;
  for (auto& t : trips) {
    all.insert(all.end(), t.begin(), t.end());
    t.clear();
  }
  SparseSystem sys;
  sys.b.assign(nv, 0.0);
  for (const auto& b : loads)
    for (const auto& [idx, val] : b) sys.b[idx] += val;

  // boundary terms and Dirichlet marks come from the recorded edges
  EdgeTable et = build_edge_table(m);
  sys.dirichlet.assign(nv, 0);
  sys.bc_value.assign(nv, 0.0);
  std::vector<int> dirichlet_tag(nv, 0);
  double robin_mass = 0.0;
  for (const auto& e : et.edges) {
    if (!e.boundary) continue;
    if (!e.recorded)
      throw ConfigError("boundary edge " + std::to_string(e.a) + "-" + std::to_string(e.b) +
                        " carries no side tag");
    auto bc = p.boundary.find(e.tag);
    if (bc == p.boundary.end())
      throw ConfigError("problem '" + p.name + "' has no boundary condition for side tag " +
                        std::to_string(e.tag));
    if (bc->second.type == BcType::Robin) {
      double a[3][3], g[3];
      robin_mass += std::abs(bc->second.alpha) * norm(m.points[e.b] - m.points[e.a]);
      robin_edge_matrix(m, e.a, e.b, bc->second.alpha, a);
      robin_edge_load(m, e.a, e.b, bc->second.value, g);
      int idx[2] = {e.a, e.b};
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) all.push_back({idx[i], idx[j], a[i][j]});
      sys.b[e.a] += g[0];
      sys.b[e.b] += g[1];
    } else {
      for (int v : {e.a, e.b}) {
        if (!sys.dirichlet[v] || e.tag < dirichlet_tag[v]) {
          if (!bc->second.value)
            throw ConfigError("Dirichlet side " + std::to_string(e.tag) + " has no boundary data");
          sys.dirichlet[v] = 1;
          dirichlet_tag[v] = e.tag;
          sys.bc_value[v] = bc->second.value(m.points[v]);
        }
      }
    }
  }

  bool any_dirichlet = false;
  for (char d : sys.dirichlet) any_dirichlet |= (d != 0);
  if (!any_dirichlet && robin_mass == 0.0)
    throw ConfigError("problem '" + p.name +
                      "' fixes the solution nowhere; the operator is singular");

  sys.a = CsrMatrix::from_triplets(nv, all);

  // eliminate Dirichlet rows and columns, keeping symmetry
  for (int r = 0; r < nv; ++r) {
    if (sys.dirichlet[r]) {
      for (int k = sys.a.row_ptr[r]; k < sys.a.row_ptr[r + 1]; ++k)
        sys.a.val[k] = (sys.a.col[k] == r) ? 1.0 : 0.0;
      sys.b[r] = sys.bc_value[r];
    } else {
      for (int k = sys.a.row_ptr[r]; k < sys.a.row_ptr[r + 1]; ++k) {
        int c = sys.a.col[k];
        if (sys.dirichlet[c]) {
          sys.b[r] -= sys.a.val[k] * sys.bc_value[c];
          sys.a.val[k] = 0.0;
        }
      }
    }
  }
  return sys;
}

NodalField solve_linear(const SparseSystem& sys, LinearSolveInfo* info) {
  SolveOptions opt;
  opt.rtol = 1e-13;
  NodalField u;
  SolveReport rep = solve_spd(sys.a, sys.b, u.v, opt);
  if (info) *info = {rep.cg_iterations, rep.residual, rep.used_direct};
  if (rep.residual > 1e-10)
    throw SolverError("linear solve exceeded the residual tolerance", rep.residual);
  return u;
}

double l2_error(const NodalField& u, const ProblemSpec& p, const Mesh& m) {
  if (!p.has_exact())
    throw ConfigError("problem '" + p.name + "' has no exact solution for error evaluation");
  if (static_cast<int>(u.v.size()) != m.vertex_count())
    throw MeshError("field size does not match the mesh");
  double s = 0.0;
  for (int k = 0; k < m.triangle_count(); ++k) {
    double area = triangle_area(m, k);
    const auto& tv = m.tris[k].v;
    for (const auto& q : tri_rule_order4()) {
      Vec2 x = bary_point(m, k, q.l0, q.l1, q.l2);
      double uh = q.l0 * u.v[tv[0]] + q.l1 * u.v[tv[1]] + q.l2 * u.v[tv[2]];
      double diff = uh - p.exact(x);
      s += q.w * area * diff * diff;
    }
  }
  return std::sqrt(s);
}

double energy_residual(const NodalField& uh, const ProblemSpec& p, const Mesh& m,
                       const EdgeTable& et, const HierarchicalField& w) {
  double res = 0.0;
  double phi[6];
  Vec2 grad[6];
  for (int k = 0; k < m.triangle_count(); ++k) {
    TriGeometry g = tri_geometry(m, k);
    const auto& tv = m.tris[k].v;
    const SymMat2& d = diffusion_for(p, m.tris[k].region);
    const ScalarFn* src = source_for(p, m.tris[k].region);
    Vec2 grad_u{0.0, 0.0};
    for (int i = 0; i < 3; ++i) grad_u += uh.v[tv[i]] * g.grad[i];
    Vec2 d_grad_u = d * grad_u;
    for (const auto& q : tri_rule_order4()) {
      double l[3] = {q.l0, q.l1, q.l2};
      eval_basis(g, l, phi, grad);
      double wv = 0.0;
      Vec2 wg{0.0, 0.0};
      if (w.nodal)
        for (int i = 0; i < 3; ++i) {
          wv += (*w.nodal)[tv[i]] * phi[i];
          wg += (*w.nodal)[tv[i]] * grad[i];
        }
      if (w.bubble)
        for (int j = 0; j < 3; ++j) {
          double c = (*w.bubble)[et.tri_edges[k][j]];
          wv += c * phi[3 + j];
          wg += c * grad[3 + j];
        }
      double f = src ? p.source_sign * (*src)(bary_point(m, k, q.l0, q.l1, q.l2)) : 0.0;
      res += q.w * g.area * (f * wv - dot(d_grad_u, wg));
    }
  }
  // Robin boundary terms: + int g w - int alpha u_h w
  for (int e = 0; e < et.edge_count(); ++e) {
    const auto& ed = et.edges[e];
    if (!ed.boundary || !ed.recorded) continue;
    auto bc = p.boundary.find(ed.tag);
    if (bc == p.boundary.end() || bc->second.type != BcType::Robin) continue;
    Vec2 pa = m.points[ed.a], pb = m.points[ed.b];
    double len = norm(pb - pa);
    for (const auto& q : seg_rule()) {
      double hat_a = 1.0 - q.t, hat_b = q.t, bub = 4.0 * q.t * (1.0 - q.t);
      double wv = 0.0;
      if (w.nodal) wv += (*w.nodal)[ed.a] * hat_a + (*w.nodal)[ed.b] * hat_b;
      if (w.bubble) wv += (*w.bubble)[e] * bub;
      if (wv == 0.0) continue;
      double uval = uh.v[ed.a] * hat_a + uh.v[ed.b] * hat_b;
      double gval = bc->second.value ? bc->second.value(pa + q.t * (pb - pa)) : 0.0;
      res += len * q.w * (gval - bc->second.alpha * uval) * wv;
    }
  }
  return res;
}

}  // namespace aniso
