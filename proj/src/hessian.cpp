#include "anisoadapt/hessian.hpp"

#include <algorithm>
#include <cmath>

#include "anisoadapt/errors.hpp"
#include "anisoadapt/parallel.hpp"
#include "small_linalg.hpp"

namespace aniso {

ElementHessianField hessian_from_bubbles(const BubbleField& z, const Mesh& m,
                                         const EdgeTable& et) {
  if (static_cast<int>(z.c.size()) != et.edge_count())
    throw MeshError("bubble field size does not match the edge table");
  ElementHessianField out;
  out.h.assign(m.triangle_count(), SymMat2{});
  for (int k = 0; k < m.triangle_count(); ++k) {
    TriGeometry g = tri_geometry(m, k);
    SymMat2 h{};
    for (int j = 0; j < 3; ++j) {
      double c = z.c[et.tri_edges[k][j]];
      const Vec2& ga = g.grad[(j + 1) % 3];
      const Vec2& gb = g.grad[(j + 2) % 3];
      h.xx += 8.0 * c * ga.x * gb.x;
      h.yy += 8.0 * c * ga.y * gb.y;
      h.xy += 4.0 * c * (ga.x * gb.y + ga.y * gb.x);
    }
    out.h[k] = h;
  }
  return out;
}

namespace {

SymMat2 mean_of_vertices(const std::vector<SymMat2>& vtx, const Tri& t) {
  SymMat2 s = vtx[t.v[0]] + vtx[t.v[1]] + vtx[t.v[2]];
  return s * (1.0 / 3.0);
}

// quadratic fit around one vertex; returns false when no acceptable patch
// exists within the ring budget
bool fit_vertex_quadratic(const NodalField& u, const Mesh& m, const EdgeTable& et, int v,
                          SymMat2& h) {
  std::vector<int> patch{v};
  std::vector<char> in_patch(m.vertex_count(), 0);
  in_patch[v] = 1;
  size_t ring_begin = 0;

  for (int ring = 1; ring <= 3; ++ring) {
    size_t ring_end = patch.size();
    for (size_t i = ring_begin; i < ring_end; ++i) {
      et.for_vertex_edges(patch[i], [&](int e) {
        int w = et.edges[e].a == patch[i] ? et.edges[e].b : et.edges[e].a;
        if (!in_patch[w]) {
          in_patch[w] = 1;
          patch.push_back(w);
        }
      });
    }
    ring_begin = ring_end;
    if (patch.size() < 6) continue;

    double s = 0.0;
    for (int w : patch) {
      Vec2 d = m.points[w] - m.points[v];
      s = std::max(s, std::max(std::fabs(d.x), std::fabs(d.y)));
    }
    if (s == 0.0) continue;

    // rows [1, x, y, x^2/2, xy, y^2/2] in coordinates scaled by the patch size
    int np = static_cast<int>(patch.size());
    std::vector<double> rows(np * 6);
    std::vector<double> normal(36, 0.0), rhs(6, 0.0);
    for (int i = 0; i < np; ++i) {
      Vec2 d = (m.points[patch[i]] - m.points[v]) / s;
      double* r = &rows[i * 6];
      r[0] = 1.0;
      r[1] = d.x;
      r[2] = d.y;
      r[3] = 0.5 * d.x * d.x;
      r[4] = d.x * d.y;
      r[5] = 0.5 * d.y * d.y;
      for (int a = 0; a < 6; ++a) {
        rhs[a] += r[a] * u.v[patch[i]];
        for (int b = 0; b < 6; ++b) normal[a * 6 + b] += r[a] * r[b];
      }
    }

    std::vector<double> ev = internal::sym_eigenvalues(normal, 6);
    double lo = ev[0], hi = ev[0];
    for (double e : ev) {
      lo = std::min(lo, e);
      hi = std::max(hi, e);
    }
    if (!(lo > 0.0) || hi / lo >= 1e8) continue;

    std::vector<double> coef =
        internal::dense_solve(std::move(normal), std::move(rhs), "singular quadratic fit");
    h = SymMat2{coef[3] / (s * s), coef[4] / (s * s), coef[5] / (s * s)};
    return true;
  }
  return false;
}

}  // namespace

ElementHessianField recover_qls(const NodalField& u, const Mesh& m, QlsStats* stats,
                                int threads) {
  if (static_cast<int>(u.v.size()) != m.vertex_count())
    throw MeshError("field size does not match the mesh");
  if (m.vertex_count() < 6)
    throw MeshError("quadratic recovery needs at least 6 vertices");
  EdgeTable et = build_edge_table(m);
  threads = resolve_threads(threads);

  int nv = m.vertex_count();
  std::vector<SymMat2> vtx(nv, SymMat2{});
  std::vector<int> fallbacks(std::max(1, std::min(threads, nv)), 0);
  parallel_chunks(nv, threads, [&](int chunk, int begin, int end) {
    for (int v = begin; v < end; ++v)
      if (!fit_vertex_quadratic(u, m, et, v, vtx[v])) fallbacks[chunk] += 1;
  });
  if (stats) {
    stats->fallback_vertices = 0;
    for (int f : fallbacks) stats->fallback_vertices += f;
  }

  ElementHessianField out;
  out.h.reserve(m.triangle_count());
  for (const auto& t : m.tris) out.h.push_back(mean_of_vertices(vtx, t));
  return out;
}

ElementHessianField recover_variational(const NodalField& u, const Mesh& m) {
  if (static_cast<int>(u.v.size()) != m.vertex_count())
    throw MeshError("field size does not match the mesh");
  int nv = m.vertex_count();
  std::vector<double> lump(nv, 0.0);
  std::vector<double> rxx(nv, 0.0), rxy(nv, 0.0), ryy(nv, 0.0);

  for (int k = 0; k < m.triangle_count(); ++k) {
    TriGeometry g = tri_geometry(m, k);
    const auto& tv = m.tris[k].v;
    Vec2 gu{0.0, 0.0};
    for (int i = 0; i < 3; ++i) gu += u.v[tv[i]] * g.grad[i];
    for (int i = 0; i < 3; ++i) {
      lump[tv[i]] += g.area / 3.0;
      rxx[tv[i]] -= gu.x * g.grad[i].x * g.area;
      ryy[tv[i]] -= gu.y * g.grad[i].y * g.area;
      rxy[tv[i]] -= 0.5 * (gu.x * g.grad[i].y + gu.y * g.grad[i].x) * g.area;
    }
  }

  // boundary flux term of the integration by parts; keeps the recovery exact
  // on globally linear data (interior hats never see it)
  EdgeTable et = build_edge_table(m);
  for (int ei = 0; ei < et.edge_count(); ++ei) {
    const auto& e = et.edges[ei];
    if (!e.boundary) continue;
    int k = e.t0;
    TriGeometry g = tri_geometry(m, k);
    const auto& tv = m.tris[k].v;
    Vec2 gu{0.0, 0.0};
    for (int i = 0; i < 3; ++i) gu += u.v[tv[i]] * g.grad[i];
    int j = 0;
    while (et.tri_edges[k][j] != ei) ++j;
    Vec2 d = m.points[tv[(j + 2) % 3]] - m.points[tv[(j + 1) % 3]];
    Vec2 n{d.y, -d.x};  // outward for counterclockwise elements, length |e|
    for (int vidx : {e.a, e.b}) {
      rxx[vidx] += 0.5 * gu.x * n.x;
      ryy[vidx] += 0.5 * gu.y * n.y;
      rxy[vidx] += 0.25 * (gu.x * n.y + gu.y * n.x);
    }
  }

  std::vector<SymMat2> vtx(nv);
  for (int v = 0; v < nv; ++v) {
    if (!(lump[v] > 0.0)) throw MeshError("vertex " + std::to_string(v) + " has no area support");
    vtx[v] = SymMat2{rxx[v] / lump[v], rxy[v] / lump[v], ryy[v] / lump[v]};
  }

  ElementHessianField out;
  out.h.reserve(m.triangle_count());
  for (const auto& t : m.tris) out.h.push_back(mean_of_vertices(vtx, t));
  return out;
}

ElementHessianField exact_hessian(const ProblemSpec& p, const Mesh& m) {
  if (!p.exact_hessian)
    throw ConfigError("problem '" + p.name + "' has no analytic Hessian");
  ElementHessianField out;
  out.h.reserve(m.triangle_count());
  for (const auto& t : m.tris) {
    Vec2 c = (m.points[t.v[0]] + m.points[t.v[1]] + m.points[t.v[2]]) / 3.0;
    out.h.push_back(p.exact_hessian(c));
  }
  return out;
}

}  // namespace aniso
