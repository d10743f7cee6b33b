#include "anisoadapt/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <unordered_map>

#include "anisoadapt/errors.hpp"

namespace aniso {

double signed_area(const Mesh& m, int k) {
  const Tri& t = m.tris[k];
  Vec2 p0 = m.points[t.v[0]], p1 = m.points[t.v[1]], p2 = m.points[t.v[2]];
  return 0.5 * cross(p1 - p0, p2 - p0);
}

double mesh_area(const Mesh& m) {
  double s = 0.0;
  for (int k = 0; k < m.triangle_count(); ++k) s += triangle_area(m, k);
  return s;
}

void normalize_orientation(Mesh& m) {
  for (auto& t : m.tris) {
    Vec2 p0 = m.points[t.v[0]], p1 = m.points[t.v[1]], p2 = m.points[t.v[2]];
    if (cross(p1 - p0, p2 - p0) < 0.0) std::swap(t.v[1], t.v[2]);
  }
}

namespace {

// Unit-area equilateral reference triangle (0,0), (a,0), (a/2, a*sqrt(3)/2)
// with a^2 = 4/sqrt(3). The inverse of its edge matrix is constant.
const Mat2& ref_inverse() {
  static const Mat2 inv = [] {
    double a = 2.0 / std::pow(3.0, 0.25);
    Mat2 t{a, 0.5 * a, 0.0, 0.5 * std::sqrt(3.0) * a};
    return t.inverse();
  }();
  return inv;
}

uint64_t edge_key(int a, int b) {
  if (a > b) std::swap(a, b);
  return (static_cast<uint64_t>(a) << 32) | static_cast<uint32_t>(b);
}

}  // namespace

AffineMap affine_map(const Mesh& m, int k) {
  const Tri& t = m.tris[k];
  Vec2 p0 = m.points[t.v[0]], p1 = m.points[t.v[1]], p2 = m.points[t.v[2]];
  Mat2 tk{p1.x - p0.x, p2.x - p0.x, p1.y - p0.y, p2.y - p0.y};
  AffineMap a;
  a.f = tk * ref_inverse();
  a.area = 0.5 * tk.det();
  return a;
}

TriGeometry tri_geometry(const Mesh& m, int k) {
  const Tri& t = m.tris[k];
  Vec2 p[3] = {m.points[t.v[0]], m.points[t.v[1]], m.points[t.v[2]]};
  TriGeometry g;
  double a2 = cross(p[1] - p[0], p[2] - p[0]);  // 2 * signed area
  g.area = 0.5 * a2;
  for (int i = 0; i < 3; ++i) g.grad[i] = perp(p[(i + 2) % 3] - p[(i + 1) % 3]) / a2;
  return g;
}

int EdgeTable::find(int a, int b) const {
  if (a > b) std::swap(a, b);
  auto it = std::lower_bound(edges.begin(), edges.end(), std::pair{a, b},
                             [](const Edge& e, std::pair<int, int> k) {
                               return std::pair{e.a, e.b} < k;
                             });
  if (it == edges.end() || it->a != a || it->b != b) return -1;
  return static_cast<int>(it - edges.begin());
}

EdgeTable build_edge_table(const Mesh& m) {
  EdgeTable et;
  std::map<std::pair<int, int>, int> index;  // ordered: lexicographic edge ids
  auto get = [&](int a, int b) {
    if (a > b) std::swap(a, b);
    auto [it, fresh] = index.try_emplace({a, b}, -1);
    return it;
  };
  for (int k = 0; k < m.triangle_count(); ++k)
    for (int j = 0; j < 3; ++j) get(m.tris[k].v[(j + 1) % 3], m.tris[k].v[(j + 2) % 3]);
  for (const auto& e : m.edges) get(e.a, e.b);

  et.edges.reserve(index.size());
  for (auto& [key, id] : index) {
    id = static_cast<int>(et.edges.size());
    EdgeTable::Edge e;
    e.a = key.first;
    e.b = key.second;
    et.edges.push_back(e);
  }

  et.tri_edges.resize(m.triangle_count());
  for (int k = 0; k < m.triangle_count(); ++k) {
    for (int j = 0; j < 3; ++j) {
      int id = get(m.tris[k].v[(j + 1) % 3], m.tris[k].v[(j + 2) % 3])->second;
      et.tri_edges[k][j] = id;
      EdgeTable::Edge& e = et.edges[id];
      if (e.t0 < 0)
        e.t0 = k;
      else if (e.t1 < 0)
        e.t1 = k;
      // more than two adjacent triangles is reported by validate()
    }
  }
  for (const auto& rec : m.edges) {
    EdgeTable::Edge& e = et.edges[get(rec.a, rec.b)->second];
    e.recorded = true;
    e.tag = rec.tag;
  }
  for (auto& e : et.edges) e.boundary = (e.t1 < 0 && e.t0 >= 0);

  et.vtx_ptr.assign(m.vertex_count() + 1, 0);
  for (const auto& e : et.edges) {
    if (e.a >= 0 && e.a < m.vertex_count()) ++et.vtx_ptr[e.a + 1];
    if (e.b >= 0 && e.b < m.vertex_count()) ++et.vtx_ptr[e.b + 1];
  }
  for (int v = 0; v < m.vertex_count(); ++v) et.vtx_ptr[v + 1] += et.vtx_ptr[v];
  et.vtx_edges.resize(et.vtx_ptr.back());
  std::vector<int> cur(et.vtx_ptr.begin(), et.vtx_ptr.end() - 1);
  for (int id = 0; id < et.edge_count(); ++id) {
    const auto& e = et.edges[id];
    if (e.a >= 0 && e.a < m.vertex_count()) et.vtx_edges[cur[e.a]++] = id;
    if (e.b >= 0 && e.b < m.vertex_count()) et.vtx_edges[cur[e.b]++] = id;
  }
  return et;
}

Mesh uniform_refine(const Mesh& m, std::vector<std::array<int, 2>>* parents) {
  Mesh out;
  out.points = m.points;
  out.point_tags = m.point_tags;
  out.point_tags.resize(m.points.size(), 0);
  if (parents) {
    parents->clear();
    parents->reserve(m.points.size() * 2);
    for (int v = 0; v < m.vertex_count(); ++v) parents->push_back({v, v});
  }

  std::map<std::pair<int, int>, int> mid;
  auto midpoint = [&](int a, int b) {
    if (a > b) std::swap(a, b);
    auto [it, fresh] = mid.try_emplace({a, b}, -1);
    if (fresh) {
      it->second = static_cast<int>(out.points.size());
      out.points.push_back((m.points[a] + m.points[b]) / 2.0);
      out.point_tags.push_back(0);
      if (parents) parents->push_back({a, b});
    }
    return it->second;
  };

  out.tris.reserve(m.tris.size() * 4);
  for (const Tri& t : m.tris) {
    int m01 = midpoint(t.v[0], t.v[1]);
    int m12 = midpoint(t.v[1], t.v[2]);
    int m20 = midpoint(t.v[2], t.v[0]);
    out.tris.push_back({{t.v[0], m01, m20}, t.region});
    out.tris.push_back({{t.v[1], m12, m01}, t.region});
    out.tris.push_back({{t.v[2], m20, m12}, t.region});
    out.tris.push_back({{m01, m12, m20}, t.region});
  }

  out.edges.reserve(m.edges.size() * 2);
  for (const MeshEdge& e : m.edges) {
    int c = midpoint(e.a, e.b);
    out.edges.push_back({e.a, c, e.tag});
    out.edges.push_back({c, e.b, e.tag});
  }
  return out;
}

std::vector<Defect> validate(const Mesh& m) {
  std::vector<Defect> out;
  int nv = m.vertex_count();

  for (int k = 0; k < m.triangle_count(); ++k) {
    const Tri& t = m.tris[k];
    bool bad = false;
    for (int j = 0; j < 3; ++j)
      if (t.v[j] < 0 || t.v[j] >= nv) bad = true;
    if (t.v[0] == t.v[1] || t.v[1] == t.v[2] || t.v[0] == t.v[2]) bad = true;
    if (bad) {
      out.push_back({DefectKind::BadIndex, k, "triangle with invalid vertex indices"});
      continue;
    }
  }
  for (size_t i = 0; i < m.edges.size(); ++i) {
    const MeshEdge& e = m.edges[i];
    if (e.a < 0 || e.a >= nv || e.b < 0 || e.b >= nv || e.a == e.b)
      out.push_back({DefectKind::BadIndex, static_cast<int>(i), "edge record with invalid vertex indices"});
  }
  if (!out.empty()) return out;  // everything below assumes indices are sane

  {
    std::map<std::pair<double, double>, int> first;
    for (int v = 0; v < nv; ++v) {
      auto [it, fresh] = first.try_emplace({m.points[v].x, m.points[v].y}, v);
      if (!fresh)
        out.push_back({DefectKind::DuplicateVertex, v,
                       "vertex coincides with vertex " + std::to_string(it->second)});
    }
  }

  std::vector<char> used(nv, 0);
  for (const auto& t : m.tris)
    for (int j = 0; j < 3; ++j) used[t.v[j]] = 1;
  for (int v = 0; v < nv; ++v)
    if (!used[v]) out.push_back({DefectKind::UnreferencedVertex, v, "vertex not used by any triangle"});

  double scale = 0.0;
  for (const auto& p : m.points) scale = std::max({scale, std::abs(p.x), std::abs(p.y)});
  double area_floor = 1e-14 * std::max(1.0, scale * scale);
  for (int k = 0; k < m.triangle_count(); ++k) {
    double a = signed_area(m, k);
    if (a < 0.0)
      out.push_back({DefectKind::InvertedTriangle, k, "negative signed area"});
    else if (a <= area_floor)
      out.push_back({DefectKind::DegenerateTriangle, k, "vanishing area"});
  }

  // adjacency and orientation consistency
  std::map<std::pair<int, int>, int> seen;  // directed edge -> triangle
  std::map<std::pair<int, int>, int> count; // undirected edge -> multiplicity
  for (int k = 0; k < m.triangle_count(); ++k) {
    const Tri& t = m.tris[k];
    for (int j = 0; j < 3; ++j) {
      int a = t.v[(j + 1) % 3], b = t.v[(j + 2) % 3];
      auto [it, fresh] = seen.try_emplace({a, b}, k);
      if (!fresh)
        out.push_back({DefectKind::InconsistentOrientation, k,
                       "edge traversed twice in the same direction (other triangle " +
                           std::to_string(it->second) + ")"});
      ++count[{std::min(a, b), std::max(a, b)}];
    }
  }
  for (const auto& [key, c] : count)
    if (c > 2)
      out.push_back({DefectKind::NonManifoldEdge, key.first,
                     "edge " + std::to_string(key.first) + "-" + std::to_string(key.second) +
                         " shared by " + std::to_string(c) + " triangles"});

  for (size_t i = 0; i < m.edges.size(); ++i) {
    const MeshEdge& e = m.edges[i];
    if (!count.count({std::min(e.a, e.b), std::max(e.a, e.b)}))
      out.push_back({DefectKind::DanglingEdgeRecord, static_cast<int>(i),
                     "recorded edge is not an edge of the triangulation"});
  }
  {
    std::map<std::pair<int, int>, char> recorded;
    for (const auto& e : m.edges) recorded[{std::min(e.a, e.b), std::max(e.a, e.b)}] = 1;
    for (const auto& [key, c] : count)
      if (c == 1 && !recorded.count(key))
        out.push_back({DefectKind::MissingBoundaryTag, key.first,
                       "boundary edge " + std::to_string(key.first) + "-" +
                           std::to_string(key.second) + " has no side record"});
  }
  return out;
}

}  // namespace aniso
