#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>

#include "anisoadapt/errors.hpp"
#include "anisoadapt/problems.hpp"
#include "anisoadapt/remesh.hpp"
#include "support/oracles.hpp"

using namespace aniso;

namespace {

Mesh two_tri_square() {
  Mesh m;
  m.points = {{0, 0}, {1, 0}, {1, 1}, {0, 1}};
  m.point_tags = {0, 0, 0, 0};
  m.tris = {{{0, 1, 2}, 0}, {{0, 2, 3}, 0}};
  m.edges = {{3, 0, 1}, {2, 3, 2}, {1, 2, 3}, {0, 1, 4}};
  return m;
}

VertexMetricField const_field(const Mesh& m, const SymMat2& s) {
  VertexMetricField vm;
  vm.m.assign(m.points.size(), s);
  return vm;
}

// records every boundary (single-triangle) edge with tag 1
void record_boundary(Mesh& m) {
  std::map<std::pair<int, int>, int> count;
  for (const Tri& t : m.tris)
    for (int j = 0; j < 3; ++j) {
      int a = t.v[(j + 1) % 3], b = t.v[(j + 2) % 3];
      ++count[{std::min(a, b), std::max(a, b)}];
    }
  for (const auto& [k, c] : count)
    if (c == 1) m.edges.push_back({k.first, k.second, 1});
}

Mesh equilateral_patch(int nx, int ny, double a) {
  double h = a * std::sqrt(3.0) / 2.0;
  Mesh m;
  for (int r = 0; r <= ny; ++r)
    for (int i = 0; i <= nx; ++i)
      m.points.push_back({(i + (r % 2 ? 0.5 : 0.0)) * a, r * h});
  m.point_tags.assign(m.points.size(), 0);
  auto at = [&](int r, int i) { return r * (nx + 1) + i; };
  for (int r = 0; r < ny; ++r)
    for (int i = 0; i < nx; ++i) {
      if (r % 2 == 0) {
        m.tris.push_back({{at(r, i), at(r, i + 1), at(r + 1, i)}, 0});
        m.tris.push_back({{at(r + 1, i), at(r, i + 1), at(r + 1, i + 1)}, 0});
      } else {
        m.tris.push_back({{at(r, i), at(r, i + 1), at(r + 1, i + 1)}, 0});
        m.tris.push_back({{at(r, i), at(r + 1, i + 1), at(r + 1, i)}, 0});
      }
    }
  record_boundary(m);
  return m;
}

// 4x4 unit-square lattice split into left/right regions along x = 0.5;
// when tag9 is set the four interface edges are recorded constraints
Mesh two_region_square(bool tag9) {
  Mesh m = structured_rect_mesh(0, 0, 1, 1, 4, 4);
  for (Tri& t : m.tris) {
    double bx = (m.points[t.v[0]].x + m.points[t.v[1]].x + m.points[t.v[2]].x) / 3.0;
    t.region = bx < 0.5 ? 1 : 2;
  }
  if (tag9) {
    auto v = [](int i, int j) { return j * 5 + i; };
    for (int j = 0; j < 4; ++j) m.edges.push_back({v(2, j), v(2, j + 1), 9});
  }
  return m;
}

double max_aspect(const Mesh& m) {
  double worst = 0.0;
  for (int k = 0; k < m.triangle_count(); ++k) {
    double lmax = 0.0;
    for (int j = 0; j < 3; ++j) {
      Vec2 e = m.points[m.tris[k].v[(j + 1) % 3]] - m.points[m.tris[k].v[j]];
      lmax = std::max(lmax, norm(e));
    }
    worst = std::max(worst, lmax * lmax / (2.0 * triangle_area(m, k)));
  }
  return worst;
}

double region_area(const Mesh& m, int region) {
  double a = 0.0;
  for (int k = 0; k < m.triangle_count(); ++k)
    if (m.tris[k].region == region) a += triangle_area(m, k);
  return a;
}

double tagged_length(const Mesh& m, int tag) {
  double l = 0.0;
  for (const MeshEdge& e : m.edges)
    if (e.tag == tag) l += norm(m.points[e.b] - m.points[e.a]);
  return l;
}

bool same_mesh(const Mesh& a, const Mesh& b) {
  if (a.points.size() != b.points.size() || a.tris.size() != b.tris.size() ||
      a.edges.size() != b.edges.size())
    return false;
  for (size_t i = 0; i < a.points.size(); ++i)
    if (a.points[i].x != b.points[i].x || a.points[i].y != b.points[i].y ||
        a.point_tags[i] != b.point_tags[i])
      return false;
  for (size_t i = 0; i < a.tris.size(); ++i)
    if (a.tris[i].v != b.tris[i].v || a.tris[i].region != b.tris[i].region) return false;
  for (size_t i = 0; i < a.edges.size(); ++i)
    if (a.edges[i].a != b.edges[i].a || a.edges[i].b != b.edges[i].b ||
        a.edges[i].tag != b.edges[i].tag)
      return false;
  return true;
}

}  // namespace

TEST_CASE("metric edge length") {
  SymMat2 eye{1, 0, 1};
  CHECK(metric_edge_length({0, 0}, {1, 0}, eye, eye) == 1.0);
  CHECK(metric_edge_length({0, 0}, {1, 0}, {4, 0, 4}, {4, 0, 4}) == 2.0);
  CHECK(metric_edge_length({0, 0}, {1, 0}, eye, {9, 0, 9}) == 2.0);
  CHECK(metric_edge_length({1, 1}, {1.6, 1.8}, eye, eye) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(metric_edge_length({0, 0}, {1, 0}, {4, 0, 1}, {4, 0, 1}) == 2.0);
  CHECK(metric_edge_length({0, 0}, {0, 1}, {4, 0, 1}, {4, 0, 1}) == 1.0);
}

TEST_CASE("edge split") {
  SymMat2 eye{1, 0, 1};

  SUBCASE("interior diagonal") {
    Mesh m = two_tri_square();
    WorkMesh w(m, const_field(m, eye));
    CHECK(w.split_edge(0, 2));
    CHECK(w.alive_triangles() == 4);
    Mesh out = w.extract();
    CHECK(validate(out).empty());
    CHECK(out.vertex_count() == 5);
    CHECK(out.points[4].x == 0.5);
    CHECK(out.points[4].y == 0.5);
    CHECK(out.edges.size() == 4);
    CHECK_FALSE(w.split_edge(0, 2));  // edge no longer exists
  }

  SUBCASE("constrained boundary edge, then collapse back") {
    Mesh m = two_tri_square();
    WorkMesh w(m, const_field(m, eye));
    CHECK(w.split_edge(0, 1));
    CHECK(w.alive_triangles() == 3);
    Mesh out = w.extract();
    CHECK(validate(out).empty());
    CHECK(out.vertex_count() == 5);
    CHECK(out.edges.size() == 5);
    CHECK(out.points[4].x == 0.5);
    CHECK(out.points[4].y == 0.0);
    CHECK(out.point_tags[4] == 4);  // inherits the side tag

    CHECK(w.collapse_edge(4, 1));  // removes the chain vertex again
    out = w.extract();
    CHECK(validate(out).empty());
    CHECK(out.vertex_count() == 4);
    CHECK(out.edges.size() == 4);
    CHECK(w.alive_triangles() == 2);
  }

  SUBCASE("off-center parameter") {
    Mesh m = two_tri_square();
    WorkMesh w(m, const_field(m, eye));
    CHECK(w.split_edge(0, 2, 0.25));
    Mesh out = w.extract();
    CHECK(out.points[4].x == 0.25);
    CHECK(out.points[4].y == 0.25);
    CHECK(validate(out).empty());
    CHECK_FALSE(w.split_edge(0, 4, 0.0));
    CHECK_FALSE(w.split_edge(0, 4, 1.0));
  }
}

TEST_CASE("collapse rules") {
  SymMat2 eye{1, 0, 1};

  SUBCASE("free interior pair") {
    Mesh m = structured_rect_mesh(0, 0, 1, 1, 4, 4);
    WorkMesh w(m, const_field(m, eye));
    int before = w.alive_triangles();
    CHECK(w.collapse_edge(6, 7));
    CHECK(w.alive_triangles() == before - 2);
    CHECK(validate(w.extract()).empty());
  }

  SUBCASE("corner endpoints never collapse") {
    Mesh m = two_tri_square();
    WorkMesh w(m, const_field(m, eye));
    CHECK_FALSE(w.collapse_edge(0, 2));  // interior, but both corners
    CHECK_FALSE(w.collapse_edge(0, 1));  // constrained between corners
  }

  SUBCASE("region boundary blocks unconstrained collapse") {
    Mesh m = two_region_square(false);
    WorkMesh w(m, const_field(m, eye));
    auto v = [](int i, int j) { return j * 5 + i; };
    CHECK_FALSE(w.collapse_edge(v(2, 1), v(2, 2)));
    CHECK_FALSE(w.flip_edge(v(2, 1), v(2, 2), 0.0));
    // the same move along a recorded interface chain is legal
    Mesh mi = two_region_square(true);
    WorkMesh wi(mi, const_field(mi, eye));
    CHECK(wi.collapse_edge(v(2, 1), v(2, 2)));
    Mesh out = wi.extract();
    CHECK(validate(out).empty());
    CHECK(region_area(out, 1) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(region_area(out, 2) == doctest::Approx(0.5).epsilon(1e-12));
  }
}

TEST_CASE("flip rules") {
  SymMat2 eye{1, 0, 1};
  Mesh m;
  m.points = {{0, 0}, {2, 0}, {3, 1}, {1, 1}};
  m.point_tags = {0, 0, 0, 0};
  m.tris = {{{0, 1, 2}, 0}, {{0, 2, 3}, 0}};
  m.edges = {{0, 1, 1}, {1, 2, 2}, {2, 3, 3}, {3, 0, 4}};

  SUBCASE("long diagonal flips once") {
    WorkMesh w(m, const_field(m, eye));
    CHECK(w.flip_edge(0, 2, 0.01));
    CHECK(w.alive_triangles() == 2);
    Mesh out = w.extract();
    CHECK(validate(out).empty());
    CHECK(out.edges.size() == 4);
    CHECK_FALSE(w.flip_edge(0, 2, 0.01));  // gone
    CHECK_FALSE(w.flip_edge(1, 3, 0.01));  // would make things worse
  }

  SUBCASE("constrained edge never flips") {
    WorkMesh w(m, const_field(m, eye));
    CHECK_FALSE(w.flip_edge(0, 1, 0.0));
  }

  SUBCASE("region boundary never flips") {
    Mesh m2 = m;
    m2.tris[1].region = 1;
    WorkMesh w(m2, const_field(m2, eye));
    CHECK_FALSE(w.flip_edge(0, 2, 0.0));
  }
}

TEST_CASE("smoothing") {
  SymMat2 eye{1, 0, 1};

  SUBCASE("free vertex relaxes toward its star") {
    Mesh m = structured_rect_mesh(0, 0, 1, 1, 4, 4);
    Vec2 home = m.points[6];
    m.points[6] = {0.30, 0.35};
    WorkMesh w(m, const_field(m, eye));
    double before = norm(m.points[6] - home);
    CHECK(w.smooth_vertex(6, 1.0));
    Mesh out = w.extract();
    CHECK(norm(out.points[6] - home) < before);
    CHECK(validate(out).empty());
  }

  SUBCASE("chain vertex slides along its polyline") {
    Mesh m = structured_rect_mesh(0, 0, 1, 1, 4, 4);
    m.points[2] = {0.45, 0.0};  // bottom side, between (0.25,0) and (0.75,0)
    WorkMesh w(m, const_field(m, eye));
    CHECK(w.smooth_vertex(2, 1.0));
    Mesh out = w.extract();
    CHECK(out.points[2].y == 0.0);
    CHECK(out.points[2].x == doctest::Approx(0.55).epsilon(1e-14));
  }

  SUBCASE("corners and bad arguments stay put") {
    Mesh m = structured_rect_mesh(0, 0, 1, 1, 4, 4);
    WorkMesh w(m, const_field(m, eye));
    CHECK_FALSE(w.smooth_vertex(0, 0.5));    // corner
    CHECK_FALSE(w.smooth_vertex(-1, 0.5));   // out of range
    CHECK_FALSE(w.smooth_vertex(999, 0.5));  // out of range
    CHECK_FALSE(w.smooth_vertex(6, 0.0));    // no step
    CHECK_FALSE(w.smooth_vertex(6, 1.5));    // over-relaxation rejected
  }
}

TEST_CASE("uniform metric hits the encoded element count") {
  Mesh m = structured_rect_mesh(0, 0, 1, 1, 8, 8);
  RemeshResult r = adapt_mesh(m, const_field(m, {600, 0, 600}));

  CHECK(r.converged);
  CHECK(r.warning.empty());
  CHECK(r.in_band >= 0.9);
  CHECK(validate(r.mesh).empty());
  CHECK(r.mesh.triangle_count() >= 420);
  CHECK(r.mesh.triangle_count() <= 780);
  CHECK(max_aspect(r.mesh) < 3.0);
  CHECK(mesh_area(r.mesh) == doctest::Approx(1.0).epsilon(1e-10));

  for (int tag = 1; tag <= 4; ++tag)
    CHECK(tagged_length(r.mesh, tag) == doctest::Approx(1.0).epsilon(1e-12));
  for (const MeshEdge& e : r.mesh.edges) {
    for (int v : {e.a, e.b}) {
      Vec2 p = r.mesh.points[v];
      double off = e.tag == 1   ? std::abs(p.x)
                   : e.tag == 2 ? std::abs(p.y - 1.0)
                   : e.tag == 3 ? std::abs(p.x - 1.0)
                                : std::abs(p.y);
      CHECK(off <= 1e-12);
    }
  }
  for (Vec2 corner : {Vec2{0, 0}, Vec2{1, 0}, Vec2{1, 1}, Vec2{0, 1}}) {
    int hits = 0;
    for (const Vec2& p : r.mesh.points)
      if (p.x == corner.x && p.y == corner.y) ++hits;
    CHECK(hits == 1);
  }
}

TEST_CASE("anisotropic metric makes thin aligned elements") {
  Mesh m = structured_rect_mesh(0, 0, 1, 1, 8, 8);
  RemeshResult r = adapt_mesh(m, const_field(m, {8000, 0, 20}));

  CHECK(r.converged);
  CHECK(validate(r.mesh).empty());
  CHECK(r.mesh.triangle_count() >= 280);  // density integral is 400
  CHECK(r.mesh.triangle_count() <= 520);
  CHECK(mesh_area(r.mesh) == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(max_aspect(r.mesh) > 10.0);

  int tall = 0;
  for (const Tri& t : r.mesh.tris) {
    Vec2 lmax{0, 0};
    for (int j = 0; j < 3; ++j) {
      Vec2 e = r.mesh.points[t.v[(j + 1) % 3]] - r.mesh.points[t.v[j]];
      if (norm(e) > norm(lmax)) lmax = e;
    }
    if (std::abs(lmax.y) > std::abs(lmax.x)) ++tall;
  }
  CHECK(tall >= static_cast<int>(0.9 * r.mesh.triangle_count()));
}

TEST_CASE("matched equilateral mesh is a fixed point") {
  double a = 0.8;
  Mesh m = equilateral_patch(6, 4, a);
  double c = 4.0 / (std::sqrt(3.0) * a * a);
  RemeshResult r = adapt_mesh(m, const_field(m, {c, 0, c}));

  CHECK(r.passes == 1);
  CHECK(r.converged);
  CHECK(r.in_band == 1.0);
  CHECK(r.mesh.triangle_count() == m.triangle_count());
  CHECK(r.mesh.vertex_count() == m.vertex_count());
  for (int v = 0; v < m.vertex_count(); ++v)
    CHECK(norm(r.mesh.points[v] - m.points[v]) <= 1e-12);
}

TEST_CASE("interface and regions survive adaptation") {
  Mesh m = two_region_square(true);
  RemeshResult r = adapt_mesh(m, const_field(m, {300, 0, 300}));

  CHECK(r.converged);
  CHECK(validate(r.mesh).empty());
  CHECK(region_area(r.mesh, 1) == doctest::Approx(0.5).epsilon(1e-10));
  CHECK(region_area(r.mesh, 2) == doctest::Approx(0.5).epsilon(1e-10));
  CHECK(tagged_length(r.mesh, 9) == doctest::Approx(1.0).epsilon(1e-12));

  for (const MeshEdge& e : r.mesh.edges)
    if (e.tag == 9) {
      CHECK(std::abs(r.mesh.points[e.a].x - 0.5) <= 1e-12);
      CHECK(std::abs(r.mesh.points[e.b].x - 0.5) <= 1e-12);
    }
  for (const Tri& t : r.mesh.tris) {
    double bx =
        (r.mesh.points[t.v[0]].x + r.mesh.points[t.v[1]].x + r.mesh.points[t.v[2]].x) / 3.0;
    CHECK((bx < 0.5) == (t.region == 1));
  }

  RemeshResult again = adapt_mesh(m, const_field(m, {300, 0, 300}));
  CHECK(same_mesh(r.mesh, again.mesh));
  CHECK(again.passes == r.passes);
}

TEST_CASE("rejects bad input") {
  Mesh m = two_tri_square();
  VertexMetricField eye = const_field(m, {1, 0, 1});

  RemeshConfig bad;
  bad.l_min = 0.0;
  CHECK_THROWS_AS(adapt_mesh(m, eye, bad), ConfigError);
  bad = {};
  bad.l_min = 1.0;
  CHECK_THROWS_AS(adapt_mesh(m, eye, bad), ConfigError);
  bad = {};
  bad.l_max = 1.0;
  CHECK_THROWS_AS(adapt_mesh(m, eye, bad), ConfigError);
  bad = {};
  bad.max_passes = 0;
  CHECK_THROWS_AS(adapt_mesh(m, eye, bad), ConfigError);
  bad = {};
  bad.smooth_iters = -1;
  CHECK_THROWS_AS(adapt_mesh(m, eye, bad), ConfigError);
  bad = {};
  bad.flip_margin = -0.01;
  CHECK_THROWS_AS(adapt_mesh(m, eye, bad), ConfigError);

  VertexMetricField short_field;
  short_field.m.assign(3, SymMat2{1, 0, 1});
  CHECK_THROWS_AS(adapt_mesh(m, short_field), MeshError);

  VertexMetricField indefinite = eye;
  indefinite.m[2] = {1, 0, -1};
  CHECK_THROWS_AS(adapt_mesh(m, indefinite), ConfigError);

  Mesh unrecorded = m;
  unrecorded.edges.pop_back();
  CHECK_THROWS_AS(adapt_mesh(unrecorded, eye), MeshError);

  Mesh dangling = m;
  dangling.edges.push_back({1, 3, 7});  // not an edge of any triangle
  CHECK_THROWS_AS(adapt_mesh(dangling, eye), MeshError);

  Mesh inverted = m;
  std::swap(inverted.tris[0].v[1], inverted.tris[0].v[2]);
  CHECK_THROWS_AS(adapt_mesh(inverted, eye), MeshError);

  Mesh fan;
  fan.points = {{0, 0}, {1, 0}, {0.5, 1}, {0.5, -1}, {0.5, 2}};
  fan.point_tags = {0, 0, 0, 0, 0};
  fan.tris = {{{0, 1, 2}, 0}, {{1, 0, 3}, 0}, {{0, 1, 4}, 0}};
  VertexMetricField five;
  five.m.assign(5, SymMat2{1, 0, 1});
  CHECK_THROWS_AS(adapt_mesh(fan, five), MeshError);  // three triangles on (0,1)
}

TEST_CASE("starved pass budget returns best effort and a warning") {
  Mesh m = structured_rect_mesh(0, 0, 1, 1, 2, 2);
  RemeshConfig cfg;
  cfg.max_passes = 1;
  RemeshResult r = adapt_mesh(m, const_field(m, {50000, 0, 50000}), cfg);

  CHECK_FALSE(r.converged);
  CHECK_FALSE(r.warning.empty());
  CHECK(r.in_band < 0.9);
  CHECK(r.passes == 1);
  CHECK(validate(r.mesh).empty());
  CHECK(mesh_area(r.mesh) == doctest::Approx(1.0).epsilon(1e-10));
}
