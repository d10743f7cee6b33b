#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "anisoadapt/errors.hpp"
#include "anisoadapt/fem.hpp"
#include "anisoadapt/mesh.hpp"
#include "anisoadapt/problems.hpp"
#include "support/oracles.hpp"

using namespace aniso;

namespace {

Mesh two_triangle_square() {
  Mesh m;
  m.points = {{0, 0}, {1, 0}, {1, 1}, {0, 1}};
  m.point_tags = {0, 0, 0, 0};
  m.tris = {{{0, 1, 2}, 0}, {{0, 2, 3}, 0}};
  m.edges = {{0, 1, 4}, {1, 2, 3}, {2, 3, 2}, {3, 0, 1}};
  return m;
}

// all-Dirichlet problem on a single region with the exact trace as data
ProblemSpec dirichlet_problem(ScalarFn exact, ScalarFn f, SymMat2 d = SymMat2::identity()) {
  ProblemSpec p;
  p.name = "test";
  p.diffusion[0] = d;
  if (f) p.source[0] = f;
  for (int tag : {1, 2, 3, 4})
    p.boundary[tag] = BoundaryCondition{BcType::Dirichlet, exact, 0.0};
  p.exact = exact;
  return p;
}

// barycentric coordinates evaluated from scratch (cross-product areas)
struct BaryEval {
  Vec2 p0, p1, p2;
  double a2;
  BaryEval(const Mesh& m, int k)
      : p0(m.points[m.tris[k].v[0]]),
        p1(m.points[m.tris[k].v[1]]),
        p2(m.points[m.tris[k].v[2]]),
        a2(cross(p1 - p0, p2 - p0)) {}
  double l(int i, Vec2 x) const {
    if (i == 0) return cross(p1 - x, p2 - x) / a2;
    if (i == 1) return cross(p2 - x, p0 - x) / a2;
    return cross(p0 - x, p1 - x) / a2;
  }
  double basis(int i, Vec2 x) const {
    if (i < 3) return l(i, x);
    int j = i - 3;
    return 4.0 * l((j + 1) % 3, x) * l((j + 2) % 3, x);
  }
  Vec2 basis_grad(int i, Vec2 x) const {
    Vec2 g0 = perp(p2 - p1) / a2, g1 = perp(p0 - p2) / a2, g2 = perp(p1 - p0) / a2;
    Vec2 g[3] = {g0, g1, g2};
    if (i < 3) return g[i];
    int j = i - 3, a = (j + 1) % 3, b = (j + 2) % 3;
    return 4.0 * (l(a, x) * g[b] + l(b, x) * g[a]);
  }
};

double linf_vertex_error(const NodalField& u, const ProblemSpec& p, const Mesh& m) {
  double e = 0.0;
  for (int i = 0; i < m.vertex_count(); ++i)
    e = std::max(e, std::fabs(u.v[i] - p.exact(m.points[i])));
  return e;
}

}  // namespace

TEST_CASE("element operator matches brute-force integration on a random element") {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Mesh m;
  m.points = {{0.13, -0.07}, {1.02, 0.31}, {0.35, 0.88}};
  m.point_tags = {0, 0, 0};
  m.tris = {{{0, 1, 2}, 0}};
  SymMat2 d{1.7, 0.4, 0.9};

  double a[6][6];
  element_operator(m, 0, d, a);
  BaryEval be(m, 0);
  for (int i = 0; i < 6; ++i) {
    for (int j = 0; j < 6; ++j) {
      double ref = oracle::refine_integrate(
          be.p0, be.p1, be.p2,
          [&](Vec2 x) { return dot(d * be.basis_grad(i, x), be.basis_grad(j, x)); }, 4);
      CHECK(a[i][j] == doctest::Approx(ref).epsilon(1e-12));
    }
  }

  SUBCASE("hat-column sums vanish because hat gradients sum to zero") {
    for (int i = 0; i < 6; ++i) CHECK(std::fabs(a[i][0] + a[i][1] + a[i][2]) < 1e-14);
  }
  SUBCASE("symmetry") {
    for (int i = 0; i < 6; ++i)
      for (int j = 0; j < i; ++j) CHECK(a[i][j] == a[j][i]);
  }
}

TEST_CASE("hat stiffness of the unit right triangle") {
  Mesh m;
  m.points = {{0, 0}, {1, 0}, {0, 1}};
  m.point_tags = {0, 0, 0};
  m.tris = {{{0, 1, 2}, 0}};
  double a[6][6];
  element_operator(m, 0, SymMat2::identity(), a);
  const double ref[3][3] = {{1.0, -0.5, -0.5}, {-0.5, 0.5, 0.0}, {-0.5, 0.0, 0.5}};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) CHECK(a[i][j] == doctest::Approx(ref[i][j]).epsilon(1e-14));
}

TEST_CASE("element load: unit source integrates every basis function to area/3") {
  Mesh m;
  m.points = {{0.2, 0.1}, {1.4, 0.3}, {0.6, 1.1}};
  m.point_tags = {0, 0, 0};
  m.tris = {{{0, 1, 2}, 0}};
  double area = triangle_area(m, 0);
  double out[6];
  element_load(
      m, 0, [](Vec2) { return 1.0; }, 1.0, out);
  // int lambda_i = |K|/3 and int 4 lambda_a lambda_b = |K|/3 as well
  double third = 4.0 * oracle::bary_monomial_integral(1, 1, 0) * area;
  CHECK(third == doctest::Approx(area / 3.0).epsilon(1e-15));
  for (int i = 0; i < 6; ++i) CHECK(out[i] == doctest::Approx(area / 3.0).epsilon(1e-14));
}

TEST_CASE("element load matches brute-force integration for a quadratic source") {
  Mesh m;
  m.points = {{-0.2, 0.4}, {0.9, 0.1}, {0.3, 1.2}};
  m.point_tags = {0, 0, 0};
  m.tris = {{{0, 1, 2}, 0}};
  auto f = [](Vec2 x) { return x.x * x.x + 3.0 * x.x * x.y - 2.0 * x.y * x.y + x.x - 7.0; };
  double out[6];
  element_load(m, 0, f, -1.0, out);
  BaryEval be(m, 0);
  for (int i = 0; i < 6; ++i) {
    double ref = -oracle::refine_integrate(
        be.p0, be.p1, be.p2, [&](Vec2 x) { return f(x) * be.basis(i, x); }, 4);
    CHECK(out[i] == doctest::Approx(ref).epsilon(1e-12));
  }
}

TEST_CASE("robin edge kernels match brute-force line integration") {
  Mesh m = two_triangle_square();
  double a[3][3];
  robin_edge_matrix(m, 1, 2, 0.8, a);
  // right side runs from (1,0) to (1,1); parametrize by t
  auto phi = [](int i, double t) {
    return i == 0 ? 1.0 - t : (i == 1 ? t : 4.0 * t * (1.0 - t));
  };
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      // degree <= 4 in t: Simpson-composite oracle over 2000 panels
      double ref = 0.0;
      int n = 2000;
      for (int s = 0; s < n; ++s) {
        double t0 = double(s) / n, t1 = double(s + 1) / n, tm = 0.5 * (t0 + t1);
        auto f = [&](double t) { return 0.8 * phi(i, t) * phi(j, t); };
        ref += (t1 - t0) / 6.0 * (f(t0) + 4.0 * f(tm) + f(t1));
      }
      CHECK(a[i][j] == doctest::Approx(ref).epsilon(1e-12));
    }
  }

  // cubic data keeps the integrand inside the rule's exactness degree
  double g[3];
  robin_edge_load(
      m, 1, 2, [](Vec2 x) { return x.y * x.y * x.y - 2.0 * x.y + 1.0; }, g);
  for (int i = 0; i < 3; ++i) {
    double ref = 0.0;
    int n = 2000;
    for (int s = 0; s < n; ++s) {
      double t0 = double(s) / n, t1 = double(s + 1) / n, tm = 0.5 * (t0 + t1);
      auto f = [&](double t) { return (t * t * t - 2.0 * t + 1.0) * phi(i, t); };
      ref += (t1 - t0) / 6.0 * (f(t0) + 4.0 * f(tm) + f(t1));
    }
    CHECK(g[i] == doctest::Approx(ref).epsilon(1e-10));
  }
}

TEST_CASE("linear Dirichlet data is reproduced exactly") {
  Mesh m = structured_rect_mesh(0, 0, 1, 1, 5, 4);
  auto exact = [](Vec2 x) { return 3.0 * x.x - 2.0 * x.y + 0.5; };
  ProblemSpec p = dirichlet_problem(exact, {}, SymMat2{2.0, 0.3, 1.1});
  SparseSystem sys = assemble(p, m);
  NodalField u = solve_linear(sys);
  CHECK(linf_vertex_error(u, p, m) < 1e-11);
  CHECK(l2_error(u, p, m) < 1e-11);
}

TEST_CASE("solve matches a dense long-double factorization") {
  Mesh m = structured_rect_mesh(0, 0, 1, 1, 6, 6);
  auto exact = [](Vec2 x) { return std::sin(M_PI * x.x) * std::sin(M_PI * x.y); };
  auto f = [](Vec2 x) {
    return 2.0 * M_PI * M_PI * std::sin(M_PI * x.x) * std::sin(M_PI * x.y);
  };
  ProblemSpec p = dirichlet_problem(exact, f);
  SparseSystem sys = assemble(p, m);

  int n = m.vertex_count();
  std::vector<std::vector<long double>> dense(n, std::vector<long double>(n, 0.0L));
  for (int r = 0; r < n; ++r)
    for (int k = sys.a.row_ptr[r]; k < sys.a.row_ptr[r + 1]; ++k)
      dense[r][sys.a.col[k]] += sys.a.val[k];
  std::vector<long double> rhs(sys.b.begin(), sys.b.end());
  std::vector<double> ref = oracle::dense_solve(dense, rhs);

  LinearSolveInfo info;
  NodalField u = solve_linear(sys, &info);
  CHECK(info.residual <= 1e-10);
  for (int i = 0; i < n; ++i) CHECK(u.v[i] == doctest::Approx(ref[i]).epsilon(1e-8));
}

TEST_CASE("Galerkin orthogonality: residual vanishes on the hat test space") {
  Mesh m = structured_rect_mesh(0, 0, 1, 1, 8, 8);
  auto exact = [](Vec2 x) { return std::sin(M_PI * x.x) * std::sin(M_PI * x.y); };
  auto f = [](Vec2 x) {
    return 2.0 * M_PI * M_PI * std::sin(M_PI * x.x) * std::sin(M_PI * x.y);
  };
  ProblemSpec p = dirichlet_problem(exact, f);
  SparseSystem sys = assemble(p, m);
  NodalField u = solve_linear(sys);
  EdgeTable et = build_edge_table(m);

  std::vector<double> w(m.vertex_count(), 0.0);
  HierarchicalField test{&w, nullptr};
  for (int v = 0; v < m.vertex_count(); ++v) {
    if (sys.dirichlet[v]) continue;
    w[v] = 1.0;
    CHECK(std::fabs(energy_residual(u, p, m, et, test)) < 1e-10);
    w[v] = 0.0;
  }

  SUBCASE("random member of the free hat space") {
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    for (int v = 0; v < m.vertex_count(); ++v)
      if (!sys.dirichlet[v]) w[v] = dist(oracle::rng());
    CHECK(std::fabs(energy_residual(u, p, m, et, test)) < 1e-9);
  }

  SUBCASE("bubble test functions see the actual residual") {
    std::vector<double> bub(et.edge_count(), 0.0);
    HierarchicalField bubble_test{nullptr, &bub};
    double total = 0.0;
    for (int e = 0; e < et.edge_count(); ++e) {
      bub[e] = 1.0;
      total += std::fabs(energy_residual(u, p, m, et, bubble_test));
      bub[e] = 0.0;
    }
    CHECK(total > 1e-3);
  }
}

TEST_CASE("frozen residual of the zero field against one interior bubble") {
  Mesh m = two_triangle_square();
  ProblemSpec p = dirichlet_problem([](Vec2) { return 0.0; }, [](Vec2) { return 1.0; });
  EdgeTable et = build_edge_table(m);
  NodalField zero{std::vector<double>(4, 0.0)};
  std::vector<double> bub(et.edge_count(), 0.0);
  int diag = et.find(0, 2);
  REQUIRE(diag >= 0);
  bub[diag] = 1.0;
  HierarchicalField test{nullptr, &bub};
  // F(w) = int_omega 4 lambda_a lambda_b = (|K1| + |K2|)/3 = 1/3
  CHECK(energy_residual(zero, p, m, et, test) == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
}

TEST_CASE("pure Neumann sides reproduce a linear solution") {
  Mesh m = structured_rect_mesh(0, 0, 1, 1, 6, 5);
  SymMat2 d{2.0, 0.0, 0.5};
  // u = x + 2y, flux D grad u = (2, 1)
  auto exact = [](Vec2 x) { return x.x + 2.0 * x.y; };
  ProblemSpec p;
  p.name = "neumann";
  p.diffusion[0] = d;
  p.exact = exact;
  p.boundary[1] = BoundaryCondition{BcType::Dirichlet, exact, 0.0};  // left
  p.boundary[2] = BoundaryCondition{BcType::Robin, [](Vec2) { return 1.0; }, 0.0};   // top, n=(0,1)
  p.boundary[3] = BoundaryCondition{BcType::Robin, [](Vec2) { return 2.0; }, 0.0};   // right, n=(1,0)
  p.boundary[4] = BoundaryCondition{BcType::Robin, [](Vec2) { return -1.0; }, 0.0};  // bottom, n=(0,-1)
  SparseSystem sys = assemble(p, m);
  NodalField u = solve_linear(sys);
  CHECK(linf_vertex_error(u, p, m) < 1e-10);
}

TEST_CASE("huge Robin penalty approaches the Dirichlet solution") {
  Mesh m = structured_rect_mesh(0, 0, 1, 1, 8, 8);
  auto exact = [](Vec2 x) { return std::sin(M_PI * x.x) * std::sin(M_PI * x.y) + x.x; };
  auto f = [](Vec2 x) {
    return 2.0 * M_PI * M_PI * std::sin(M_PI * x.x) * std::sin(M_PI * x.y);
  };
  ProblemSpec pd = dirichlet_problem(exact, f);
  SparseSystem sd = assemble(pd, m);
  double ed = l2_error(solve_linear(sd), pd, m);

  const double alpha = 1e8;
  ProblemSpec pr = pd;
  pr.boundary.clear();
  for (int tag : {1, 2, 3, 4})
    pr.boundary[tag] =
        BoundaryCondition{BcType::Robin, [exact](Vec2 x) { return 1e8 * exact(x); }, alpha};
  SparseSystem sr = assemble(pr, m);
  double er = l2_error(solve_linear(sr), pr, m);

  CHECK(ed > 1e-4);  // sanity: a real discretization error to compare against
  CHECK(er < 10.0 * ed);
}

TEST_CASE("L2 error contracts by about four per uniform refinement") {
  auto exact = [](Vec2 x) { return std::sin(M_PI * x.x) * std::sin(M_PI * x.y); };
  auto f = [](Vec2 x) {
    return 2.0 * M_PI * M_PI * std::sin(M_PI * x.x) * std::sin(M_PI * x.y);
  };
  double err[2];
  int n = 8;
  for (int lvl = 0; lvl < 2; ++lvl, n *= 2) {
    Mesh m = structured_rect_mesh(0, 0, 1, 1, n, n);
    ProblemSpec p = dirichlet_problem(exact, f);
    err[lvl] = l2_error(solve_linear(assemble(p, m)), p, m);
  }
  double ratio = err[0] / err[1];
  CHECK(ratio > 3.5);
  CHECK(ratio < 4.5);
}

TEST_CASE("piecewise-linear solution with a diffusion jump is reproduced to roundoff") {
  // interface at x = 0.5, D = I on the left and 6 I on the right; the exact
  // solution is continuous with matching normal flux
  const double a = 6.0;
  auto exact = [a](Vec2 x) {
    return x.x <= 0.5 ? -2.0 * a * x.x + a + 1.0 : -2.0 * x.x + 2.0;
  };
  ProblemSpec p;
  p.name = "jump";
  p.diffusion[1] = SymMat2::identity();
  p.diffusion[2] = SymMat2::diag(a, a);
  p.classify = [](Vec2 c) { return c.x < 0.5 ? 1 : 2; };
  p.exact = exact;
  for (int tag : {1, 2, 3, 4})
    p.boundary[tag] = BoundaryCondition{BcType::Dirichlet, exact, 0.0};

  Mesh m = structured_rect_mesh(0, 0, 1, 1, 8, 8);
  retag_regions(m, p);
  int left = 0, right = 0;
  for (const auto& t : m.tris) (t.region == 1 ? left : right)++;
  CHECK(left == 64);
  CHECK(right == 64);

  NodalField u = solve_linear(assemble(p, m));
  CHECK(linf_vertex_error(u, p, m) < 1e-11);
  CHECK(l2_error(u, p, m) < 1e-12 * 7.0);  // solution magnitude is a + 1
}

TEST_CASE("assembly is bitwise identical for any thread count") {
  Mesh m = structured_rect_mesh(0, 0, 1, 1, 9, 7);
  ProblemSpec p;
  p.name = "mixed";
  p.diffusion[0] = SymMat2{1.3, 0.2, 0.6};
  p.source[0] = [](Vec2 x) { return std::sin(3.0 * x.x) + x.y * x.y; };
  p.boundary[1] = BoundaryCondition{BcType::Dirichlet, [](Vec2 x) { return std::sin(x.y); }, 0.0};
  p.boundary[2] = BoundaryCondition{BcType::Robin, [](Vec2 x) { return std::cos(x.x); }, 0.7};
  p.boundary[3] = BoundaryCondition{BcType::Robin, [](Vec2) { return 1.0; }, 2.0};
  p.boundary[4] = BoundaryCondition{BcType::Dirichlet, [](Vec2) { return 0.0; }, 0.0};

  SparseSystem s1 = assemble(p, m, 1);
  SparseSystem s3 = assemble(p, m, 3);
  CHECK(s1.a.row_ptr == s3.a.row_ptr);
  CHECK(s1.a.col == s3.a.col);
  CHECK(s1.a.val == s3.a.val);
  CHECK(s1.b == s3.b);
  CHECK(s1.bc_value == s3.bc_value);
}

TEST_CASE("the lowest side tag wins where Dirichlet sides meet") {
  Mesh m = structured_rect_mesh(0, 0, 1, 1, 4, 4);
  ProblemSpec p;
  p.name = "corner";
  p.diffusion[0] = SymMat2::identity();
  p.boundary[1] = BoundaryCondition{BcType::Dirichlet, [](Vec2) { return 5.0; }, 0.0};
  p.boundary[2] = BoundaryCondition{BcType::Dirichlet, [](Vec2) { return 0.0; }, 0.0};
  p.boundary[3] = BoundaryCondition{BcType::Dirichlet, [](Vec2) { return 0.0; }, 0.0};
  p.boundary[4] = BoundaryCondition{BcType::Dirichlet, [](Vec2) { return 7.0; }, 0.0};
  SparseSystem sys = assemble(p, m);
  // vertex 0 is the bottom-left corner, shared by side 1 (left) and side 4
  CHECK(sys.dirichlet[0] == 1);
  CHECK(sys.bc_value[0] == 5.0);
}

TEST_CASE("configuration errors are reported with context") {
  Mesh m = two_triangle_square();

  SUBCASE("missing diffusion tensor") {
    ProblemSpec p;
    p.name = "broken";
    for (int tag : {1, 2, 3, 4})
      p.boundary[tag] = BoundaryCondition{BcType::Dirichlet, [](Vec2) { return 0.0; }, 0.0};
    CHECK_THROWS_AS(assemble(p, m), ConfigError);
  }

  SUBCASE("missing boundary condition for a side tag") {
    ProblemSpec p;
    p.name = "broken";
    p.diffusion[0] = SymMat2::identity();
    p.boundary[1] = BoundaryCondition{BcType::Dirichlet, [](Vec2) { return 0.0; }, 0.0};
    CHECK_THROWS_AS(assemble(p, m), ConfigError);
  }

  SUBCASE("boundary edge without a side record") {
    Mesh bad = m;
    bad.edges.pop_back();
    ProblemSpec p = dirichlet_problem([](Vec2) { return 0.0; }, {});
    CHECK_THROWS_AS(assemble(p, bad), ConfigError);
  }

  SUBCASE("Dirichlet side without data") {
    ProblemSpec p = dirichlet_problem([](Vec2) { return 0.0; }, {});
    p.boundary[2].value = {};
    CHECK_THROWS_AS(assemble(p, m), ConfigError);
  }

  SUBCASE("error evaluation needs an exact solution") {
    ProblemSpec p = dirichlet_problem([](Vec2) { return 0.0; }, {});
    p.exact = {};
    NodalField u{std::vector<double>(4, 0.0)};
    CHECK_THROWS_AS(l2_error(u, p, m), ConfigError);
  }

  SUBCASE("field size must match the mesh") {
    ProblemSpec p = dirichlet_problem([](Vec2) { return 0.0; }, {});
    NodalField u{std::vector<double>(3, 0.0)};
    CHECK_THROWS_AS(l2_error(u, p, m), MeshError);
  }

  SUBCASE("degenerate element") {
    Mesh bad = m;
    bad.points[2] = bad.points[0];
    double a[6][6];
    CHECK_THROWS_AS(element_operator(bad, 0, SymMat2::identity(), a), MeshError);
  }
}

TEST_CASE("a problem that fixes the solution nowhere is rejected") {
  // pure zero-alpha Robin sides leave the operator singular up to roundoff;
  // CG would happily walk 1e14 along the near-null direction, so assembly
  // refuses the configuration outright
  Mesh m = structured_rect_mesh(0, 0, 1, 1, 3, 3);
  ProblemSpec p;
  p.name = "singular";
  p.diffusion[0] = SymMat2::identity();
  p.source[0] = [](Vec2) { return 1.0; };
  for (int tag : {1, 2, 3, 4})
    p.boundary[tag] = BoundaryCondition{BcType::Robin, [](Vec2) { return 0.0; }, 0.0};
  CHECK_THROWS_AS(assemble(p, m), ConfigError);
}
