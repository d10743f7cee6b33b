#include "anisoadapt/problems.hpp"

#include <cmath>

#include "anisoadapt/errors.hpp"

namespace aniso {

Mesh tensor_rect_mesh(const std::vector<double>& xs, const std::vector<double>& ys) {
  const int nx = static_cast<int>(xs.size()) - 1;
  const int ny = static_cast<int>(ys.size()) - 1;
  if (nx < 1 || ny < 1) throw ConfigError("tensor_rect_mesh: need at least a 1x1 lattice");
  for (int i = 0; i < nx; ++i)
    if (!(xs[i] < xs[i + 1])) throw ConfigError("tensor_rect_mesh: x cuts not increasing");
  for (int j = 0; j < ny; ++j)
    if (!(ys[j] < ys[j + 1])) throw ConfigError("tensor_rect_mesh: y cuts not increasing");

  Mesh m;
  m.points.reserve((nx + 1) * (ny + 1));
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i) m.points.push_back({xs[i], ys[j]});
  m.point_tags.assign(m.points.size(), 0);

  auto v = [nx](int i, int j) { return j * (nx + 1) + i; };
  m.tris.reserve(2 * nx * ny);
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const int v00 = v(i, j), v10 = v(i + 1, j);
      const int v01 = v(i, j + 1), v11 = v(i + 1, j + 1);
      if ((i + j) % 2 == 0) {
        m.tris.push_back({{v00, v10, v11}, 0});
        m.tris.push_back({{v00, v11, v01}, 0});
      } else {
        m.tris.push_back({{v00, v10, v01}, 0});
        m.tris.push_back({{v10, v11, v01}, 0});
      }
    }
  }

  for (int j = 0; j < ny; ++j) m.edges.push_back({v(0, j), v(0, j + 1), 1});
  for (int i = 0; i < nx; ++i) m.edges.push_back({v(i, ny), v(i + 1, ny), 2});
  for (int j = 0; j < ny; ++j) m.edges.push_back({v(nx, j), v(nx, j + 1), 3});
  for (int i = 0; i < nx; ++i) m.edges.push_back({v(i, 0), v(i + 1, 0), 4});
  return m;
}

Mesh structured_rect_mesh(double x0, double y0, double x1, double y1, int nx, int ny) {
  std::vector<double> xs(nx + 1), ys(ny + 1);
  for (int i = 0; i <= nx; ++i) xs[i] = x0 + (x1 - x0) * i / nx;
  for (int j = 0; j <= ny; ++j) ys[j] = y0 + (y1 - y0) * j / ny;
  return tensor_rect_mesh(xs, ys);
}

const std::vector<std::string>& problem_names() {
  static const std::vector<std::string> names = {
      "tanh", "shock", "layer", "jump", "jump-interface", "battery", "battery-interface"};
  return names;
}

namespace {

ScalarFn const_fn(double v) {
  return [v](Vec2) { return v; };
}

// (tanh s)'' = -2 tanh(s) (1 - tanh(s)^2)
double tanh_dd(double s) {
  const double t = std::tanh(s);
  return -2.0 * t * (1.0 - t * t);
}

// -div(grad u) = f on the unit square, u prescribed on all four sides
Problem poisson_square(const std::string& name, ScalarFn u, ScalarFn f, MatrixFn hess) {
  Problem p;
  p.spec.name = name;
  p.spec.diffusion[0] = {1.0, 0.0, 1.0};
  p.spec.source[0] = std::move(f);
  p.spec.exact = u;
  p.spec.exact_hessian = std::move(hess);
  for (int tag = 1; tag <= 4; ++tag) p.spec.boundary[tag] = {BcType::Dirichlet, u, 0.0};
  p.initial = structured_rect_mesh(0.0, 0.0, 1.0, 1.0, 10, 10);
  return p;
}

Problem tanh_problem() {
  auto u = [](Vec2 q) { return std::tanh(60.0 * q.x) - std::tanh(60.0 * (q.x - q.y) - 30.0); };
  auto f = [](Vec2 q) {
    const double a = 60.0 * q.x, b = 60.0 * (q.x - q.y) - 30.0;
    return -3600.0 * tanh_dd(a) + 7200.0 * tanh_dd(b);
  };
  auto hess = [](Vec2 q) {
    const double ga = tanh_dd(60.0 * q.x), gb = tanh_dd(60.0 * (q.x - q.y) - 30.0);
    return SymMat2{3600.0 * (ga - gb), 3600.0 * gb, -3600.0 * gb};
  };
  return poisson_square("tanh", u, f, hess);
}

Problem shock_problem() {
  auto v = [](Vec2 q) { return 1.0 / (1.0 + std::exp((q.x + q.y - 1.25) / 0.05)); };
  auto f = [v](Vec2 q) {
    const double s = v(q);
    return -800.0 * s * (1.0 - s) * (1.0 - 2.0 * s);
  };
  auto hess = [v](Vec2 q) {
    const double s = v(q);
    const double c = 400.0 * s * (1.0 - s) * (1.0 - 2.0 * s);
    return SymMat2{c, c, c};
  };
  return poisson_square("shock", v, f, hess);
}

Problem layer_problem() {
  auto u = [](Vec2 q) { return std::exp(-25.0 * q.x) + std::exp(-25.0 * q.y); };
  auto f = [](Vec2 q) { return -625.0 * (std::exp(-25.0 * q.x) + std::exp(-25.0 * q.y)); };
  auto hess = [](Vec2 q) {
    return SymMat2{625.0 * std::exp(-25.0 * q.x), 0.0, 625.0 * std::exp(-25.0 * q.y)};
  };
  return poisson_square("layer", u, f, hess);
}

// Piecewise-constant diffusion, jump by a factor of 6 across x = 0.5. The
// exact solution is piecewise linear in x, so any error is discretization
// noise from elements straddling the interface. The oblivious variant uses
// an 11x11 lattice (no grid line at x = 0.5); the interface variant puts the
// jump on a lattice line and pins it with constrained edge records.
Problem jump_problem(bool interface_edges) {
  Problem p;
  p.spec.name = interface_edges ? "jump-interface" : "jump";
  const double a = 6.0;
  p.spec.diffusion[1] = {1.0, 0.0, 1.0};
  p.spec.diffusion[2] = {a, 0.0, a};
  auto u = [a](Vec2 q) {
    return q.x < 0.5 ? -2.0 * a * q.x + a + 1.0 : -2.0 * q.x + 2.0;
  };
  p.spec.exact = u;
  p.spec.exact_hessian = [](Vec2) { return SymMat2{0.0, 0.0, 0.0}; };
  p.spec.classify = [](Vec2 q) { return q.x < 0.5 ? 1 : 2; };
  for (int tag = 1; tag <= 4; ++tag) p.spec.boundary[tag] = {BcType::Dirichlet, u, 0.0};
  if (interface_edges) {
    p.initial = structured_rect_mesh(0.0, 0.0, 1.0, 1.0, 10, 10);
    auto v = [](int i, int j) { return j * 11 + i; };
    for (int j = 0; j < 10; ++j) p.initial.edges.push_back({v(5, j), v(5, j + 1), 9});
  } else {
    p.initial = structured_rect_mesh(0.0, 0.0, 1.0, 1.0, 11, 11);
  }
  retag_regions(p.initial, p.spec);
  return p;
}

// Cell stack on (0, 8.4) x (0, 24), five materials:
//   1  end caps        [0, 6.1] x [0.8, 1.6] and [0, 6.1] x [21.2, 23.2]
//   2  transition      [0, 6.1] x [1.6, 3.6] and [0, 6.1] x [18.8, 21.2]
//   3  active block    [0, 6.1] x [3.6, 18.8], conductivity ratio 5 : 1e-4
//   4  liner           [6.1, 6.5] x [0.8, 23.2]
//   5  jacket          everything else
// Heat sources sit in materials 2 and 3; all four walls are Robin.
int battery_region(Vec2 q) {
  if (q.y < 0.8 || q.y > 23.2 || q.x > 6.5) return 5;
  if (q.x > 6.1) return 4;
  if (q.y < 1.6 || q.y > 21.2) return 1;
  if (q.y < 3.6 || q.y > 18.8) return 2;
  return 3;
}

Problem battery_problem(bool interface_edges) {
  Problem p;
  p.spec.name = interface_edges ? "battery-interface" : "battery";
  p.spec.diffusion[1] = {25.0, 0.0, 25.0};
  p.spec.diffusion[2] = {7.0, 0.0, 0.8};
  p.spec.diffusion[3] = {5.0, 0.0, 1e-4};
  p.spec.diffusion[4] = {0.2, 0.0, 0.2};
  p.spec.diffusion[5] = {0.05, 0.0, 0.05};
  p.spec.source[2] = const_fn(1.0);
  p.spec.source[3] = const_fn(1.0);
  p.spec.source_sign = -1.0;
  p.spec.classify = battery_region;
  p.spec.boundary[1] = {BcType::Robin, const_fn(0.0), 0.0};
  p.spec.boundary[2] = {BcType::Robin, const_fn(3.0), 1.0};
  p.spec.boundary[3] = {BcType::Robin, const_fn(2.0), 2.0};
  p.spec.boundary[4] = {BcType::Robin, const_fn(0.0), 3.0};
  if (interface_edges) {
    const std::vector<double> xs = {0.0, 1.5, 3.0, 4.5, 6.1, 6.5, 7.4, 8.4};
    const std::vector<double> ys = {0.0,   0.8,   1.6,   3.6,  6.64, 9.68,
                                    12.72, 15.76, 18.8,  21.2, 23.2, 24.0};
    p.initial = tensor_rect_mesh(xs, ys);
    retag_regions(p.initial, p.spec);
    EdgeTable et = build_edge_table(p.initial);
    for (const auto& e : et.edges)
      if (e.t1 >= 0 && p.initial.tris[e.t0].region != p.initial.tris[e.t1].region)
        p.initial.edges.push_back({e.a, e.b, 9});
  } else {
    p.initial = structured_rect_mesh(0.0, 0.0, 8.4, 24.0, 7, 12);
    retag_regions(p.initial, p.spec);
  }
  return p;
}

}  // namespace

Problem make_problem(const std::string& name) {
  if (name == "tanh") return tanh_problem();
  if (name == "shock") return shock_problem();
  if (name == "layer") return layer_problem();
  if (name == "jump") return jump_problem(false);
  if (name == "jump-interface") return jump_problem(true);
  if (name == "battery") return battery_problem(false);
  if (name == "battery-interface") return battery_problem(true);
  throw ConfigError("unknown problem: " + name);
}

}  // namespace aniso
