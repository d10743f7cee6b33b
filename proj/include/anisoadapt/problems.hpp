#ifndef ANISOADAPT_PROBLEMS_HPP
#define ANISOADAPT_PROBLEMS_HPP

#include <string>
#include <vector>

#include "anisoadapt/fem.hpp"
#include "anisoadapt/mesh.hpp"

namespace aniso {

// Criss-cross triangulation of the tensor lattice xs x ys (both strictly
// increasing). Boundary sides are tagged clockwise starting from the left:
// 1 left, 2 top, 3 right, 4 bottom.
Mesh tensor_rect_mesh(const std::vector<double>& xs, const std::vector<double>& ys);

// uniform nx-by-ny lattice over [x0,x1] x [y0,y1]
Mesh structured_rect_mesh(double x0, double y0, double x1, double y1, int nx, int ny);

struct Problem {
  ProblemSpec spec;
  Mesh initial;
};

// Built-in benchmark problems: tanh, shock, layer, jump, jump-interface,
// battery, battery-interface.
Problem make_problem(const std::string& name);
const std::vector<std::string>& problem_names();

}  // namespace aniso

#endif
