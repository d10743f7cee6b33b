#ifndef ANISOADAPT_FEM_HPP
#define ANISOADAPT_FEM_HPP

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "anisoadapt/mesh.hpp"
#include "anisoadapt/sparse.hpp"

namespace aniso {

// piecewise-linear scalar field, one value per mesh vertex
struct NodalField {
  std::vector<double> v;
};

enum class BcType { Dirichlet, Robin };

// Robin conditions are D grad(u) . n = g - alpha u; `value` is the Dirichlet
// trace or the Robin source g depending on `type`.
struct BoundaryCondition {
  BcType type = BcType::Dirichlet;
  std::function<double(Vec2)> value;
  double alpha = 0.0;
};

using ScalarFn = std::function<double(Vec2)>;
using MatrixFn = std::function<SymMat2(Vec2)>;

struct ProblemSpec {
  std::string name;
  std::map<int, SymMat2> diffusion;       // per region tag
  std::map<int, ScalarFn> source;         // per region tag; absent means zero
  // +1 when the strong form is -div(D grad u) = f, -1 for div(D grad u) = f
  double source_sign = +1.0;
  std::map<int, BoundaryCondition> boundary;  // per boundary side tag
  ScalarFn exact;                             // empty when unknown
  MatrixFn exact_hessian;                     // empty when unknown
  std::function<int(Vec2)> classify;          // region from a point, may be empty

  bool has_exact() const { return static_cast<bool>(exact); }
};

const SymMat2& diffusion_for(const ProblemSpec& p, int region);
const ScalarFn* source_for(const ProblemSpec& p, int region);  // nullptr when zero

// re-derives triangle regions from the problem's classifier (barycenter rule);
// no-op when the problem has none
void retag_regions(Mesh& m, const ProblemSpec& p);

struct SparseSystem {
  CsrMatrix a;                  // Dirichlet rows/columns already eliminated
  std::vector<double> b;
  std::vector<char> dirichlet;  // per-vertex mask
  std::vector<double> bc_value; // imposed value where masked, 0 elsewhere
};

SparseSystem assemble(const ProblemSpec& p, const Mesh& m, int threads = 1);

struct LinearSolveInfo {
  int cg_iterations = 0;
  double residual = 0.0;
  bool used_direct = false;
};

// Jacobi-preconditioned CG with a banded direct fallback; guarantees a
// relative residual of 1e-10 or throws SolverError.
NodalField solve_linear(const SparseSystem& sys, LinearSolveInfo* info = nullptr);

double l2_error(const NodalField& u, const ProblemSpec& p, const Mesh& m);

// test function w given by optional vertex (hat) and per-edge (quadratic
// bubble) coefficient vectors
struct HierarchicalField {
  const std::vector<double>* nodal = nullptr;
  const std::vector<double>* bubble = nullptr;
};

// F(w) - a(u_h, w) for the problem's bilinear form and load functional
double energy_residual(const NodalField& uh, const ProblemSpec& p, const Mesh& m,
                       const EdgeTable& et, const HierarchicalField& w);

// --- element kernels (shared with the error-problem assembly) --------------
// Local basis order: hat0, hat1, hat2, then the quadratic bubble on the edge
// opposite each vertex (matching EdgeTable::tri_edges).

// grad-grad block for constant diffusion d on element k
void element_operator(const Mesh& m, int k, const SymMat2& d, double a[6][6]);
// sign * integral of f times each basis function (degree-4 rule)
void element_load(const Mesh& m, int k, const ScalarFn& f, double sign, double out[6]);
// Robin mass and load on boundary edge (va, vb); local order hat_va, hat_vb,
// edge bubble
void robin_edge_matrix(const Mesh& m, int va, int vb, double alpha, double a[3][3]);
void robin_edge_load(const Mesh& m, int va, int vb, const ScalarFn& g, double out[3]);

}  // namespace aniso

#endif
