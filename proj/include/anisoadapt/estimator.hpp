#ifndef ANISOADAPT_ESTIMATOR_HPP
#define ANISOADAPT_ESTIMATOR_HPP

#include <string>
#include <vector>

#include "anisoadapt/fem.hpp"
#include "anisoadapt/mesh.hpp"
#include "anisoadapt/sparse.hpp"

namespace aniso {

// One coefficient per mesh edge for the quadratic bubble 4 lambda_i lambda_j
// on that edge; coefficients on Dirichlet-boundary edges stay zero.
struct BubbleField {
  std::vector<double> c;
};

// The error problem in the bubble space: a z = r with the same bilinear form
// as the forward solve, restricted to bubble test and trial functions, and
// r_e the residual of u_h against bubble e. Rows of Dirichlet-boundary edges
// are eliminated (identity row, zero residual).
struct ErrorProblem {
  CsrMatrix a;
  std::vector<double> r;
  std::vector<char> eliminated;     // per edge
  std::vector<char> dirichlet_vtx;  // endpoints of eliminated edges
};

ErrorProblem assemble_error_problem(const ProblemSpec& p, const Mesh& m, const EdgeTable& et,
                                    const NodalField& uh, int threads = 1);

// z_e = r_e / a_ee, exactly one Jacobi step from a zero start
BubbleField solve_edge_based(const ErrorProblem& ep);

// Per-vertex patch solves over the incident free edges (everything else held
// at zero), averaged over each edge's two endpoint patches. Patches at
// Dirichlet boundary vertices are skipped; an edge with no surviving patch
// falls back to its diagonal value.
BubbleField solve_node_based(const ErrorProblem& ep, const EdgeTable& et);

struct GsResult {
  BubbleField z;
  int sweeps = 0;
};

// Symmetric Gauss-Seidel from zero; stops when the relative change of z
// drops below rtol or after max_sweeps. A zero iterate counts as converged.
GsResult solve_full_gs(const ErrorProblem& ep, double rtol = 0.01, int max_sweeps = 30);

// CG solve of the error problem to a 1e-10 relative residual or better
BubbleField solve_full_exact(const ErrorProblem& ep);

enum class EstimatorKind { EdgeBased, NodeBased, FullGs, FullExact };

EstimatorKind estimator_from_name(const std::string& name);
std::string estimator_name(EstimatorKind kind);

// dispatcher used by the adaptation driver; gs_sweeps reports the sweep
// count for the Gauss-Seidel strategy and stays 0 otherwise
BubbleField solve_error_problem(const ErrorProblem& ep, const EdgeTable& et, EstimatorKind kind,
                                double gs_rtol = 0.01, int gs_max_sweeps = 30,
                                int* gs_sweeps = nullptr);

// L2 norm of the piecewise-quadratic bubble function
double estimate_l2(const BubbleField& z, const Mesh& m, const EdgeTable& et);

struct Effectivity {
  double index = 0.0;  // ||z|| / ||u - u_h||
  double beta = 0.0;   // ||u_h + z - u|| / ||u_h - u||
  bool defined = false;
};

// Both ratios are left undefined when the true error is at roundoff level
// (the estimator is exact there and the quotients are 0/0 noise).
Effectivity effectivity(const BubbleField& z, const NodalField& uh, const ProblemSpec& p,
                        const Mesh& m, const EdgeTable& et);

}  // namespace aniso

#endif
