#ifndef ANISOADAPT_HESSIAN_HPP
#define ANISOADAPT_HESSIAN_HPP

#include <string>
#include <vector>

#include "anisoadapt/estimator.hpp"
#include "anisoadapt/fem.hpp"
#include "anisoadapt/mesh.hpp"

namespace aniso {

// one symmetric matrix per triangle, units of solution per length squared
struct ElementHessianField {
  std::vector<SymMat2> h;
};

// Constant Hessian of the piecewise-quadratic bubble field on each element
// (exact, not a difference approximation).
ElementHessianField hessian_from_bubbles(const BubbleField& z, const Mesh& m,
                                         const EdgeTable& et);

struct QlsStats {
  int fallback_vertices = 0;  // rank-deficient patches that got a zero Hessian
};

// Per-vertex least-squares fit of a full quadratic to nodal values on a
// breadth-first patch, grown (up to 3 rings) until at least 6 points and a
// well-conditioned normal equation; element value = mean of the 3 vertices.
ElementHessianField recover_qls(const NodalField& u, const Mesh& m, QlsStats* stats = nullptr,
                                int threads = 1);

// Lumped-mass variational recovery: the nodal second derivatives solve
// h_i * int(phi_i) = -int (du_h/dx)(dphi_i/dx) + boundary flux, per
// component; interior vertices see no flux term. Known to be polluted in the
// first ring next to the boundary; element value = mean of the 3 vertices.
ElementHessianField recover_variational(const NodalField& u, const Mesh& m);

// analytic Hessian sampled at each triangle's barycenter
ElementHessianField exact_hessian(const ProblemSpec& p, const Mesh& m);

}  // namespace aniso

#endif
