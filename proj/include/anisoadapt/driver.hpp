#ifndef ANISOADAPT_DRIVER_HPP
#define ANISOADAPT_DRIVER_HPP

#include <iosfwd>
#include <string>
#include <vector>

#include "anisoadapt/estimator.hpp"
#include "anisoadapt/fem.hpp"
#include "anisoadapt/mesh.hpp"
#include "anisoadapt/problems.hpp"

namespace aniso {

// What drives the adaptation metric: the Hessian of an error-estimate bubble
// field, or a Hessian recovered straight from the nodal solution.
enum class HessianSource { Estimator, Qls, Variational, Exact };

HessianSource hessian_source_from_name(const std::string& name);
std::string hessian_source_name(HessianSource s);

struct AdaptConfig {
  EstimatorKind estimator = EstimatorKind::FullGs;
  HessianSource hessian = HessianSource::Estimator;
  int n_target = 600;
  double gs_rtol = 0.01;
  int gs_max_sweeps = 30;
  double eps_mesh = 0.1;
  int max_iterations = 25;
  double q = 2.0;
  int threads = 1;
  std::string out_dir;  // used by the CLI, not by adaptive_loop
};

// One row per completed adaptation iteration, describing the mesh the
// iteration solved on. l2_error and estimate are NaN when the problem has no
// exact solution or the pipeline runs without a bubble solve; q_mesh measures
// the row's mesh against the metric computed from its own solution.
struct AdaptRecord {
  int iteration = 0;
  int vertices = 0;
  int triangles = 0;
  double l2_error = 0.0;
  double estimate = 0.0;
  double alpha = 0.0;
  double q_mesh = 0.0;
  double max_aspect_ratio = 0.0;
  int gs_sweeps = 0;
  double seconds = 0.0;
};

struct AdaptHistory {
  std::vector<AdaptRecord> rows;
};

struct AdaptResult {
  AdaptHistory history;
  // best trailing iterate by refined-reference gap, not necessarily the last
  // row's mesh: successive remeshes scatter the L2 error over a factor of a
  // few at equal mesh quality, and the driver returns the iterate it can
  // defend rather than whichever the loop happened to stop on
  Mesh mesh;
  NodalField u;
  bool converged = false;
  // error-problem solution norm on the returned mesh, solved exactly;
  // comparable across pipelines including the ones without a bubble field
  double final_estimate = 0.0;
};

// Iterates solve, estimate or recover, Hessian, regularization, metric,
// remesh until the mesh satisfies Q_mesh <= 1 + eps_mesh against the metric
// its own solution generates, or until the iteration cap. With
// max_iterations = 0 only the initial solve runs and the trail is empty.
AdaptResult adaptive_loop(const Problem& problem, const AdaptConfig& cfg);

void write_history_csv(std::ostream& os, const AdaptHistory& h);

}  // namespace aniso

#endif
