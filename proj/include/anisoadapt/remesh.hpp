#ifndef ANISOADAPT_REMESH_HPP
#define ANISOADAPT_REMESH_HPP

#include <array>
#include <cmath>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "anisoadapt/mesh.hpp"
#include "anisoadapt/metric.hpp"

namespace aniso {

// First-order metric length of the segment p1-p2: the average of the lengths
// measured in the endpoint metrics.
double metric_edge_length(Vec2 p1, Vec2 p2, const SymMat2& m1, const SymMat2& m2);

struct RemeshConfig {
  double l_max = std::sqrt(2.0);      // split edges longer than this
  double l_min = 1.0 / std::sqrt(2.0);  // collapse edges shorter than this
  int max_passes = 20;
  int smooth_iters = 2;     // smoothing sweeps per pass
  double flip_margin = 0.01;  // required relative alignment gain for a flip
};

// Mutable mesh for the local remeshing operations. Keeps vertex-to-triangle
// adjacency, the constrained-edge map and a mobility class per vertex
// (interior vertices move freely, vertices inside a straight constrained
// polyline slide along it, everything else is pinned). Each operation either
// commits a change that keeps the mesh valid or leaves it untouched and
// returns false.
class WorkMesh {
 public:
  // Requires a conforming mesh whose boundary edges all carry records, and
  // one SPD metric per vertex.
  WorkMesh(const Mesh& m, const VertexMetricField& vm);

  // Inserts a vertex on edge (a, b) at parameter t from a (log-Euclidean
  // metric interpolation); both neighbours are subdivided. Constrained edges
  // stay constrained in two pieces. Bisection alone tends to park edge
  // lengths on a dyadic ladder, so the adapt sweep cuts long edges at 1/k
  // with k = round(metric length) to land pieces near unit length.
  bool split_edge(int a, int b, double t = 0.5);
  // Removes one endpoint of (a, b), fanning its star from the survivor.
  // Corners never move; chain vertices are removed only along their own
  // straight polyline; collapses across constraints or region boundaries are
  // rejected, as is anything that would invert a triangle or break the link
  // condition.
  bool collapse_edge(int a, int b);
  // Replaces the diagonal of the quad around (a, b) when that lowers the
  // worse metric alignment of the two triangles by the given relative
  // margin. Constrained and cross-region edges are never flipped.
  bool flip_edge(int a, int b, double margin);
  // Moves v toward the metric-length-weighted average of its neighbours
  // (chain vertices slide along their polyline only), scaled by relax and
  // backed off if any incident triangle would invert.
  bool smooth_vertex(int v, double relax);

  double edge_length(int a, int b) const;
  // alive edges as (a, b) pairs with a < b, lexicographically sorted
  std::vector<std::pair<int, int>> edges() const;
  double band_fraction(double l_min, double l_max) const;
  int alive_triangles() const;
  // vertex id bound, tombstones included; ids below it may be dead
  int vertex_count() const { return static_cast<int>(pts_.size()); }
  Mesh extract() const;

 private:
  enum class Mobility : char { Free, Chain, Fixed };

  static std::pair<int, int> key(int a, int b) {
    return a < b ? std::pair{a, b} : std::pair{b, a};
  }
  int find_tris(int a, int b, int out[2]) const;
  double tri_area(int t) const;
  double candidate_area(int va, int vb, int vc) const { return area(pts_[va], pts_[vb], pts_[vc]); }
  double area(Vec2 a, Vec2 b, Vec2 c) const;
  double alignment(int va, int vb, int vc) const;
  std::vector<int> neighbours(int v) const;
  void drop_tri(int t);
  void classify_vertex(int v);

  std::vector<Vec2> pts_;
  std::vector<SymMat2> met_;
  std::vector<int> ptag_;
  std::vector<Mobility> mob_;
  std::vector<char> valive_;
  std::vector<std::array<int, 3>> tv_;
  std::vector<int> tregion_;
  std::vector<char> talive_;
  std::vector<std::vector<int>> v2t_;
  std::map<std::pair<int, int>, int> cons_;     // constrained edge -> tag
  std::vector<std::vector<int>> vcons_;         // constrained neighbour vertices
};

struct RemeshResult {
  Mesh mesh;
  int passes = 0;
  double in_band = 0.0;  // fraction of edges with metric length in the band
  bool converged = true;
  std::string warning;   // set when the band criterion was not reached
};

// Iterates split/collapse/flip/smooth passes until the edge lengths settle
// into the band or the pass budget runs out, returning the best mesh seen.
// The vertex metric is the normalized field from the metric stage; its
// density integral is the element count the result aims for.
RemeshResult adapt_mesh(const Mesh& m, const VertexMetricField& vm,
                        const RemeshConfig& cfg = {});

}  // namespace aniso

#endif
