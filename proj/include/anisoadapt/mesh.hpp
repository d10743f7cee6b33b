#ifndef ANISOADAPT_MESH_HPP
#define ANISOADAPT_MESH_HPP

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

#include "anisoadapt/geometry.hpp"

namespace aniso {

struct Tri {
  std::array<int, 3> v{-1, -1, -1};
  int region = 0;
};

// A recorded boundary or interface segment. Records with one adjacent
// triangle are domain boundary (tag = side id); records with two adjacent
// triangles are internal interfaces. Both are preserved by remeshing.
struct MeshEdge {
  int a = -1, b = -1;
  int tag = 0;
};

struct Mesh {
  std::vector<Vec2> points;
  std::vector<int> point_tags;  // same length as points, 0 when untagged
  std::vector<Tri> tris;
  std::vector<MeshEdge> edges;

  int vertex_count() const { return static_cast<int>(points.size()); }
  int triangle_count() const { return static_cast<int>(tris.size()); }
};

double signed_area(const Mesh& m, int k);
inline double triangle_area(const Mesh& m, int k) { return std::abs(signed_area(m, k)); }
double mesh_area(const Mesh& m);

// Flips triangles with negative signed area so every element is
// counterclockwise; called by the readers and the problem library.
void normalize_orientation(Mesh& m);

// Physical Jacobian F of the affine map from the unit-area equilateral
// reference triangle onto element k; det(F) = |K|.
struct AffineMap {
  Mat2 f;
  double area = 0.0;
};
AffineMap affine_map(const Mesh& m, int k);

// Gradients of the three barycentric (hat) functions on element k, plus the
// element area. Shared by assembly, recovery and quality code.
struct TriGeometry {
  Vec2 grad[3];
  double area = 0.0;
};
TriGeometry tri_geometry(const Mesh& m, int k);

// Unique-edge table in deterministic (lexicographic endpoint) order.
struct EdgeTable {
  struct Edge {
    int a = -1, b = -1;   // a < b
    int t0 = -1, t1 = -1; // adjacent triangles, t1 = -1 on the boundary
    int tag = 0;          // side or interface tag from the mesh records
    bool recorded = false;
    bool boundary = false;
  };
  std::vector<Edge> edges;
  std::vector<std::array<int, 3>> tri_edges;  // edge j is opposite vertex j
  std::vector<int> vtx_ptr, vtx_edges;        // vertex -> incident edges (CSR)

  int edge_count() const { return static_cast<int>(edges.size()); }
  int find(int a, int b) const;
  // neighbors of vertex v through its incident edges
  template <class F>
  void for_vertex_edges(int v, F&& f) const {
    for (int k = vtx_ptr[v]; k < vtx_ptr[v + 1]; ++k) f(vtx_edges[k]);
  }
};

EdgeTable build_edge_table(const Mesh& m);

// Midpoint subdivision: every triangle becomes four, recorded edges are
// split in two with their tag kept. Regions carry over unchanged. When
// `parents` is given it receives, per refined vertex, the one or two source
// vertices it interpolates ({v, v} for a kept vertex, the edge ends for a
// midpoint), so nodal fields can be carried onto the refined mesh.
Mesh uniform_refine(const Mesh& m, std::vector<std::array<int, 2>>* parents = nullptr);

enum class DefectKind {
  DuplicateVertex,
  UnreferencedVertex,
  DegenerateTriangle,
  InvertedTriangle,
  NonManifoldEdge,
  InconsistentOrientation,
  DanglingEdgeRecord,   // recorded edge that is not an edge of any triangle
  MissingBoundaryTag,   // triangulation boundary edge without a record
  BadIndex,
};

struct Defect {
  DefectKind kind;
  int index = -1;  // vertex, triangle or edge-record index, as applicable
  std::string message;
};

std::vector<Defect> validate(const Mesh& m);

// --- serialization ---------------------------------------------------------

Mesh read_mesh(std::istream& in);
Mesh read_mesh_file(const std::string& path);
void write_mesh(const Mesh& m, std::ostream& out);
void write_mesh_file(const Mesh& m, const std::string& path);

// per-vertex symmetric metric, one "m11 m12 m22" line per vertex
std::vector<SymMat2> read_metric(std::istream& in);
std::vector<SymMat2> read_metric_file(const std::string& path);
void write_metric(const std::vector<SymMat2>& m, std::ostream& out);
void write_metric_file(const std::vector<SymMat2>& m, const std::string& path);

// per-vertex scalar field, one value per line
std::vector<double> read_field(std::istream& in);
void write_field(const std::vector<double>& f, std::ostream& out);
void write_field_file(const std::vector<double>& f, const std::string& path);

}  // namespace aniso

#endif
