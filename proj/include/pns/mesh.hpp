#pragma once

#include <Eigen/Dense>
#include <array>
#include <iosfwd>
#include <vector>

namespace pns {

/// Genealogy entry for one fine vertex: either a coarse vertex or the
/// midpoint of a coarse edge.
struct VertexParent {
  enum class Kind { Vertex, EdgeMidpoint };
  Kind kind = Kind::Vertex;
  int index = -1;
};

struct MeshStats {
  double h = 0.0;       // max element diameter
  double h_min = 0.0;
  double chunkiness = 0.0;  // max h_K / rho_K, rho_K the inscribed-ball diameter
  int n_vertices = 0;
  int n_edges = 0;
  int n_triangles = 0;
  int n_boundary_vertices = 0;
};

/// Conforming triangulation of (0,1)^2.  Triangles are counterclockwise,
/// edges carry a deterministic lexicographic numbering.  Immutable after
/// construction; refinement produces a new mesh.
struct TriMesh {
  std::vector<Eigen::Vector2d> vertices;
  std::vector<std::array<int, 3>> triangles;       // vertex indices, CCW
  std::vector<std::array<int, 2>> edges;           // sorted pairs, lexicographic order
  std::vector<std::array<int, 3>> triangle_edges;  // edge k sits opposite local vertex k
  std::vector<char> boundary_vertex;
  std::vector<char> boundary_edge;
  std::vector<VertexParent> parent_map;  // empty at level 0
  int level = 0;

  int n_vertices() const { return static_cast<int>(vertices.size()); }
  int n_edges() const { return static_cast<int>(edges.size()); }
  int n_triangles() const { return static_cast<int>(triangles.size()); }

  double signed_area(int t) const;
  double area(int t) const { return signed_area(t); }
};

/// Four triangles on (0,1)^2, cut along both diagonals; h = 1, level = 0.
TriMesh unit_square_initial();

/// Uniform red refinement: every triangle is split into four similar
/// triangles through its edge midpoints.  Children of triangle k are
/// stored consecutively at 4k..4k+3; fine vertices are the coarse
/// vertices followed by the edge midpoints in edge order.
TriMesh red_refine(const TriMesh& coarse);

MeshStats mesh_stats(const TriMesh& mesh);

/// Plain-text dump: one vertex per line "x y", then one triangle per line
/// "i j k" (zero-based), 17 significant digits.
void write_mesh_text(const TriMesh& mesh, std::ostream& out);

/// Legacy ASCII VTK unstructured grid.  Optional per-vertex point data
/// (velocity vectors and pressure values) for visual inspection.
void write_mesh_vtk(const TriMesh& mesh, std::ostream& out,
                    const std::vector<Eigen::Vector2d>* vertex_velocity = nullptr,
                    const std::vector<double>* vertex_pressure = nullptr);

}  // namespace pns
