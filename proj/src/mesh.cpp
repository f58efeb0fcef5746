#include "pns/mesh.hpp"

#include <algorithm>
#include <cstdio>
#include <limits>
#include <map>
#include <ostream>
#include <stdexcept>

namespace pns {

namespace {

// Builds edges (sorted pairs in lexicographic order), triangle_edges and
// boundary flags from the triangle list.  Throws if the mesh is not
// conforming (an edge shared by more than two triangles).
void finalize_connectivity(TriMesh& m) {
  std::vector<std::array<int, 2>> pairs;
  pairs.reserve(3 * m.triangles.size());
  for (const auto& tri : m.triangles) {
    for (int k = 0; k < 3; ++k) {
      int a = tri[(k + 1) % 3], b = tri[(k + 2) % 3];
      if (a > b) std::swap(a, b);
      pairs.push_back({a, b});
    }
  }
  std::sort(pairs.begin(), pairs.end());
  pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
  m.edges = pairs;

  std::map<std::array<int, 2>, int> edge_index;
  for (int e = 0; e < m.n_edges(); ++e) edge_index[m.edges[e]] = e;

  m.triangle_edges.assign(m.triangles.size(), {-1, -1, -1});
  std::vector<int> edge_use(m.n_edges(), 0);
  for (int t = 0; t < m.n_triangles(); ++t) {
    for (int k = 0; k < 3; ++k) {
      int a = m.triangles[t][(k + 1) % 3], b = m.triangles[t][(k + 2) % 3];
      if (a > b) std::swap(a, b);
      const int e = edge_index.at({a, b});
      m.triangle_edges[t][k] = e;
      ++edge_use[e];
    }
  }

  m.boundary_edge.assign(m.n_edges(), 0);
  m.boundary_vertex.assign(m.n_vertices(), 0);
  for (int e = 0; e < m.n_edges(); ++e) {
    if (edge_use[e] > 2) throw std::runtime_error("TriMesh: non-conforming edge");
    if (edge_use[e] == 1) {
      m.boundary_edge[e] = 1;
      m.boundary_vertex[m.edges[e][0]] = 1;
      m.boundary_vertex[m.edges[e][1]] = 1;
    }
  }
}

}  // namespace

double TriMesh::signed_area(int t) const {
  const auto& tri = triangles[t];
  const Eigen::Vector2d d1 = vertices[tri[1]] - vertices[tri[0]];
  const Eigen::Vector2d d2 = vertices[tri[2]] - vertices[tri[0]];
  return 0.5 * (d1.x() * d2.y() - d1.y() * d2.x());
}

TriMesh unit_square_initial() {
  TriMesh m;
  m.vertices = {{0.0, 0.0}, {1.0, 0.0}, {1.0, 1.0}, {0.0, 1.0}, {0.5, 0.5}};
  m.triangles = {{0, 1, 4}, {1, 2, 4}, {2, 3, 4}, {3, 0, 4}};
  m.level = 0;
  finalize_connectivity(m);
  return m;
}

TriMesh red_refine(const TriMesh& coarse) {
  TriMesh fine;
  const int nv = coarse.n_vertices();
  fine.vertices = coarse.vertices;
  fine.vertices.reserve(nv + coarse.n_edges());
  fine.parent_map.reserve(nv + coarse.n_edges());
  for (int v = 0; v < nv; ++v) fine.parent_map.push_back({VertexParent::Kind::Vertex, v});
  for (int e = 0; e < coarse.n_edges(); ++e) {
    const auto& ed = coarse.edges[e];
    fine.vertices.push_back(0.5 * (coarse.vertices[ed[0]] + coarse.vertices[ed[1]]));
    fine.parent_map.push_back({VertexParent::Kind::EdgeMidpoint, e});
  }

  fine.triangles.reserve(4 * coarse.n_triangles());
  for (int t = 0; t < coarse.n_triangles(); ++t) {
    const auto& tri = coarse.triangles[t];
    const int m0 = nv + coarse.triangle_edges[t][0];
    const int m1 = nv + coarse.triangle_edges[t][1];
    const int m2 = nv + coarse.triangle_edges[t][2];
    fine.triangles.push_back({tri[0], m2, m1});
    fine.triangles.push_back({tri[1], m0, m2});
    fine.triangles.push_back({tri[2], m1, m0});
    fine.triangles.push_back({m0, m1, m2});
  }
  fine.level = coarse.level + 1;
  finalize_connectivity(fine);
  return fine;
}

MeshStats mesh_stats(const TriMesh& mesh) {
  MeshStats s;
  s.n_vertices = mesh.n_vertices();
  s.n_edges = mesh.n_edges();
  s.n_triangles = mesh.n_triangles();
  for (char b : mesh.boundary_vertex) s.n_boundary_vertices += b ? 1 : 0;

  s.h = 0.0;
  s.h_min = std::numeric_limits<double>::infinity();
  s.chunkiness = 0.0;
  for (int t = 0; t < mesh.n_triangles(); ++t) {
    const double area = mesh.signed_area(t);
    if (!(area > 0.0)) throw std::runtime_error("mesh_stats: degenerate or misoriented triangle");
    const auto& tri = mesh.triangles[t];
    double perimeter = 0.0, h_k = 0.0;
    for (int k = 0; k < 3; ++k) {
      const double len = (mesh.vertices[tri[(k + 1) % 3]] - mesh.vertices[tri[(k + 2) % 3]]).norm();
      perimeter += len;
      h_k = std::max(h_k, len);
    }
    const double rho_k = 4.0 * area / perimeter;  // inscribed-ball diameter
    s.h = std::max(s.h, h_k);
    s.h_min = std::min(s.h_min, h_k);
    s.chunkiness = std::max(s.chunkiness, h_k / rho_k);
  }
  return s;
}

void write_mesh_text(const TriMesh& mesh, std::ostream& out) {
  char buf[128];
  for (const auto& v : mesh.vertices) {
    std::snprintf(buf, sizeof(buf), "%.17g %.17g\n", v.x(), v.y());
    out << buf;
  }
  for (const auto& t : mesh.triangles) {
    out << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
  }
}

void write_mesh_vtk(const TriMesh& mesh, std::ostream& out,
                    const std::vector<Eigen::Vector2d>* vertex_velocity,
                    const std::vector<double>* vertex_pressure) {
  char buf[160];
  out << "# vtk DataFile Version 3.0\n";
  out << "pns triangulation level " << mesh.level << "\n";
  out << "ASCII\nDATASET UNSTRUCTURED_GRID\n";
  out << "POINTS " << mesh.n_vertices() << " double\n";
  for (const auto& v : mesh.vertices) {
    std::snprintf(buf, sizeof(buf), "%.17g %.17g 0\n", v.x(), v.y());
    out << buf;
  }
  out << "CELLS " << mesh.n_triangles() << ' ' << 4 * mesh.n_triangles() << '\n';
  for (const auto& t : mesh.triangles) out << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
  out << "CELL_TYPES " << mesh.n_triangles() << '\n';
  for (int t = 0; t < mesh.n_triangles(); ++t) out << "5\n";

  if (vertex_velocity || vertex_pressure) {
    out << "POINT_DATA " << mesh.n_vertices() << '\n';
    if (vertex_velocity) {
      out << "VECTORS velocity double\n";
      for (const auto& v : *vertex_velocity) {
        std::snprintf(buf, sizeof(buf), "%.17g %.17g 0\n", v.x(), v.y());
        out << buf;
      }
    }
    if (vertex_pressure) {
      out << "SCALARS pressure double 1\nLOOKUP_TABLE default\n";
      for (double q : *vertex_pressure) {
        std::snprintf(buf, sizeof(buf), "%.17g\n", q);
        out << buf;
      }
    }
  }
}

}  // namespace pns
