#include <doctest.h>

#include <map>
#include <sstream>
#include <stdexcept>

#include "pns/mesh.hpp"

using namespace pns;

TEST_CASE("initial mesh counts and geometry") {
  const TriMesh m = unit_square_initial();
  CHECK(m.n_vertices() == 5);
  CHECK(m.n_triangles() == 4);
  CHECK(m.n_edges() == 8);
  CHECK(m.level == 0);
  const MeshStats s = mesh_stats(m);
  CHECK(s.h == doctest::Approx(1.0));
  for (int t = 0; t < 4; ++t) CHECK(m.area(t) == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(s.n_boundary_vertices == 4);
}

TEST_CASE("red refinement counts, h, and similarity") {
  TriMesh m = unit_square_initial();
  const double chunk0 = mesh_stats(m).chunkiness;
  int V = 5, E = 8, T = 4;
  for (int lvl = 1; lvl <= 5; ++lvl) {
    const int Vn = V + E, En = 2 * E + 3 * T, Tn = 4 * T;
    m = red_refine(m);
    CHECK(m.n_vertices() == Vn);
    CHECK(m.n_edges() == En);
    CHECK(m.n_triangles() == Tn);
    CHECK(m.level == lvl);
    V = Vn;
    E = En;
    T = Tn;

    const MeshStats s = mesh_stats(m);
    CHECK(s.h == doctest::Approx(std::ldexp(1.0, -lvl)).epsilon(1e-14));
    CHECK(s.chunkiness == doctest::Approx(chunk0).epsilon(1e-12));

    // Euler characteristic of a disk and exact area partition.
    CHECK(m.n_vertices() - m.n_edges() + m.n_triangles() == 1);
    double area = 0.0;
    for (int t = 0; t < m.n_triangles(); ++t) area += m.area(t);
    CHECK(area == doctest::Approx(1.0).epsilon(1e-12));
  }
  CHECK(m.n_triangles() == 4096);

  const TriMesh l1 = red_refine(unit_square_initial());
  CHECK(l1.n_triangles() == 16);
  CHECK(l1.n_vertices() == 13);
  CHECK(l1.n_edges() == 28);
}

TEST_CASE("conformity: interior edges shared by 2 triangles, boundary by 1") {
  TriMesh m = red_refine(red_refine(unit_square_initial()));
  std::map<int, int> edge_count;
  for (int t = 0; t < m.n_triangles(); ++t) {
    for (int e : m.triangle_edges[t]) ++edge_count[e];
  }
  for (int e = 0; e < m.n_edges(); ++e) {
    CHECK(edge_count[e] == (m.boundary_edge[e] ? 1 : 2));
  }
}

TEST_CASE("parent map reproduces fine vertex coordinates exactly") {
  const TriMesh coarse = red_refine(unit_square_initial());
  const TriMesh fine = red_refine(coarse);
  REQUIRE(static_cast<int>(fine.parent_map.size()) == fine.n_vertices());
  for (int v = 0; v < fine.n_vertices(); ++v) {
    const VertexParent& p = fine.parent_map[v];
    Eigen::Vector2d expect;
    if (p.kind == VertexParent::Kind::Vertex) {
      expect = coarse.vertices[p.index];
    } else {
      const auto& e = coarse.edges[p.index];
      expect = 0.5 * (coarse.vertices[e[0]] + coarse.vertices[e[1]]);
    }
    CHECK(fine.vertices[v].x() == expect.x());
    CHECK(fine.vertices[v].y() == expect.y());
  }
}

TEST_CASE("all triangles positively oriented at every level") {
  TriMesh m = unit_square_initial();
  for (int lvl = 0; lvl <= 4; ++lvl) {
    for (int t = 0; t < m.n_triangles(); ++t) CHECK(m.signed_area(t) > 0.0);
    m = red_refine(m);
  }
}

TEST_CASE("degenerate triangles are rejected by mesh_stats") {
  TriMesh bad = unit_square_initial();
  bad.vertices[4] = bad.vertices[0];  // collapse the center onto a corner
  CHECK_THROWS_AS(mesh_stats(bad), std::runtime_error);
}

TEST_CASE("text and vtk export") {
  const TriMesh m = unit_square_initial();
  std::ostringstream txt;
  write_mesh_text(m, txt);
  std::istringstream in(txt.str());
  std::string line;
  int lines = 0;
  while (std::getline(in, line)) ++lines;
  CHECK(lines == m.n_vertices() + m.n_triangles());
  CHECK(txt.str().find("0.5 0.5") != std::string::npos);

  std::ostringstream vtk;
  write_mesh_vtk(m, vtk);
  CHECK(vtk.str().find("DATASET UNSTRUCTURED_GRID") != std::string::npos);
  CHECK(vtk.str().find("CELL_TYPES 4") != std::string::npos);
}
