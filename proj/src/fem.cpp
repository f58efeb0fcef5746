#include "pns/fem.hpp"

#include <array>
#include <cmath>
#include <stdexcept>

namespace pns {

namespace {

constexpr double kBubbleMean = 27.0 / 60.0;  // <b_K>_K for b_K = 27 l1 l2 l3

const Eigen::Vector2d kGradLambda[3] = {{-1.0, -1.0}, {1.0, 0.0}, {0.0, 1.0}};

// P1 mass-dual on a triangle: psi_i = (12/|K|) (lambda_i - 1/4).
double p1_dual(int i, const Eigen::Vector3d& l) { return 12.0 * (l[i] - 0.25); }

// 1D P1 mass-dual on an edge parametrized by t in [0,1].
double p1_dual_1d(int i, double t) {
  const double li = (i == 0) ? 1.0 - t : t;
  const double lj = 1.0 - li;
  return 2.0 * (2.0 * li - lj);
}

void p2_shape_1d(double t, double* n) {
  n[0] = (1.0 - t) * (1.0 - 2.0 * t);
  n[1] = t * (2.0 * t - 1.0);
  n[2] = 4.0 * t * (1.0 - t);
}

// Inverse of the scaled P2 mass matrix C_ij = (1/|K|) int_K N_i N_j (universal
// for the affine family); computed once from a high-order reference rule.
const Eigen::Matrix<double, 6, 6>& p2_dual_matrix() {
  static const Eigen::Matrix<double, 6, 6> inv = [] {
    const QuadratureRule& rule = quadrature_rule(5);
    Eigen::Matrix<double, 6, 6> c = Eigen::Matrix<double, 6, 6>::Zero();
    VelocityShape sh;
    for (int q = 0; q < rule.size(); ++q) {
      velocity_shape(ElementPair::TaylorHood, rule.barycentric[q], sh);
      for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j) c(i, j) += rule.weights[q] * sh.value[i] * sh.value[j];
    }
    return Eigen::Matrix<double, 6, 6>(c.inverse());
  }();
  return inv;
}

// Inverse of the scaled 1D P2 mass matrix on an edge.
const Eigen::Matrix3d& p2_dual_matrix_1d() {
  static const Eigen::Matrix3d inv = [] {
    const GaussRule1d& g = gauss_rule_1d(5);
    Eigen::Matrix3d c = Eigen::Matrix3d::Zero();
    double n[3];
    for (size_t q = 0; q < g.points.size(); ++q) {
      p2_shape_1d(g.points[q], n);
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) c(i, j) += g.weights[q] * n[i] * n[j];
    }
    return Eigen::Matrix3d(c.inverse());
  }();
  return inv;
}

}  // namespace

int MixedSpace::scalar_node(int element, int local) const {
  const auto& tri = mesh->triangles[element];
  if (local < 3) return tri[local];
  const int nv = mesh->n_vertices();
  if (pair == ElementPair::Mini) return nv + element;
  return nv + mesh->triangle_edges[element][local - 3];
}

MixedSpace build_space(const TriMesh& mesh, ElementPair pair) {
  MixedSpace s;
  s.mesh = &mesh;
  s.pair = pair;
  const int nv = mesh.n_vertices();
  const int extra = (pair == ElementPair::Mini) ? mesh.n_triangles() : mesh.n_edges();
  s.n_scalar_nodes = nv + extra;
  s.n_velocity_dofs = 2 * s.n_scalar_nodes;
  s.n_pressure_dofs = nv;

  s.scalar_node_on_boundary.assign(s.n_scalar_nodes, 0);
  for (int v = 0; v < nv; ++v) s.scalar_node_on_boundary[v] = mesh.boundary_vertex[v];
  if (pair == ElementPair::TaylorHood) {
    for (int e = 0; e < mesh.n_edges(); ++e) s.scalar_node_on_boundary[nv + e] = mesh.boundary_edge[e];
  }
  for (int n = 0; n < s.n_scalar_nodes; ++n) {
    if (s.scalar_node_on_boundary[n]) {
      s.boundary_velocity_dofs.push_back(2 * n);
      s.boundary_velocity_dofs.push_back(2 * n + 1);
    }
  }
  return s;
}

void velocity_shape(ElementPair pair, const Eigen::Vector3d& l, VelocityShape& out) {
  if (pair == ElementPair::Mini) {
    out.count = 4;
    for (int i = 0; i < 3; ++i) {
      out.value[i] = l[i];
      out.grad_ref[i] = kGradLambda[i];
    }
    out.value[3] = 27.0 * l[0] * l[1] * l[2];
    out.grad_ref[3] = 27.0 * (kGradLambda[0] * l[1] * l[2] + kGradLambda[1] * l[0] * l[2] +
                              kGradLambda[2] * l[0] * l[1]);
  } else {
    out.count = 6;
    for (int i = 0; i < 3; ++i) {
      out.value[i] = l[i] * (2.0 * l[i] - 1.0);
      out.grad_ref[i] = kGradLambda[i] * (4.0 * l[i] - 1.0);
    }
    for (int k = 0; k < 3; ++k) {
      const int i = (k + 1) % 3, j = (k + 2) % 3;
      out.value[3 + k] = 4.0 * l[i] * l[j];
      out.grad_ref[3 + k] = 4.0 * (kGradLambda[i] * l[j] + kGradLambda[j] * l[i]);
    }
  }
}

ElementGeometry element_geometry(const TriMesh& mesh, int t) {
  const auto& tri = mesh.triangles[t];
  ElementGeometry g;
  g.origin = mesh.vertices[tri[0]];
  g.jacobian.col(0) = mesh.vertices[tri[1]] - g.origin;
  g.jacobian.col(1) = mesh.vertices[tri[2]] - g.origin;
  const double det = g.jacobian.determinant();
  g.area = 0.5 * det;
  g.inverse = g.jacobian.inverse();
  return g;
}

Eigen::Vector3d barycentric(const ElementGeometry& geom, const Eigen::Vector2d& x) {
  const Eigen::Vector2d ref = geom.inverse * (x - geom.origin);
  return {1.0 - ref.x() - ref.y(), ref.x(), ref.y()};
}

DiscreteFunction zero_function(const MixedSpace& space, FieldRole role) {
  DiscreteFunction f;
  f.space = &space;
  f.role = role;
  f.coeffs = Eigen::VectorXd::Zero(role == FieldRole::Velocity ? space.n_velocity_dofs
                                                               : space.n_pressure_dofs);
  return f;
}

Eigen::Vector2d eval_velocity(const DiscreteFunction& f, int element, const Eigen::Vector3d& bary) {
  const MixedSpace& s = *f.space;
  VelocityShape sh;
  velocity_shape(s.pair, bary, sh);
  Eigen::Vector2d v = Eigen::Vector2d::Zero();
  for (int n = 0; n < sh.count; ++n) {
    const int node = s.scalar_node(element, n);
    v.x() += f.coeffs[s.velocity_dof(node, 0)] * sh.value[n];
    v.y() += f.coeffs[s.velocity_dof(node, 1)] * sh.value[n];
  }
  return v;
}

Eigen::Matrix2d eval_velocity_gradient(const DiscreteFunction& f, int element,
                                       const Eigen::Vector3d& bary) {
  const MixedSpace& s = *f.space;
  const ElementGeometry geom = element_geometry(*s.mesh, element);
  VelocityShape sh;
  velocity_shape(s.pair, bary, sh);
  Eigen::Matrix2d g = Eigen::Matrix2d::Zero();
  for (int n = 0; n < sh.count; ++n) {
    const int node = s.scalar_node(element, n);
    const Eigen::Vector2d gn = geom.inverse.transpose() * sh.grad_ref[n];
    g.row(0) += f.coeffs[s.velocity_dof(node, 0)] * gn.transpose();
    g.row(1) += f.coeffs[s.velocity_dof(node, 1)] * gn.transpose();
  }
  return g;
}

double eval_pressure(const DiscreteFunction& f, int element, const Eigen::Vector3d& bary) {
  const auto& tri = f.space->mesh->triangles[element];
  return f.coeffs[tri[0]] * bary[0] + f.coeffs[tri[1]] * bary[1] + f.coeffs[tri[2]] * bary[2];
}

DiscreteFunction scott_zhang(const MixedSpace& space, int order, const VectorField& f) {
  if (order != 1 && order != 2) throw std::invalid_argument("scott_zhang: order must be 1 or 2");
  if (order == 2 && space.pair != ElementPair::TaylorHood) {
    throw std::invalid_argument("scott_zhang: order 2 requires the Taylor-Hood pair");
  }
  const TriMesh& mesh = *space.mesh;
  const int nv = mesh.n_vertices();

  // Assigned simplex per vertex: lexicographically smallest containing
  // triangle, or smallest containing boundary edge for boundary vertices.
  std::vector<int> vertex_tri(nv, -1);
  for (int t = 0; t < mesh.n_triangles(); ++t) {
    for (int v : mesh.triangles[t]) {
      if (vertex_tri[v] < 0) vertex_tri[v] = t;
    }
  }
  std::vector<int> vertex_bedge(nv, -1);
  std::vector<int> edge_tri;  // smallest triangle containing each edge
  edge_tri.assign(mesh.n_edges(), -1);
  for (int t = 0; t < mesh.n_triangles(); ++t) {
    for (int e : mesh.triangle_edges[t]) {
      if (edge_tri[e] < 0) edge_tri[e] = t;
    }
  }
  for (int e = 0; e < mesh.n_edges(); ++e) {
    if (!mesh.boundary_edge[e]) continue;
    for (int v : mesh.edges[e]) {
      if (vertex_bedge[v] < 0) vertex_bedge[v] = e;
    }
  }

  const QuadratureRule& tri_rule = quadrature_rule(8);
  const GaussRule1d& edge_rule = gauss_rule_1d(9);

  DiscreteFunction out = zero_function(space, FieldRole::Velocity);

  // Dual average of f over triangle t for the node at local position
  // `local` in the order-`order` local basis.
  auto triangle_coefficient = [&](int t, int local) -> Eigen::Vector2d {
    const auto& tri = mesh.triangles[t];
    Eigen::Vector2d acc = Eigen::Vector2d::Zero();
    if (order == 1) {
      for (int q = 0; q < tri_rule.size(); ++q) {
        const auto& l = tri_rule.barycentric[q];
        const Eigen::Vector2d x = l[0] * mesh.vertices[tri[0]] + l[1] * mesh.vertices[tri[1]] +
                                  l[2] * mesh.vertices[tri[2]];
        acc += tri_rule.weights[q] * p1_dual(local, l) * f(x);
      }
    } else {
      const auto& dual = p2_dual_matrix();
      VelocityShape sh;
      for (int q = 0; q < tri_rule.size(); ++q) {
        const auto& l = tri_rule.barycentric[q];
        velocity_shape(ElementPair::TaylorHood, l, sh);
        double psi = 0.0;
        for (int j = 0; j < 6; ++j) psi += dual(local, j) * sh.value[j];
        const Eigen::Vector2d x = l[0] * mesh.vertices[tri[0]] + l[1] * mesh.vertices[tri[1]] +
                                  l[2] * mesh.vertices[tri[2]];
        acc += tri_rule.weights[q] * psi * f(x);
      }
    }
    return acc;  // the 1/|K| of the dual cancels against the |K| of the rule
  };

  // Dual average of f over boundary edge e for local node 0/1 (endpoints)
  // or 2 (midpoint, order 2 only).
  auto edge_coefficient = [&](int e, int local) -> Eigen::Vector2d {
    const Eigen::Vector2d a = mesh.vertices[mesh.edges[e][0]];
    const Eigen::Vector2d b = mesh.vertices[mesh.edges[e][1]];
    Eigen::Vector2d acc = Eigen::Vector2d::Zero();
    if (order == 1) {
      for (size_t q = 0; q < edge_rule.points.size(); ++q) {
        const double t = edge_rule.points[q];
        acc += edge_rule.weights[q] * p1_dual_1d(local, t) * f(a + t * (b - a));
      }
    } else {
      const auto& dual = p2_dual_matrix_1d();
      double n[3];
      for (size_t q = 0; q < edge_rule.points.size(); ++q) {
        const double t = edge_rule.points[q];
        p2_shape_1d(t, n);
        double psi = 0.0;
        for (int j = 0; j < 3; ++j) psi += dual(local, j) * n[j];
        acc += edge_rule.weights[q] * psi * f(a + t * (b - a));
      }
    }
    return acc;  // same cancellation of 1/|e| against |e|
  };

  // Vertex coefficients.
  for (int v = 0; v < nv; ++v) {
    Eigen::Vector2d c;
    if (mesh.boundary_vertex[v]) {
      const int e = vertex_bedge[v];
      const int local = (mesh.edges[e][0] == v) ? 0 : 1;
      c = edge_coefficient(e, local);
    } else {
      const int t = vertex_tri[v];
      int local = 0;
      while (mesh.triangles[t][local] != v) ++local;
      c = triangle_coefficient(t, local);
    }
    out.coeffs[space.velocity_dof(v, 0)] = c.x();
    out.coeffs[space.velocity_dof(v, 1)] = c.y();
  }

  if (order == 1 && space.pair == ElementPair::TaylorHood) {
    // Embed the P1 interpolant: midpoint coefficients are endpoint means.
    for (int e = 0; e < mesh.n_edges(); ++e) {
      for (int c = 0; c < 2; ++c) {
        out.coeffs[space.velocity_dof(nv + e, c)] =
            0.5 * (out.coeffs[space.velocity_dof(mesh.edges[e][0], c)] +
                   out.coeffs[space.velocity_dof(mesh.edges[e][1], c)]);
      }
    }
  }
  if (order == 2) {
    for (int e = 0; e < mesh.n_edges(); ++e) {
      Eigen::Vector2d c;
      if (mesh.boundary_edge[e]) {
        c = edge_coefficient(e, 2);
      } else {
        const int t = edge_tri[e];
        int k = 0;
        while (mesh.triangle_edges[t][k] != e) ++k;
        c = triangle_coefficient(t, 3 + k);
      }
      out.coeffs[space.velocity_dof(nv + e, 0)] = c.x();
      out.coeffs[space.velocity_dof(nv + e, 1)] = c.y();
    }
  }
  return out;
}

DiscreteFunction clement_pressure(const MixedSpace& space, const ScalarField& f) {
  const TriMesh& mesh = *space.mesh;
  const QuadratureRule& rule = quadrature_rule(8);
  std::vector<double> integral(mesh.n_vertices(), 0.0);
  std::vector<double> patch_area(mesh.n_vertices(), 0.0);
  for (int t = 0; t < mesh.n_triangles(); ++t) {
    const ElementGeometry geom = element_geometry(mesh, t);
    const auto& tri = mesh.triangles[t];
    double cell = 0.0;
    for (int q = 0; q < rule.size(); ++q) {
      const auto& l = rule.barycentric[q];
      const Eigen::Vector2d x = l[0] * mesh.vertices[tri[0]] + l[1] * mesh.vertices[tri[1]] +
                                l[2] * mesh.vertices[tri[2]];
      cell += rule.weights[q] * f(x);
    }
    cell *= geom.area;
    for (int v : tri) {
      integral[v] += cell;
      patch_area[v] += geom.area;
    }
  }
  DiscreteFunction out = zero_function(space, FieldRole::Pressure);
  for (int v = 0; v < mesh.n_vertices(); ++v) out.coeffs[v] = integral[v] / patch_area[v];
  return out;
}

DiscreteFunction mini_fortin(const MixedSpace& space, const VectorField& z, int quad_degree) {
  if (space.pair != ElementPair::Mini) {
    throw std::invalid_argument("mini_fortin: requires the Mini pair");
  }
  const TriMesh& mesh = *space.mesh;
  DiscreteFunction w = scott_zhang(space, 1, z);
  const QuadratureRule& rule = quadrature_rule(quad_degree);
  const int nv = mesh.n_vertices();
  for (int t = 0; t < mesh.n_triangles(); ++t) {
    const auto& tri = mesh.triangles[t];
    Eigen::Vector2d mean = Eigen::Vector2d::Zero();
    for (int q = 0; q < rule.size(); ++q) {
      const auto& l = rule.barycentric[q];
      const Eigen::Vector2d x = l[0] * mesh.vertices[tri[0]] + l[1] * mesh.vertices[tri[1]] +
                                l[2] * mesh.vertices[tri[2]];
      mean += rule.weights[q] * (z(x) - eval_velocity(w, t, l));
    }
    const Eigen::Vector2d bubble = mean / kBubbleMean;
    w.coeffs[space.velocity_dof(nv + t, 0)] = bubble.x();
    w.coeffs[space.velocity_dof(nv + t, 1)] = bubble.y();
  }
  return w;
}

DiscreteFunction prolongate(const DiscreteFunction& coarse, const MixedSpace& fine_space) {
  const MixedSpace& cs = *coarse.space;
  const TriMesh& cm = *cs.mesh;
  const TriMesh& fm = *fine_space.mesh;
  if (cs.pair != fine_space.pair || fm.level != cm.level + 1 ||
      fm.n_vertices() != cm.n_vertices() + cm.n_edges() ||
      fm.n_triangles() != 4 * cm.n_triangles()) {
    throw std::invalid_argument("prolongate: fine space is not the red refinement of the coarse one");
  }

  // Coarse parent of fine triangle 4k+j is k by construction.
  auto eval_coarse_at = [&](int fine_tri, const Eigen::Vector2d& x, auto&& eval) {
    const int k = fine_tri / 4;
    const ElementGeometry geom = element_geometry(cm, k);
    return eval(k, barycentric(geom, x));
  };

  // One incident fine triangle per fine scalar node.
  std::vector<int> node_tri(fine_space.n_scalar_nodes, -1);
  for (int t = 0; t < fm.n_triangles(); ++t) {
    const int per = fine_space.velocity_nodes_per_element();
    for (int loc = 0; loc < per; ++loc) {
      const int n = fine_space.scalar_node(t, loc);
      if (node_tri[n] < 0) node_tri[n] = t;
    }
  }

  DiscreteFunction out = zero_function(fine_space, coarse.role);
  if (coarse.role == FieldRole::Pressure) {
    for (int v = 0; v < fm.n_vertices(); ++v) {
      out.coeffs[v] = eval_coarse_at(node_tri[v], fm.vertices[v], [&](int k, const Eigen::Vector3d& l) {
        return eval_pressure(coarse, k, l);
      });
    }
    return out;
  }

  const int nv = fm.n_vertices();
  auto node_position = [&](int n) -> Eigen::Vector2d {
    if (n < nv) return fm.vertices[n];
    if (fine_space.pair == ElementPair::TaylorHood) {
      const auto& e = fm.edges[n - nv];
      return 0.5 * (fm.vertices[e[0]] + fm.vertices[e[1]]);
    }
    const auto& tri = fm.triangles[n - nv];
    return (fm.vertices[tri[0]] + fm.vertices[tri[1]] + fm.vertices[tri[2]]) / 3.0;
  };

  // Vertex and edge nodes first (point values), then Mini bubbles
  // hierarchically: bubble = value at barycenter minus the P1 part there.
  for (int n = 0; n < fine_space.n_scalar_nodes; ++n) {
    if (fine_space.pair == ElementPair::Mini && n >= nv) continue;
    const Eigen::Vector2d v = eval_coarse_at(node_tri[n], node_position(n),
                                             [&](int k, const Eigen::Vector3d& l) {
                                               return eval_velocity(coarse, k, l);
                                             });
    out.coeffs[fine_space.velocity_dof(n, 0)] = v.x();
    out.coeffs[fine_space.velocity_dof(n, 1)] = v.y();
  }
  if (fine_space.pair == ElementPair::Mini) {
    for (int t = 0; t < fm.n_triangles(); ++t) {
      const auto& tri = fm.triangles[t];
      const Eigen::Vector2d v = eval_coarse_at(t, node_position(nv + t),
                                               [&](int k, const Eigen::Vector3d& l) {
                                                 return eval_velocity(coarse, k, l);
                                               });
      for (int c = 0; c < 2; ++c) {
        const double p1_at_bc = (out.coeffs[fine_space.velocity_dof(tri[0], c)] +
                                 out.coeffs[fine_space.velocity_dof(tri[1], c)] +
                                 out.coeffs[fine_space.velocity_dof(tri[2], c)]) /
                                3.0;
        out.coeffs[fine_space.velocity_dof(nv + t, c)] = v[c] - p1_at_bc;
      }
    }
  }
  return out;
}

AuxMatrices assemble_aux_matrices(const MixedSpace& space) {
  const TriMesh& mesh = *space.mesh;
  // Degree 6 integrates every product exactly (bubble x bubble is degree 6).
  const QuadratureRule& rule = quadrature_rule(6);
  const int per = space.velocity_nodes_per_element();

  std::vector<VelocityShape> shapes(rule.size());
  for (int q = 0; q < rule.size(); ++q) velocity_shape(space.pair, rule.barycentric[q], shapes[q]);

  std::vector<Eigen::Triplet<double>> tm, ta, tb;
  for (int t = 0; t < mesh.n_triangles(); ++t) {
    const ElementGeometry geom = element_geometry(mesh, t);
    const auto& tri = mesh.triangles[t];
    for (int q = 0; q < rule.size(); ++q) {
      const double w = rule.weights[q] * geom.area;
      const auto& l = rule.barycentric[q];
      const VelocityShape& sh = shapes[q];
      Eigen::Vector2d grad[6];
      for (int n = 0; n < per; ++n) grad[n] = geom.inverse.transpose() * sh.grad_ref[n];

      for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
          tm.emplace_back(tri[i], tri[j], w * l[i] * l[j]);
        }
      }
      for (int n = 0; n < per; ++n) {
        const int gn = space.scalar_node(t, n);
        for (int m = 0; m < per; ++m) {
          const int gm = space.scalar_node(t, m);
          const double val = w * (sh.value[n] * sh.value[m] + grad[n].dot(grad[m]));
          for (int c = 0; c < 2; ++c) {
            ta.emplace_back(space.velocity_dof(gn, c), space.velocity_dof(gm, c), val);
          }
        }
        for (int i = 0; i < 3; ++i) {
          for (int c = 0; c < 2; ++c) {
            tb.emplace_back(tri[i], space.velocity_dof(gn, c), w * l[i] * grad[n][c]);
          }
        }
      }
    }
  }

  AuxMatrices out;
  out.pressure_mass.resize(space.n_pressure_dofs, space.n_pressure_dofs);
  out.pressure_mass.setFromTriplets(tm.begin(), tm.end());
  out.velocity_h1.resize(space.n_velocity_dofs, space.n_velocity_dofs);
  out.velocity_h1.setFromTriplets(ta.begin(), ta.end());
  out.divergence.resize(space.n_pressure_dofs, space.n_velocity_dofs);
  out.divergence.setFromTriplets(tb.begin(), tb.end());
  return out;
}

}  // namespace pns
