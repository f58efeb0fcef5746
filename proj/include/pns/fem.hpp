#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <functional>
#include <vector>

#include "pns/mesh.hpp"
#include "pns/quadrature.hpp"

namespace pns {

using ScalarField = std::function<double(const Eigen::Vector2d&)>;
using VectorField = std::function<Eigen::Vector2d(const Eigen::Vector2d&)>;

/// Inf-sup stable velocity/pressure pairs on triangles.
///  - Mini:       continuous P1 + cubic cell bubble per velocity component,
///                continuous P1 pressure.
///  - TaylorHood: continuous P2 velocity per component, continuous P1 pressure.
enum class ElementPair { Mini, TaylorHood };

/// Velocity/pressure DOF maps on one mesh.  Scalar velocity nodes are
/// numbered vertices first, then cells (Mini) or edges (Taylor-Hood); the
/// two components of node n live at 2n and 2n+1.  Pressure DOFs coincide
/// with vertex indices.
struct MixedSpace {
  const TriMesh* mesh = nullptr;
  ElementPair pair = ElementPair::Mini;
  int n_scalar_nodes = 0;
  int n_velocity_dofs = 0;
  int n_pressure_dofs = 0;
  std::vector<char> scalar_node_on_boundary;
  std::vector<int> boundary_velocity_dofs;  // ascending

  int velocity_nodes_per_element() const { return pair == ElementPair::Mini ? 4 : 6; }
  int velocity_dof(int scalar_node, int comp) const { return 2 * scalar_node + comp; }
  int scalar_node(int element, int local) const;
  int system_size() const { return n_velocity_dofs + n_pressure_dofs + 1; }
};

MixedSpace build_space(const TriMesh& mesh, ElementPair pair);

/// Values and reference gradients of the scalar velocity basis at one
/// barycentric point (reference coordinates x = l2, y = l3).
struct VelocityShape {
  int count = 0;
  double value[6];
  Eigen::Vector2d grad_ref[6];
};
void velocity_shape(ElementPair pair, const Eigen::Vector3d& bary, VelocityShape& out);

struct ElementGeometry {
  Eigen::Vector2d origin;   // first vertex
  Eigen::Matrix2d jacobian;  // reference -> physical
  Eigen::Matrix2d inverse;
  double area = 0.0;
};
ElementGeometry element_geometry(const TriMesh& mesh, int t);

/// Barycentric coordinates of a physical point with respect to element t.
Eigen::Vector3d barycentric(const ElementGeometry& geom, const Eigen::Vector2d& x);

enum class FieldRole { Velocity, Pressure };

struct DiscreteFunction {
  const MixedSpace* space = nullptr;
  FieldRole role = FieldRole::Velocity;
  Eigen::VectorXd coeffs;
};

DiscreteFunction zero_function(const MixedSpace& space, FieldRole role);

Eigen::Vector2d eval_velocity(const DiscreteFunction& f, int element, const Eigen::Vector3d& bary);
Eigen::Matrix2d eval_velocity_gradient(const DiscreteFunction& f, int element,
                                       const Eigen::Vector3d& bary);
double eval_pressure(const DiscreteFunction& f, int element, const Eigen::Vector3d& bary);

/// Scott-Zhang quasi-interpolation of order 1 (P1 nodes) or 2 (P2 nodes).
/// Nodal coefficients are biorthogonal-dual averages over a fixed assigned
/// simplex; boundary nodes average over a boundary edge, so the trace
/// depends only on f restricted to the boundary.  Order 1 on Mini leaves
/// the bubble components zero; order 2 requires Taylor-Hood.
DiscreteFunction scott_zhang(const MixedSpace& space, int order, const VectorField& f);

/// Clement-type pressure projection: each vertex coefficient is the mean
/// of f over the patch of triangles containing that vertex.
DiscreteFunction clement_pressure(const MixedSpace& space, const ScalarField& f);

/// Fortin interpolation for the Mini pair: first-order Scott-Zhang plus a
/// per-element bubble correction restoring the element means of z, which
/// preserves the divergence against every discrete pressure.  Intended for
/// fields with zero boundary trace.
DiscreteFunction mini_fortin(const MixedSpace& space, const VectorField& z, int quad_degree = 8);

/// Transfers a coarse function to the red-refined mesh by evaluation at the
/// fine nodal points.  Exact embedding for Taylor-Hood and for the P1 parts;
/// Mini bubbles are re-interpolated hierarchically at the fine barycenters.
DiscreteFunction prolongate(const DiscreteFunction& coarse, const MixedSpace& fine_space);

struct AuxMatrices {
  Eigen::SparseMatrix<double> pressure_mass;  // (eta_i, eta_j)
  Eigen::SparseMatrix<double> velocity_h1;    // (z_i, z_j) + (grad z_i, grad z_j)
  Eigen::SparseMatrix<double> divergence;     // rows pressure, cols velocity: (div z, eta)
};
AuxMatrices assemble_aux_matrices(const MixedSpace& space);

}  // namespace pns
