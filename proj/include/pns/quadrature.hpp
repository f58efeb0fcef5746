#pragma once

#include <Eigen/Dense>
#include <vector>

#include "pns/mesh.hpp"

namespace pns {

/// Quadrature rule on the reference triangle, points given in barycentric
/// coordinates, weights summing to 1 (scale by the element area at use).
/// All points are strictly interior.
struct QuadratureRule {
  int degree = 0;  // guaranteed polynomial exactness degree
  std::vector<Eigen::Vector3d> barycentric;
  std::vector<double> weights;

  int size() const { return static_cast<int>(weights.size()); }
};

/// Symmetric conical-product rule (Gauss-Legendre x Gauss-Jacobi) of at
/// least the requested exactness degree; degree must lie in 1..20.
const QuadratureRule& quadrature_rule(int degree);

/// Gauss-Legendre rule on [0,1], weights summing to 1.
struct GaussRule1d {
  int degree = 0;
  std::vector<double> points;
  std::vector<double> weights;
};
const GaussRule1d& gauss_rule_1d(int degree);

/// Quadrature points and weights on one physical triangle; weights sum to
/// the triangle area.
struct ElementQuad {
  std::vector<Eigen::Vector2d> points;
  std::vector<double> weights;
};

/// Maps a reference rule to the triangle (a, b, c).
ElementQuad map_rule(const Eigen::Vector2d& a, const Eigen::Vector2d& b, const Eigen::Vector2d& c,
                     const QuadratureRule& rule);

/// Quadrature plan for integrands with a point singularity at the origin
/// corner of the domain: elements owning the origin vertex are covered by a
/// composite rule refined geometrically towards the corner.
struct QuadOptions {
  bool origin_adapted = false;
  int composite_levels = 48;
};

ElementQuad element_quadrature(const TriMesh& mesh, int tri, const QuadratureRule& rule,
                               const QuadOptions& opts = {});

}  // namespace pns
