#include "pns/quadrature.hpp"

#include <cmath>
#include <stdexcept>

namespace pns {

namespace {

struct NodesWeights {
  std::vector<double> x;
  std::vector<double> w;
};

// Golub-Welsch: nodes and weights from the symmetric Jacobi recurrence
// matrix (diagonal diag, subdiagonal sub) and the zeroth moment mu0.
NodesWeights golub_welsch(const Eigen::VectorXd& diag, const Eigen::VectorXd& sub, double mu0) {
  const int n = static_cast<int>(diag.size());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  es.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
  if (es.info() != Eigen::Success) throw std::runtime_error("golub_welsch: eigensolver failed");
  NodesWeights out;
  out.x.resize(n);
  out.w.resize(n);
  for (int i = 0; i < n; ++i) {
    out.x[i] = es.eigenvalues()[i];
    const double v0 = es.eigenvectors()(0, i);
    out.w[i] = mu0 * v0 * v0;
  }
  return out;
}

// Gauss-Legendre on [0,1], weight 1; weights sum to 1.
NodesWeights legendre01(int n) {
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd sub(n > 1 ? n - 1 : 0);
  for (int k = 1; k < n; ++k) sub[k - 1] = k / std::sqrt(4.0 * k * k - 1.0);
  NodesWeights nw = golub_welsch(diag, sub, 2.0);
  for (int i = 0; i < n; ++i) {
    nw.x[i] = 0.5 * (nw.x[i] + 1.0);
    nw.w[i] *= 0.5;
  }
  return nw;
}

// Gauss-Jacobi on [0,1] with weight (1-y); weights sum to 1/2.
NodesWeights jacobi10_01(int n) {
  Eigen::VectorXd diag(n);
  Eigen::VectorXd sub(n > 1 ? n - 1 : 0);
  diag[0] = -1.0 / 3.0;
  for (int k = 1; k < n; ++k) {
    diag[k] = -1.0 / ((2.0 * k + 1.0) * (2.0 * k + 3.0));
    sub[k - 1] = std::sqrt(k * (k + 1.0)) / (2.0 * k + 1.0);
  }
  NodesWeights nw = golub_welsch(diag, sub, 2.0);
  for (int i = 0; i < n; ++i) {
    nw.x[i] = 0.5 * (nw.x[i] + 1.0);
    nw.w[i] *= 0.25;
  }
  return nw;
}

QuadratureRule make_triangle_rule(int degree) {
  const int n = (degree + 2) / 2;  // 2n-1 >= degree
  const NodesWeights gl = legendre01(n);
  const NodesWeights gj = jacobi10_01(n);
  QuadratureRule rule;
  rule.degree = 2 * n - 1;
  rule.barycentric.reserve(n * n);
  rule.weights.reserve(n * n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const double y = gj.x[j];
      const double x = gl.x[i] * (1.0 - y);
      rule.barycentric.emplace_back(1.0 - x - y, x, y);
      rule.weights.push_back(2.0 * gl.w[i] * gj.w[j]);
    }
  }
  return rule;
}

GaussRule1d make_gauss_1d(int degree) {
  const int n = (degree + 2) / 2;
  const NodesWeights gl = legendre01(n);
  GaussRule1d rule;
  rule.degree = 2 * n - 1;
  rule.points = gl.x;
  rule.weights = gl.w;
  return rule;
}

constexpr int kMaxDegree = 20;

}  // namespace

const QuadratureRule& quadrature_rule(int degree) {
  if (degree < 1 || degree > kMaxDegree) {
    throw std::invalid_argument("quadrature_rule: degree must lie in 1..20");
  }
  static const std::vector<QuadratureRule> rules = [] {
    std::vector<QuadratureRule> r(kMaxDegree + 1);
    for (int d = 1; d <= kMaxDegree; ++d) r[d] = make_triangle_rule(d);
    return r;
  }();
  return rules[degree];
}

const GaussRule1d& gauss_rule_1d(int degree) {
  if (degree < 1 || degree > kMaxDegree) {
    throw std::invalid_argument("gauss_rule_1d: degree must lie in 1..20");
  }
  static const std::vector<GaussRule1d> rules = [] {
    std::vector<GaussRule1d> r(kMaxDegree + 1);
    for (int d = 1; d <= kMaxDegree; ++d) r[d] = make_gauss_1d(d);
    return r;
  }();
  return rules[degree];
}

ElementQuad map_rule(const Eigen::Vector2d& a, const Eigen::Vector2d& b, const Eigen::Vector2d& c,
                     const QuadratureRule& rule) {
  ElementQuad eq;
  const double area =
      0.5 * std::abs((b.x() - a.x()) * (c.y() - a.y()) - (b.y() - a.y()) * (c.x() - a.x()));
  eq.points.reserve(rule.size());
  eq.weights.reserve(rule.size());
  for (int q = 0; q < rule.size(); ++q) {
    const auto& l = rule.barycentric[q];
    eq.points.emplace_back(l[0] * a + l[1] * b + l[2] * c);
    eq.weights.push_back(rule.weights[q] * area);
  }
  return eq;
}

ElementQuad element_quadrature(const TriMesh& mesh, int tri, const QuadratureRule& rule,
                               const QuadOptions& opts) {
  const auto& t = mesh.triangles[tri];
  const Eigen::Vector2d p0 = mesh.vertices[t[0]];
  const Eigen::Vector2d p1 = mesh.vertices[t[1]];
  const Eigen::Vector2d p2 = mesh.vertices[t[2]];

  int origin_local = -1;
  if (opts.origin_adapted) {
    const Eigen::Vector2d pts[3] = {p0, p1, p2};
    for (int k = 0; k < 3; ++k) {
      if (pts[k].norm() < 1e-14) origin_local = k;
    }
  }
  if (origin_local < 0) return map_rule(p0, p1, p2, rule);

  // Composite rule, refined geometrically towards the origin vertex.
  const Eigen::Vector2d corners[3] = {p0, p1, p2};
  const Eigen::Vector2d o = corners[origin_local];
  Eigen::Vector2d ak = corners[(origin_local + 1) % 3];
  Eigen::Vector2d bk = corners[(origin_local + 2) % 3];

  ElementQuad eq;
  auto append = [&eq](const ElementQuad& piece) {
    eq.points.insert(eq.points.end(), piece.points.begin(), piece.points.end());
    eq.weights.insert(eq.weights.end(), piece.weights.begin(), piece.weights.end());
  };
  for (int k = 0; k < opts.composite_levels; ++k) {
    const Eigen::Vector2d an = 0.5 * (o + ak);
    const Eigen::Vector2d bn = 0.5 * (o + bk);
    append(map_rule(an, ak, bk, rule));
    append(map_rule(an, bk, bn, rule));
    ak = an;
    bk = bn;
  }
  append(map_rule(o, ak, bk, rule));
  return eq;
}

}  // namespace pns
