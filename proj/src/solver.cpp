#include "pns/solver.hpp"

#include <Eigen/SparseLU>
#include <cmath>

namespace pns {

namespace {

// Quadrature data for one element: weights, physical points, barycentric
// coordinates.  Elements touching the origin corner get the composite rule
// (the manufactured data have a point singularity there).
struct ElementPoints {
  std::vector<double> w;
  std::vector<Eigen::Vector2d> x;
  std::vector<Eigen::Vector3d> bary;
};

ElementPoints element_points(const TriMesh& mesh, int t, const QuadratureRule& rule,
                             const ElementGeometry& geom) {
  ElementPoints pts;
  const ElementQuad eq = element_quadrature(mesh, t, rule, {true, 48});
  pts.w = eq.weights;
  pts.x = eq.points;
  pts.bary.reserve(eq.points.size());
  for (const auto& x : eq.points) pts.bary.push_back(barycentric(geom, x));
  return pts;
}

struct LocalState {
  int per = 0;
  double vcoef[6][2];
  double pcoef[3];
  int vnode[6];
  const std::array<int, 3>* tri = nullptr;
};

LocalState gather_local(const MixedSpace& space, const DiscreteState& state, int t) {
  LocalState loc;
  loc.per = space.velocity_nodes_per_element();
  loc.tri = &space.mesh->triangles[t];
  for (int n = 0; n < loc.per; ++n) {
    loc.vnode[n] = space.scalar_node(t, n);
    loc.vcoef[n][0] = state.velocity[space.velocity_dof(loc.vnode[n], 0)];
    loc.vcoef[n][1] = state.velocity[space.velocity_dof(loc.vnode[n], 1)];
  }
  for (int m = 0; m < 3; ++m) loc.pcoef[m] = state.pressure[(*loc.tri)[m]];
  return loc;
}

}  // namespace

DiscreteState zero_state(const MixedSpace& space) {
  DiscreteState s;
  s.velocity = Eigen::VectorXd::Zero(space.n_velocity_dofs);
  s.pressure = Eigen::VectorXd::Zero(space.n_pressure_dofs);
  s.mean_multiplier = 0.0;
  return s;
}

Eigen::VectorXd state_to_vector(const MixedSpace& space, const DiscreteState& state) {
  Eigen::VectorXd x(space.system_size());
  x.head(space.n_velocity_dofs) = state.velocity;
  x.segment(space.n_velocity_dofs, space.n_pressure_dofs) = state.pressure;
  x[space.system_size() - 1] = state.mean_multiplier;
  return x;
}

DiscreteState vector_to_state(const MixedSpace& space, const Eigen::VectorXd& x) {
  DiscreteState s;
  s.velocity = x.head(space.n_velocity_dofs);
  s.pressure = x.segment(space.n_velocity_dofs, space.n_pressure_dofs);
  s.mean_multiplier = x[space.system_size() - 1];
  return s;
}

double temam_b(const MixedSpace& space, const DiscreteFunction& u, const DiscreteFunction& v,
               const DiscreteFunction& w, const ScalarField& g1, int quad_degree) {
  if (u.space != &space || v.space != &space || w.space != &space) {
    throw std::invalid_argument("temam_b: all functions must live on the given space");
  }
  const TriMesh& mesh = *space.mesh;
  const QuadratureRule& rule = quadrature_rule(quad_degree);
  double acc = 0.0;
  for (int t = 0; t < mesh.n_triangles(); ++t) {
    const ElementGeometry geom = element_geometry(mesh, t);
    const auto& tri = mesh.triangles[t];
    for (int q = 0; q < rule.size(); ++q) {
      const auto& l = rule.barycentric[q];
      const Eigen::Vector2d x = l[0] * mesh.vertices[tri[0]] + l[1] * mesh.vertices[tri[1]] +
                                l[2] * mesh.vertices[tri[2]];
      const Eigen::Vector2d uu = eval_velocity(u, t, l);
      const Eigen::Vector2d vv = eval_velocity(v, t, l);
      const Eigen::Vector2d ww = eval_velocity(w, t, l);
      const Eigen::Matrix2d gv = eval_velocity_gradient(v, t, l);
      const Eigen::Matrix2d gw = eval_velocity_gradient(w, t, l);
      const double g1v = g1 ? g1(x) : 0.0;
      const double integrand =
          0.5 * (ww.dot(gv * uu) + g1v * uu.dot(ww) - vv.dot(gw * uu));
      acc += rule.weights[q] * geom.area * integrand;
    }
  }
  return acc;
}

Eigen::VectorXd assemble_residual(const ProblemData& data, const DiscreteState& state) {
  const MixedSpace& space = *data.space;
  const TriMesh& mesh = *space.mesh;
  const QuadratureRule& rule = quadrature_rule(data.quad_degree);
  const int nvd = space.n_velocity_dofs;
  const int mean_row = space.system_size() - 1;

  Eigen::VectorXd r = Eigen::VectorXd::Zero(space.system_size());

  VelocityShape sh;
  for (int t = 0; t < mesh.n_triangles(); ++t) {
    const ElementGeometry geom = element_geometry(mesh, t);
    const ElementPoints pts = element_points(mesh, t, rule, geom);
    const LocalState loc = gather_local(space, state, t);

    for (size_t q = 0; q < pts.w.size(); ++q) {
      const double w = pts.w[q];
      const Eigen::Vector3d& l = pts.bary[q];
      velocity_shape(space.pair, l, sh);
      Eigen::Vector2d grad[6];
      for (int n = 0; n < loc.per; ++n) grad[n] = geom.inverse.transpose() * sh.grad_ref[n];

      Eigen::Vector2d u = Eigen::Vector2d::Zero();
      Eigen::Matrix2d gu = Eigen::Matrix2d::Zero();
      for (int n = 0; n < loc.per; ++n) {
        u.x() += loc.vcoef[n][0] * sh.value[n];
        u.y() += loc.vcoef[n][1] * sh.value[n];
        gu.row(0) += loc.vcoef[n][0] * grad[n].transpose();
        gu.row(1) += loc.vcoef[n][1] * grad[n].transpose();
      }
      const double div_u = gu.trace();
      const double qh = loc.pcoef[0] * l[0] + loc.pcoef[1] * l[1] + loc.pcoef[2] * l[2];

      const SymTensor2 s = S_of(data.stress, gu);
      const double g1v = data.g1 ? data.g1(pts.x[q]) : 0.0;
      const MomentumData md = data.rhs ? data.rhs(pts.x[q]) : MomentumData{};
      const Eigen::Vector2d conv_u = gu * u;  // (u . grad) u

      for (int n = 0; n < loc.per; ++n) {
        const Eigen::Vector2d& gn = grad[n];
        const double u_dot_gn = u.dot(gn);
        const Eigen::Vector2d s_gn = s.apply(gn);
        const Eigen::Vector2d sex_gn = md.stress.apply(gn);
        for (int c = 0; c < 2; ++c) {
          const int dof = space.velocity_dof(loc.vnode[n], c);
          if (space.scalar_node_on_boundary[loc.vnode[n]]) continue;
          double val = s_gn[c];
          val += 0.5 * (conv_u[c] * sh.value[n] + g1v * u[c] * sh.value[n] - u[c] * u_dot_gn);
          val -= qh * gn[c];
          // weak right-hand side (f, z) from the exact fields
          val -= sex_gn[c] - md.flux.row(c).dot(gn) - md.pressure * gn[c];
          r[dof] += w * val;
        }
      }
      for (int m = 0; m < 3; ++m) {
        r[nvd + (*loc.tri)[m]] += w * l[m] * (div_u - g1v + state.mean_multiplier);
      }
      r[mean_row] += w * qh;
    }
  }
  return r;
}

Eigen::SparseMatrix<double> assemble_jacobian(const ProblemData& data, const DiscreteState& state) {
  const MixedSpace& space = *data.space;
  const TriMesh& mesh = *space.mesh;
  const QuadratureRule& rule = quadrature_rule(data.quad_degree);
  const int nvd = space.n_velocity_dofs;
  const int mean_row = space.system_size() - 1;

  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<size_t>(mesh.n_triangles()) * 260);

  VelocityShape sh;
  for (int t = 0; t < mesh.n_triangles(); ++t) {
    const ElementGeometry geom = element_geometry(mesh, t);
    const ElementPoints pts = element_points(mesh, t, rule, geom);
    const LocalState loc = gather_local(space, state, t);
    const int per = loc.per;

    Eigen::Matrix<double, 12, 12> kvv = Eigen::Matrix<double, 12, 12>::Zero();
    Eigen::Matrix<double, 12, 3> kvp = Eigen::Matrix<double, 12, 3>::Zero();
    Eigen::Vector3d kpm = Eigen::Vector3d::Zero();

    for (size_t q = 0; q < pts.w.size(); ++q) {
      const double w = pts.w[q];
      const Eigen::Vector3d& l = pts.bary[q];
      velocity_shape(space.pair, l, sh);
      Eigen::Vector2d grad[6];
      for (int n = 0; n < per; ++n) grad[n] = geom.inverse.transpose() * sh.grad_ref[n];

      Eigen::Vector2d u = Eigen::Vector2d::Zero();
      Eigen::Matrix2d gu = Eigen::Matrix2d::Zero();
      for (int n = 0; n < per; ++n) {
        u.x() += loc.vcoef[n][0] * sh.value[n];
        u.y() += loc.vcoef[n][1] * sh.value[n];
        gu.row(0) += loc.vcoef[n][0] * grad[n].transpose();
        gu.row(1) += loc.vcoef[n][1] * grad[n].transpose();
      }
      const double g1v = data.g1 ? data.g1(pts.x[q]) : 0.0;
      const StressJacobian jac = S_jacobian(data.stress, gu);

      // Stress linearization applied to every trial strain.
      SymTensor2 tmd[12];
      for (int m = 0; m < per; ++m) {
        const Eigen::Vector2d& gm = grad[m];
        tmd[2 * m] = jac.apply(SymTensor2{gm.x(), 0.5 * gm.y(), 0.0});
        tmd[2 * m + 1] = jac.apply(SymTensor2{0.0, 0.5 * gm.x(), gm.y()});
      }

      for (int n = 0; n < per; ++n) {
        const Eigen::Vector2d& gn = grad[n];
        const double u_dot_gn = u.dot(gn);
        for (int m = 0; m < per; ++m) {
          const Eigen::Vector2d& gm = grad[m];
          const double gm_dot_u = gm.dot(u);
          const double nm_nn = sh.value[m] * sh.value[n];
          for (int c = 0; c < 2; ++c) {
            for (int d = 0; d < 2; ++d) {
              double val = tmd[2 * m + d].apply(gn)[c];
              double conv = gu(c, d) * nm_nn - u[c] * sh.value[m] * gn[d];
              if (c == d) {
                conv += gm_dot_u * sh.value[n] + g1v * nm_nn - sh.value[m] * u_dot_gn;
              }
              val += 0.5 * conv;
              kvv(2 * n + c, 2 * m + d) += w * val;
            }
          }
        }
        for (int m = 0; m < 3; ++m) {
          const double bterm = w * l[m] * gn.x();
          const double bterm_y = w * l[m] * gn.y();
          kvp(2 * n + 0, m) -= bterm;
          kvp(2 * n + 1, m) -= bterm_y;
        }
      }
      for (int m = 0; m < 3; ++m) kpm[m] += w * l[m];
    }

    // Scatter with Dirichlet test rows dropped.
    for (int n = 0; n < per; ++n) {
      const bool bdry_n = space.scalar_node_on_boundary[loc.vnode[n]];
      for (int c = 0; c < 2; ++c) {
        const int row = space.velocity_dof(loc.vnode[n], c);
        if (!bdry_n) {
          for (int m = 0; m < per; ++m) {
            for (int d = 0; d < 2; ++d) {
              trip.emplace_back(row, space.velocity_dof(loc.vnode[m], d), kvv(2 * n + c, 2 * m + d));
            }
          }
          for (int m = 0; m < 3; ++m) {
            trip.emplace_back(row, nvd + (*loc.tri)[m], kvp(2 * n + c, m));
          }
        }
        // Continuity rows: +(div z, eta), exactly the transposed coupling.
        for (int m = 0; m < 3; ++m) {
          trip.emplace_back(nvd + (*loc.tri)[m], row, -kvp(2 * n + c, m));
        }
      }
    }
    for (int m = 0; m < 3; ++m) {
      trip.emplace_back(nvd + (*loc.tri)[m], mean_row, kpm[m]);
      trip.emplace_back(mean_row, nvd + (*loc.tri)[m], kpm[m]);
    }
  }

  for (int dof : space.boundary_velocity_dofs) trip.emplace_back(dof, dof, 1.0);

  Eigen::SparseMatrix<double> j(space.system_size(), space.system_size());
  j.setFromTriplets(trip.begin(), trip.end());
  return j;
}

Eigen::VectorXd linear_solve(const Eigen::SparseMatrix<double>& a, const Eigen::VectorXd& b) {
  if (a.rows() != a.cols() || a.rows() != b.size()) {
    throw std::invalid_argument("linear_solve: dimension mismatch");
  }
  Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
  lu.analyzePattern(a);
  lu.factorize(a);
  if (lu.info() != Eigen::Success) {
    throw std::runtime_error("linear_solve: factorization failed (" + lu.lastErrorMessage() + ")");
  }
  Eigen::VectorXd x = lu.solve(b);
  const double bn = b.cwiseAbs().maxCoeff();
  if (bn > 0.0) {
    double res = (a * x - b).cwiseAbs().maxCoeff();
    if (res > 1e-11 * bn) {
      x += lu.solve(Eigen::VectorXd(b - a * x));  // one refinement step
      res = (a * x - b).cwiseAbs().maxCoeff();
      if (res > 1e-11 * bn) {
        throw std::runtime_error("linear_solve: residual " + std::to_string(res / bn) +
                                 " exceeds tolerance");
      }
    }
  }
  return x;
}

std::pair<DiscreteState, SolveReport> newton_solve(const ProblemData& data, DiscreteState init,
                                                   const NewtonConfig& cfg) {
  if (!(cfg.abs_tol > 0.0) || !(cfg.rel_tol > 0.0) || cfg.max_iter < 0 || !(cfg.damping > 0.0)) {
    throw std::invalid_argument("newton_solve: tolerances and damping must be positive");
  }
  const MixedSpace& space = *data.space;
  SolveReport report;
  DiscreteState state = std::move(init);

  Eigen::VectorXd r = assemble_residual(data, state);
  double rn = r.norm();
  report.residual_history.push_back(rn);
  const double r0 = rn;
  if (rn <= cfg.abs_tol) {
    report.converged = true;
    return {std::move(state), report};
  }

  for (int it = 1; it <= cfg.max_iter; ++it) {
    const Eigen::SparseMatrix<double> j = assemble_jacobian(data, state);
    const Eigen::VectorXd dx = linear_solve(j, r);
    const Eigen::VectorXd x = state_to_vector(space, state) - cfg.damping * dx;
    state = vector_to_state(space, x);

    r = assemble_residual(data, state);
    rn = r.norm();
    report.residual_history.push_back(rn);
    report.iterations = it;
    if (rn <= cfg.abs_tol || rn <= cfg.rel_tol * r0) {
      report.converged = true;
      return {std::move(state), report};
    }
  }
  throw NewtonFailure("newton_solve: no convergence within max_iter", report);
}

DiscreteState apply_dirichlet(const ProblemData& data, DiscreteState state) {
  const MixedSpace& space = *data.space;
  const int order = (space.pair == ElementPair::Mini) ? 1 : 2;
  const DiscreteFunction trace = scott_zhang(space, order, data.g2);
  for (int dof : space.boundary_velocity_dofs) state.velocity[dof] = trace.coeffs[dof];
  return state;
}

}  // namespace pns
