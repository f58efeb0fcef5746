#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <stdexcept>
#include <utility>
#include <vector>

#include "pns/constitutive.hpp"
#include "pns/fem.hpp"

namespace pns {

/// Exact-field data entering the weak right-hand side at one point:
/// the stress S(Dv), the momentum flux v (x) v and the pressure q.  The
/// action of f on a test function z is assembled as
///   (S(Dv), Dz) - (v (x) v, grad z) - (q, div z).
struct MomentumData {
  SymTensor2 stress;
  Eigen::Matrix2d flux = Eigen::Matrix2d::Zero();
  double pressure = 0.0;
};
using MomentumField = std::function<MomentumData(const Eigen::Vector2d&)>;

/// One discrete problem instance: stress law, divergence data g1, Dirichlet
/// data g2, weak right-hand side and the mixed space to solve on.
struct ProblemData {
  StressParams stress{2.0, 0.0, 1.0};
  ScalarField g1;
  VectorField g2;
  MomentumField rhs;
  const MixedSpace* space = nullptr;
  int quad_degree = 8;  // assembly quadrature degree (origin-adapted)
};

/// Coefficients of one solve: velocity, pressure and the scalar multiplier
/// enforcing the zero pressure mean.
struct DiscreteState {
  Eigen::VectorXd velocity;
  Eigen::VectorXd pressure;
  double mean_multiplier = 0.0;
};

DiscreteState zero_state(const MixedSpace& space);

struct NewtonConfig {
  double abs_tol = 1e-8;
  double rel_tol = 1e-10;
  int max_iter = 30;
  double damping = 1.0;
};

struct SolveReport {
  int iterations = 0;
  std::vector<double> residual_history;
  bool converged = false;
};

class NewtonFailure : public std::runtime_error {
 public:
  NewtonFailure(const std::string& what, SolveReport report)
      : std::runtime_error(what), report(std::move(report)) {}
  SolveReport report;
};

/// Temam's modified convective form
///   b(u,v,w) = 1/2 (w (x) u, grad v + g1 I) - 1/2 (v (x) u, grad w),
/// evaluated by quadrature of the given degree.
double temam_b(const MixedSpace& space, const DiscreteFunction& u, const DiscreteFunction& v,
               const DiscreteFunction& w, const ScalarField& g1, int quad_degree = 8);

/// Residual of the discrete system.  Layout: velocity dofs, pressure dofs,
/// mean row.  Dirichlet velocity rows are identically zero; the state is
/// expected to hold the boundary values there.
Eigen::VectorXd assemble_residual(const ProblemData& data, const DiscreteState& state);

/// Exact Newton matrix of the residual (Dirichlet rows replaced by identity).
Eigen::SparseMatrix<double> assemble_jacobian(const ProblemData& data, const DiscreteState& state);

/// Sparse direct solve with a residual check (one refinement step if needed).
Eigen::VectorXd linear_solve(const Eigen::SparseMatrix<double>& a, const Eigen::VectorXd& b);

/// Full-step Newton iteration; stops when ||R||_2 <= abs_tol or
/// ||R||_2 <= rel_tol ||R_0||_2.  Throws NewtonFailure past max_iter.
std::pair<DiscreteState, SolveReport> newton_solve(const ProblemData& data, DiscreteState init,
                                                   const NewtonConfig& cfg);

/// Writes the Scott-Zhang trace of g2 (order 1 on Mini, order 2 on
/// Taylor-Hood) into the boundary velocity coefficients.
DiscreteState apply_dirichlet(const ProblemData& data, DiscreteState state);

/// Flattened view used by the Newton loop and the finite-difference tests.
Eigen::VectorXd state_to_vector(const MixedSpace& space, const DiscreteState& state);
DiscreteState vector_to_state(const MixedSpace& space, const Eigen::VectorXd& x);

}  // namespace pns
