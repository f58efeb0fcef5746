#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pns/solver.hpp"

namespace pns {

/// Exponent bookkeeping for d = 2: conjugates, the pressure exponent
/// s = max{p, (p*/2)'}, and ell = max{2, s}.
struct ExponentSet {
  double p = 0.0;
  double p_conj = 0.0;
  double s = 0.0;
  double s_conj = 0.0;
  double ell = 0.0;
  double ell_conj = 0.0;
  double r = 0.0;               // min{2, p}
  double sobolev_p_star = 0.0;  // 2p/(2-p) for p < 2, +inf otherwise
};

ExponentSet exponents(double p);

/// gamma of the manufactured pressure |x|^gamma - <|x|^gamma>:
/// case 1: 1 - 2/p' + beta;  case 2: beta (p-2)/2 + beta, with beta = 0.01.
double gamma_for_case(double p, int case_id);

/// <|x|^gamma> over (0,1)^2 by degree-12 quadrature on the level-6 mesh
/// (origin-adapted; gamma must exceed -2).
double pressure_mean_constant(double gamma, int level = 6, int degree = 12);

/// One benchmark configuration: v = (1/10)|x|^beta x, q = |x|^gamma - c_q.
struct ManufacturedCase {
  int case_id = 1;
  double p = 2.0;
  double beta = 0.01;
  double gamma = 0.0;
  double delta = 1e-5;
  double nu = 0.1;
  double pressure_mean = 0.0;  // c_q, computed once per case

  StressParams stress() const { return {p, delta, nu}; }
};

ManufacturedCase make_case(int case_id, double p);

/// Pointwise evaluators of the manufactured fields and the data they induce.
/// Gradient quantities are singular at the origin; quadrature points never
/// hit it.
class ManufacturedFields {
 public:
  explicit ManufacturedFields(const ManufacturedCase& c) : c_(c) {}

  Eigen::Vector2d velocity(const Eigen::Vector2d& x) const;
  Eigen::Matrix2d grad_velocity(const Eigen::Vector2d& x) const;  // symmetric
  SymTensor2 strain(const Eigen::Vector2d& x) const;
  double g1(const Eigen::Vector2d& x) const;  // div v
  double pressure(const Eigen::Vector2d& x) const;
  Eigen::Vector2d grad_pressure(const Eigen::Vector2d& x) const;
  SymTensor2 F_of_strain(const Eigen::Vector2d& x) const;
  MomentumData momentum(const Eigen::Vector2d& x) const;

  const ManufacturedCase& c() const { return c_; }

 private:
  ManufacturedCase c_;
};

/// Builds the discrete problem for one case on one space.
ProblemData make_problem(const ManufacturedCase& c, const MixedSpace& space, int quad_degree = 8);

/// ||f_h - f|| in the natural norms: e_v = ||F(Dv_h) - F(Dv)||_2 and
/// e_q^a = ||q_h - q||_{a'} for a in {s, ell, p}.
struct ErrorRecord {
  double e_v = 0.0;
  double e_q_s = 0.0;
  double e_q_ell = 0.0;
  double e_q_p = 0.0;
};

ErrorRecord error_norms(const DiscreteState& state, const MixedSpace& space,
                        const ManufacturedCase& c, const ExponentSet& exps, int degree = 12);

/// ||v_h||_{1,p} + ||q_h||_{s'}, the a priori stability quantity.
double stability_norm(const DiscreteState& state, const MixedSpace& space, const ExponentSet& exps,
                      int degree = 12);

/// Modular rho_{(phi_{|Dv|})*}(h grad q) by quadrature on the given mesh.
double dual_modular_diagnostic(const ManufacturedCase& c, const TriMesh& mesh, double h,
                               int degree = 12);

/// Discrete compatibility defect int_Omega g1 - int_dOmega g2 . n (boundary
/// flux by Gauss quadrature on the boundary edges).
double compatibility_defect(const ManufacturedCase& c, const TriMesh& mesh, int degree = 12);

/// EOC_i = log(e_i/e_{i-1}) / log(h_i/h_{i-1}); entries with nonpositive
/// errors yield NaN markers rather than throwing.
std::vector<double> eoc(const std::vector<double>& errors, const std::vector<double>& hs);

/// Per-level study record.  `stability` is diagnostic only and is not part
/// of the CSV schema.
struct EocRow {
  int level = 0;
  double h = 0.0;
  int ndof_v = 0;
  int ndof_q = 0;
  double e_v = 0.0;
  double e_q_s = 0.0;
  double e_q_ell = 0.0;
  double e_q_p = 0.0;
  int newton_iters = 0;
  double dual_modular = 0.0;
  double stability = 0.0;
};

struct EocTable {
  ElementPair pair = ElementPair::Mini;
  int case_id = 1;
  double p = 2.0;
  std::vector<EocRow> rows;
};

/// Writes the table as CSV with header
/// level,h,ndof_v,ndof_q,e_v,eoc_v,e_q_s,eoc_q_s,e_q_ell,eoc_q_ell,e_q_p,eoc_q_p,newton_iters,dual_modular
/// (17 significant digits, EOC cells of the first row empty).
void emit_csv(const EocTable& table, const std::string& path);

struct StudyConfig {
  ElementPair pair = ElementPair::Mini;
  int case_id = 1;
  std::vector<double> p_list;
  int max_level = 5;
  int assembly_degree = 8;
  int error_degree = 12;
  NewtonConfig newton;
  bool p_continuation = false;  // level-0 continuation in the stress exponent
};

/// Runs the convergence study for every p in the list: nested Newton
/// continuation over levels 0..max_level, error norms, EOCs, diagnostics.
/// Deterministic; throws NewtonFailure (annotated with p and level) on
/// solver breakdown.
std::vector<EocTable> run_study(const StudyConfig& cfg);
EocTable run_single_study(const StudyConfig& cfg, double p, DiscreteState* final_state = nullptr);

/// Discrete inf-sup constants beta_h (p = 2 setting) for levels 1..max_level:
/// smallest nonzero eigenvalue of B A1^{-1} B^T q = lambda M q on mean-zero
/// pressures, by inverse iteration with deflation of the constant mode.
std::vector<double> infsup_probe(ElementPair pair, int max_level);

/// Analytic rate curves for the Figure-1 style plots.
struct RateRow {
  double p, s, s_conj, ell, ell_conj;
  double rate_v_case1;  // min{1, p'/2}
  double rate_q_s;      // min{2/p', p'/2}
  double rate_q_ell;    // 1
};
std::vector<RateRow> rates_curves(const std::vector<double>& p_grid);
void emit_rates_csv(const std::vector<RateRow>& rows, const std::string& path);

}  // namespace pns
