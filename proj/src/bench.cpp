#include "pns/bench.hpp"

#include <Eigen/SparseLU>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

namespace pns {

namespace {

constexpr double kBeta = 0.01;

std::vector<TriMesh> mesh_chain(int max_level) {
  std::vector<TriMesh> chain;
  chain.push_back(unit_square_initial());
  for (int i = 0; i < max_level; ++i) chain.push_back(red_refine(chain.back()));
  return chain;
}

// Quadrature sum of f over the mesh, origin-adapted.
template <typename F>
double integrate(const TriMesh& mesh, int degree, const QuadOptions& opts, F&& f) {
  const QuadratureRule& rule = quadrature_rule(degree);
  double acc = 0.0;
  for (int t = 0; t < mesh.n_triangles(); ++t) {
    const ElementQuad eq = element_quadrature(mesh, t, rule, opts);
    for (size_t q = 0; q < eq.weights.size(); ++q) acc += eq.weights[q] * f(eq.points[q]);
  }
  return acc;
}

}  // namespace

ExponentSet exponents(double p) {
  if (!(p > 1.0) || !std::isfinite(p)) throw std::domain_error("exponents: p must lie in (1, inf)");
  ExponentSet e;
  e.p = p;
  e.p_conj = p / (p - 1.0);
  if (p < 2.0) {
    e.sobolev_p_star = 2.0 * p / (2.0 - p);
    e.s = std::max(p, p / (2.0 * (p - 1.0)));  // (p*/2)' for d = 2
  } else {
    e.sobolev_p_star = std::numeric_limits<double>::infinity();
    e.s = p;  // placeholder limit of (p*/2)' = 1
  }
  e.s_conj = e.s / (e.s - 1.0);
  e.ell = std::max(2.0, e.s);
  e.ell_conj = std::min(2.0, e.s_conj);
  e.r = std::min(2.0, p);
  return e;
}

double gamma_for_case(double p, int case_id) {
  const double p_conj = p / (p - 1.0);
  if (case_id == 1) return 1.0 - 2.0 / p_conj + kBeta;
  if (case_id == 2) return kBeta * (p - 2.0) / 2.0 + kBeta;
  throw std::invalid_argument("gamma_for_case: case_id must be 1 or 2");
}

double pressure_mean_constant(double gamma, int level, int degree) {
  if (!(gamma > -2.0)) throw std::domain_error("pressure_mean_constant: gamma must exceed -2");
  const auto chain = mesh_chain(level);
  return integrate(chain.back(), degree, {true, 48},
                   [gamma](const Eigen::Vector2d& x) { return std::pow(x.norm(), gamma); });
}

ManufacturedCase make_case(int case_id, double p) {
  ManufacturedCase c;
  c.case_id = case_id;
  c.p = p;
  c.beta = kBeta;
  c.gamma = gamma_for_case(p, case_id);
  c.delta = 1e-5;
  c.nu = (p >= 2.0) ? 0.1 : 100.0;
  c.pressure_mean = pressure_mean_constant(c.gamma);
  return c;
}

Eigen::Vector2d ManufacturedFields::velocity(const Eigen::Vector2d& x) const {
  const double r = x.norm();
  if (r == 0.0) return Eigen::Vector2d::Zero();
  return 0.1 * std::pow(r, c_.beta) * x;
}

Eigen::Matrix2d ManufacturedFields::grad_velocity(const Eigen::Vector2d& x) const {
  const double r = x.norm();
  if (r == 0.0) throw std::domain_error("ManufacturedFields: gradient evaluated at the origin");
  const double rb = std::pow(r, c_.beta);
  Eigen::Matrix2d g = rb * Eigen::Matrix2d::Identity();
  g += c_.beta * rb / (r * r) * (x * x.transpose());
  return 0.1 * g;
}

SymTensor2 ManufacturedFields::strain(const Eigen::Vector2d& x) const {
  return SymTensor2::sym_part(grad_velocity(x));
}

double ManufacturedFields::g1(const Eigen::Vector2d& x) const {
  const double r = x.norm();
  if (r == 0.0) return 0.0;
  return 0.1 * (2.0 + c_.beta) * std::pow(r, c_.beta);
}

double ManufacturedFields::pressure(const Eigen::Vector2d& x) const {
  return std::pow(x.norm(), c_.gamma) - c_.pressure_mean;
}

Eigen::Vector2d ManufacturedFields::grad_pressure(const Eigen::Vector2d& x) const {
  const double r = x.norm();
  if (r == 0.0) throw std::domain_error("ManufacturedFields: gradient evaluated at the origin");
  return c_.gamma * std::pow(r, c_.gamma - 2.0) * x;
}

SymTensor2 ManufacturedFields::F_of_strain(const Eigen::Vector2d& x) const {
  return F_of(c_.stress(), grad_velocity(x));
}

MomentumData ManufacturedFields::momentum(const Eigen::Vector2d& x) const {
  MomentumData md;
  md.stress = S_of(c_.stress(), grad_velocity(x));
  const Eigen::Vector2d v = velocity(x);
  md.flux = v * v.transpose();
  md.pressure = pressure(x);
  return md;
}

ProblemData make_problem(const ManufacturedCase& c, const MixedSpace& space, int quad_degree) {
  ManufacturedFields fields(c);
  ProblemData data;
  data.stress = c.stress();
  data.g1 = [fields](const Eigen::Vector2d& x) { return fields.g1(x); };
  data.g2 = [fields](const Eigen::Vector2d& x) { return fields.velocity(x); };
  data.rhs = [fields](const Eigen::Vector2d& x) { return fields.momentum(x); };
  data.space = &space;
  data.quad_degree = quad_degree;
  return data;
}

ErrorRecord error_norms(const DiscreteState& state, const MixedSpace& space,
                        const ManufacturedCase& c, const ExponentSet& exps, int degree) {
  const TriMesh& mesh = *space.mesh;
  const ManufacturedFields fields(c);
  const StressParams sp = c.stress();
  const QuadratureRule& rule = quadrature_rule(degree);

  DiscreteFunction vh{&space, FieldRole::Velocity, state.velocity};
  DiscreteFunction qh{&space, FieldRole::Pressure, state.pressure};

  double acc_v = 0.0, acc_s = 0.0, acc_ell = 0.0, acc_p = 0.0;
  for (int t = 0; t < mesh.n_triangles(); ++t) {
    const ElementGeometry geom = element_geometry(mesh, t);
    const ElementQuad eq = element_quadrature(mesh, t, rule, {true, 48});
    for (size_t q = 0; q < eq.weights.size(); ++q) {
      const double w = eq.weights[q];
      const Eigen::Vector3d l = barycentric(geom, eq.points[q]);
      const SymTensor2 fd = F_of(sp, eval_velocity_gradient(vh, t, l)) - fields.F_of_strain(eq.points[q]);
      acc_v += w * fd.dot(fd);
      const double dq = std::abs(eval_pressure(qh, t, l) - fields.pressure(eq.points[q]));
      acc_s += w * std::pow(dq, exps.s_conj);
      acc_ell += w * std::pow(dq, exps.ell_conj);
      acc_p += w * std::pow(dq, exps.p_conj);
    }
  }
  ErrorRecord e;
  e.e_v = std::sqrt(acc_v);
  e.e_q_s = std::pow(acc_s, 1.0 / exps.s_conj);
  e.e_q_ell = std::pow(acc_ell, 1.0 / exps.ell_conj);
  e.e_q_p = std::pow(acc_p, 1.0 / exps.p_conj);
  return e;
}

double stability_norm(const DiscreteState& state, const MixedSpace& space, const ExponentSet& exps,
                      int degree) {
  const TriMesh& mesh = *space.mesh;
  const QuadratureRule& rule = quadrature_rule(degree);
  DiscreteFunction vh{&space, FieldRole::Velocity, state.velocity};
  DiscreteFunction qh{&space, FieldRole::Pressure, state.pressure};
  double acc_v = 0.0, acc_q = 0.0;
  for (int t = 0; t < mesh.n_triangles(); ++t) {
    const ElementGeometry geom = element_geometry(mesh, t);
    for (int q = 0; q < rule.size(); ++q) {
      const double w = rule.weights[q] * geom.area;
      const Eigen::Vector3d& l = rule.barycentric[q];
      const Eigen::Vector2d v = eval_velocity(vh, t, l);
      const Eigen::Matrix2d g = eval_velocity_gradient(vh, t, l);
      acc_v += w * (std::pow(v.norm(), exps.p) + std::pow(g.norm(), exps.p));
      acc_q += w * std::pow(std::abs(eval_pressure(qh, t, l)), exps.s_conj);
    }
  }
  return std::pow(acc_v, 1.0 / exps.p) + std::pow(acc_q, 1.0 / exps.s_conj);
}

double dual_modular_diagnostic(const ManufacturedCase& c, const TriMesh& mesh, double h,
                               int degree) {
  if (h == 0.0) return 0.0;
  const StressParams phi_params{c.p, c.delta, 1.0};  // the N-function carries no nu
  const double p_conj = c.p / (c.p - 1.0);
  // |Dv| = strain_scale r^beta and |grad q| = |gamma| r^{gamma-1}; both radial.
  const double strain_scale = 0.1 * std::sqrt(2.0 + 2.0 * c.beta + c.beta * c.beta);
  const double ln_hg = std::log(h * std::abs(c.gamma));

  // One quadrature point, given log weight and log radius.  The gamma
  // choices make the integrand barely integrable at the origin for case 1,
  // so deep radial scales matter; arguments are kept in log form and the
  // conjugate switches to its power-law asymptote once t is large.
  auto contribution = [&](double ln_w, double ln_r) {
    const double a = strain_scale * std::exp(c.beta * ln_r);
    const double ln_t = ln_hg + (c.gamma - 1.0) * ln_r;
    if (ln_t < 27.0) {
      return std::exp(ln_w) * phi_shifted_conjugate(phi_params, a, std::exp(ln_t));
    }
    // (phi_{delta+a})*(t) = t^{p'}/p' (1 + O((delta+a) t^{-1/(p-1)}))
    return std::exp(ln_w + p_conj * ln_t - std::log(p_conj));
  };

  const QuadratureRule& rule = quadrature_rule(degree);
  double acc = 0.0;
  for (int t = 0; t < mesh.n_triangles(); ++t) {
    const auto& tri = mesh.triangles[t];
    int origin_local = -1;
    for (int k = 0; k < 3; ++k) {
      if (mesh.vertices[tri[k]].norm() < 1e-14) origin_local = k;
    }
    if (origin_local < 0) {
      const ElementQuad eq = element_quadrature(mesh, t, rule, {});
      for (size_t q = 0; q < eq.weights.size(); ++q) {
        acc += contribution(std::log(eq.weights[q]), std::log(eq.points[q].norm()));
      }
      continue;
    }
    // Origin element: quadrature on the first dyadic annulus, then the
    // geometric similarity of the deeper annuli in log space.
    const Eigen::Vector2d a0 = mesh.vertices[tri[(origin_local + 1) % 3]];
    const Eigen::Vector2d b0 = mesh.vertices[tri[(origin_local + 2) % 3]];
    ElementQuad ann = map_rule(0.5 * a0, a0, b0, rule);
    const ElementQuad ann2 = map_rule(0.5 * a0, b0, 0.5 * b0, rule);
    ann.points.insert(ann.points.end(), ann2.points.begin(), ann2.points.end());
    ann.weights.insert(ann.weights.end(), ann2.weights.begin(), ann2.weights.end());
    const double ln2 = std::log(2.0), ln4 = std::log(4.0);
    for (size_t q = 0; q < ann.weights.size(); ++q) {
      const double lw0 = std::log(ann.weights[q]);
      const double lr0 = std::log(ann.points[q].norm());
      for (int k = 0; k < 3000; ++k) {
        const double term = contribution(lw0 - k * ln4, lr0 - k * ln2);
        acc += term;
        if (k > 8 && term <= 1e-18 * acc) break;
      }
    }
  }
  return acc;
}

double compatibility_defect(const ManufacturedCase& c, const TriMesh& mesh, int degree) {
  const ManufacturedFields fields(c);
  const double vol = integrate(mesh, degree, {true, 48},
                               [&](const Eigen::Vector2d& x) { return fields.g1(x); });
  const GaussRule1d& g = gauss_rule_1d(degree);
  double flux = 0.0;
  for (int e = 0; e < mesh.n_edges(); ++e) {
    if (!mesh.boundary_edge[e]) continue;
    const Eigen::Vector2d a = mesh.vertices[mesh.edges[e][0]];
    const Eigen::Vector2d b = mesh.vertices[mesh.edges[e][1]];
    const Eigen::Vector2d tangent = b - a;
    // outward normal on (0,1)^2: pick the candidate pointing away from the
    // domain midpoint of the edge
    Eigen::Vector2d n(tangent.y(), -tangent.x());
    const Eigen::Vector2d mid = 0.5 * (a + b);
    if (n.dot(mid - Eigen::Vector2d(0.5, 0.5)) < 0.0) n = -n;
    n.normalize();
    const double len = tangent.norm();
    for (size_t q = 0; q < g.points.size(); ++q) {
      const Eigen::Vector2d x = a + g.points[q] * (b - a);
      flux += g.weights[q] * len * fields.velocity(x).dot(n);
    }
  }
  return vol - flux;
}

std::vector<double> eoc(const std::vector<double>& errors, const std::vector<double>& hs) {
  if (errors.size() != hs.size() || errors.size() < 2) {
    throw std::invalid_argument("eoc: need equally long lists with at least two entries");
  }
  std::vector<double> out(errors.size() - 1);
  for (size_t i = 1; i < errors.size(); ++i) {
    if (errors[i] <= 0.0 || errors[i - 1] <= 0.0) {
      out[i - 1] = std::numeric_limits<double>::quiet_NaN();
    } else {
      out[i - 1] = std::log(errors[i] / errors[i - 1]) / std::log(hs[i] / hs[i - 1]);
    }
  }
  return out;
}

namespace {

std::string format_17g(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string format_eoc(const std::vector<double>& values, size_t row) {
  if (row == 0) return "";
  const double v = values[row - 1];
  if (std::isnan(v)) return "";
  return format_17g(v);
}

}  // namespace

void emit_csv(const EocTable& table, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("emit_csv: cannot open " + path);
  out << "level,h,ndof_v,ndof_q,e_v,eoc_v,e_q_s,eoc_q_s,e_q_ell,eoc_q_ell,e_q_p,eoc_q_p,"
         "newton_iters,dual_modular\n";
  std::vector<double> hs, ev, eqs, eqell, eqp;
  for (const auto& r : table.rows) {
    hs.push_back(r.h);
    ev.push_back(r.e_v);
    eqs.push_back(r.e_q_s);
    eqell.push_back(r.e_q_ell);
    eqp.push_back(r.e_q_p);
  }
  const bool have_eoc = table.rows.size() >= 2;
  const std::vector<double> eoc_v = have_eoc ? eoc(ev, hs) : std::vector<double>{};
  const std::vector<double> eoc_s = have_eoc ? eoc(eqs, hs) : std::vector<double>{};
  const std::vector<double> eoc_ell = have_eoc ? eoc(eqell, hs) : std::vector<double>{};
  const std::vector<double> eoc_p = have_eoc ? eoc(eqp, hs) : std::vector<double>{};

  for (size_t i = 0; i < table.rows.size(); ++i) {
    const auto& r = table.rows[i];
    out << r.level << ',' << format_17g(r.h) << ',' << r.ndof_v << ',' << r.ndof_q << ','
        << format_17g(r.e_v) << ',' << (have_eoc ? format_eoc(eoc_v, i) : "") << ','
        << format_17g(r.e_q_s) << ',' << (have_eoc ? format_eoc(eoc_s, i) : "") << ','
        << format_17g(r.e_q_ell) << ',' << (have_eoc ? format_eoc(eoc_ell, i) : "") << ','
        << format_17g(r.e_q_p) << ',' << (have_eoc ? format_eoc(eoc_p, i) : "") << ','
        << r.newton_iters << ',' << format_17g(r.dual_modular) << '\n';
  }
  if (!out) throw std::runtime_error("emit_csv: write failed for " + path);
}

EocTable run_single_study(const StudyConfig& cfg, double p, DiscreteState* final_state) {
  if (cfg.max_level < 0) throw std::invalid_argument("run_study: max_level must be >= 0");
  const auto chain = mesh_chain(cfg.max_level);
  const ManufacturedCase c = make_case(cfg.case_id, p);
  const ExponentSet exps = exponents(p);

  EocTable table;
  table.pair = cfg.pair;
  table.case_id = cfg.case_id;
  table.p = p;

  std::vector<MixedSpace> spaces;
  spaces.reserve(cfg.max_level + 1);
  for (int lvl = 0; lvl <= cfg.max_level; ++lvl) spaces.push_back(build_space(chain[lvl], cfg.pair));

  DiscreteState prev;
  for (int lvl = 0; lvl <= cfg.max_level; ++lvl) {
    const MixedSpace& space = spaces[lvl];
    ProblemData data = make_problem(c, space, cfg.assembly_degree);

    DiscreteState init;
    if (lvl == 0) {
      init = zero_state(space);
    } else {
      DiscreteFunction cv{&spaces[lvl - 1], FieldRole::Velocity, prev.velocity};
      DiscreteFunction cq{&spaces[lvl - 1], FieldRole::Pressure, prev.pressure};
      init = zero_state(space);
      init.velocity = prolongate(cv, space).coeffs;
      init.pressure = prolongate(cq, space).coeffs;
    }
    init = apply_dirichlet(data, init);

    DiscreteState state;
    SolveReport report;
    try {
      if (lvl == 0 && cfg.p_continuation && p != 2.0) {
        // Continuation in the stress exponent towards the target p.
        DiscreteState cur = init;
        for (double pk : {2.0, 0.5 * (2.0 + p), p}) {
          ProblemData dk = data;
          dk.stress.p = pk;
          std::tie(cur, report) = newton_solve(dk, cur, cfg.newton);
        }
        state = cur;
      } else {
        std::tie(state, report) = newton_solve(data, init, cfg.newton);
      }
    } catch (const NewtonFailure& f) {
      throw NewtonFailure("study (p = " + std::to_string(p) + ", level = " + std::to_string(lvl) +
                              "): " + f.what(),
                          f.report);
    }

    EocRow row;
    row.level = lvl;
    row.h = std::ldexp(1.0, -lvl);
    row.ndof_v = space.n_velocity_dofs;
    row.ndof_q = space.n_pressure_dofs;
    const ErrorRecord e = error_norms(state, space, c, exps, cfg.error_degree);
    row.e_v = e.e_v;
    row.e_q_s = e.e_q_s;
    row.e_q_ell = e.e_q_ell;
    row.e_q_p = e.e_q_p;
    row.newton_iters = report.iterations;
    row.dual_modular = dual_modular_diagnostic(c, chain[lvl], row.h, cfg.error_degree);
    row.stability = stability_norm(state, space, exps, cfg.error_degree);
    table.rows.push_back(row);
    prev = std::move(state);
  }
  if (final_state) *final_state = prev;
  return table;
}

std::vector<EocTable> run_study(const StudyConfig& cfg) {
  if (cfg.max_level < 1) throw std::invalid_argument("run_study: max_level must be >= 1");
  std::vector<EocTable> tables;
  tables.reserve(cfg.p_list.size());
  for (double p : cfg.p_list) tables.push_back(run_single_study(cfg, p));
  return tables;
}

std::vector<double> infsup_probe(ElementPair pair, int max_level) {
  if (max_level < 1) throw std::invalid_argument("infsup_probe: max_level must be >= 1");
  std::vector<double> betas;
  const auto chain = mesh_chain(max_level);
  for (int lvl = 1; lvl <= max_level; ++lvl) {
    const MixedSpace space = build_space(chain[lvl], pair);
    const AuxMatrices aux = assemble_aux_matrices(space);

    // Restrict to zero-trace velocities.
    std::vector<int> free;
    for (int dof = 0; dof < space.n_velocity_dofs; ++dof) {
      if (!space.scalar_node_on_boundary[dof / 2]) free.push_back(dof);
    }
    const int nf = static_cast<int>(free.size());
    const int np = space.n_pressure_dofs;
    std::vector<int> to_free(space.n_velocity_dofs, -1);
    for (int i = 0; i < nf; ++i) to_free[free[i]] = i;

    std::vector<Eigen::Triplet<double>> ta, tb;
    for (int k = 0; k < aux.velocity_h1.outerSize(); ++k) {
      for (Eigen::SparseMatrix<double>::InnerIterator it(aux.velocity_h1, k); it; ++it) {
        const int i = to_free[it.row()], j = to_free[it.col()];
        if (i >= 0 && j >= 0) ta.emplace_back(i, j, it.value());
      }
    }
    for (int k = 0; k < aux.divergence.outerSize(); ++k) {
      for (Eigen::SparseMatrix<double>::InnerIterator it(aux.divergence, k); it; ++it) {
        const int j = to_free[it.col()];
        if (j >= 0) tb.emplace_back(it.row(), j, it.value());
      }
    }
    Eigen::SparseMatrix<double> a1(nf, nf), b(np, nf);
    a1.setFromTriplets(ta.begin(), ta.end());
    b.setFromTriplets(tb.begin(), tb.end());

    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(a1);
    if (lu.info() != Eigen::Success) throw std::runtime_error("infsup_probe: H1 factorization failed");

    // Dense Schur complement S = B A1^{-1} B^T.
    Eigen::MatrixXd s(np, np);
    Eigen::MatrixXd bt = Eigen::MatrixXd(b).transpose();
    for (int j = 0; j < np; ++j) s.col(j) = b * lu.solve(Eigen::VectorXd(bt.col(j)));
    s = 0.5 * (s + s.transpose()).eval();

    const Eigen::MatrixXd m = Eigen::MatrixXd(aux.pressure_mass);
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(np);
    const Eigen::VectorXd mc = m * ones;
    const double c_mass = ones.dot(mc);

    // Shift the constant-pressure null mode away, then inverse iteration.
    const double sigma = s.trace() / (np * c_mass);
    const Eigen::MatrixXd s_shifted = s + sigma * (mc * mc.transpose());
    const Eigen::PartialPivLU<Eigen::MatrixXd> slu(s_shifted);

    auto deflate = [&](Eigen::VectorXd& v) { v -= ones * (mc.dot(v) / c_mass); };
    Eigen::VectorXd qv(np);
    unsigned long long seed = 88172645463325252ull;  // xorshift, fixed seed
    for (int i = 0; i < np; ++i) {
      seed ^= seed << 13;
      seed ^= seed >> 7;
      seed ^= seed << 17;
      qv[i] = static_cast<double>(seed % 1000003) / 1000003.0 - 0.5;
    }
    deflate(qv);
    qv /= std::sqrt(qv.dot(m * qv));

    // The bottom of the spectrum clusters on these structured meshes
    // (multiple eigenvalues), so the stop is residual based: for a symmetric
    // pencil a small residual bounds the eigenvalue error quadratically,
    // independently of the gaps inside the cluster.
    const Eigen::LLT<Eigen::MatrixXd> mllt(m);
    double lambda = 0.0;
    bool converged = false;
    for (int it = 0; it < 30000; ++it) {
      Eigen::VectorXd y = slu.solve(m * qv);
      deflate(y);
      y /= std::sqrt(y.dot(m * y));
      const Eigen::VectorXd sy = s * y;
      lambda = y.dot(sy);
      qv = y;
      const Eigen::VectorXd r = sy - lambda * (m * y);
      const double resid = std::sqrt(r.dot(mllt.solve(r)));  // M^{-1}-norm
      if (resid <= 1e-7 * lambda) {
        converged = true;
        break;
      }
    }
    if (!converged) throw std::runtime_error("infsup_probe: inverse iteration did not converge");
    betas.push_back(std::sqrt(lambda));
  }
  return betas;
}

std::vector<RateRow> rates_curves(const std::vector<double>& p_grid) {
  std::vector<RateRow> rows;
  rows.reserve(p_grid.size());
  for (double p : p_grid) {
    if (!(p >= 4.0 / 3.0 - 1e-12 && p <= 3.0 + 1e-12)) {
      throw std::invalid_argument("rates_curves: p must lie in [4/3, 3]");
    }
    const ExponentSet e = exponents(p);
    RateRow r;
    r.p = p;
    r.s = e.s;
    r.s_conj = e.s_conj;
    r.ell = e.ell;
    r.ell_conj = e.ell_conj;
    r.rate_v_case1 = std::min(1.0, e.p_conj / 2.0);
    r.rate_q_s = std::min(2.0 / e.p_conj, e.p_conj / 2.0);
    r.rate_q_ell = 1.0;
    rows.push_back(r);
  }
  return rows;
}

void emit_rates_csv(const std::vector<RateRow>& rows, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("emit_rates_csv: cannot open " + path);
  out << "p,s,s_conj,ell,ell_conj,rate_v_case1,rate_q_s,rate_q_ell\n";
  for (const auto& r : rows) {
    out << format_17g(r.p) << ',' << format_17g(r.s) << ',' << format_17g(r.s_conj) << ','
        << format_17g(r.ell) << ',' << format_17g(r.ell_conj) << ',' << format_17g(r.rate_v_case1)
        << ',' << format_17g(r.rate_q_s) << ',' << format_17g(r.rate_q_ell) << '\n';
  }
  if (!out) throw std::runtime_error("emit_rates_csv: write failed for " + path);
}

}  // namespace pns
