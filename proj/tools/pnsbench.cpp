// Command-line driver for the generalized Navier-Stokes convergence
// benchmark: single solves, EOC studies, rate curves and the inf-sup probe.

#include <CLI11.hpp>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <future>
#include <iostream>
#include <string>
#include <vector>

#include "pns/bench.hpp"

namespace {

pns::ElementPair parse_pair(const std::string& s) {
  if (s == "mini") return pns::ElementPair::Mini;
  if (s == "th") return pns::ElementPair::TaylorHood;
  throw CLI::ValidationError("--element", "expected 'mini' or 'th'");
}

std::vector<double> parse_p_list(const std::string& csv) {
  std::vector<double> out;
  size_t pos = 0;
  while (pos < csv.size()) {
    size_t next = csv.find(',', pos);
    if (next == std::string::npos) next = csv.size();
    const std::string tok = csv.substr(pos, next - pos);
    if (tok == "4/3") {
      out.push_back(4.0 / 3.0);
    } else if (!tok.empty()) {
      out.push_back(std::stod(tok));
    }
    pos = next + 1;
  }
  if (out.empty()) throw CLI::ValidationError("--p-list", "no values parsed");
  return out;
}

int worker_threads() {
  const char* env = std::getenv("PNSBENCH_THREADS");
  if (!env) return 1;
  const int n = std::atoi(env);
  return n > 1 ? n : 1;
}

std::string study_file_name(pns::ElementPair pair, int case_id, double p) {
  char buf[96];
  std::snprintf(buf, sizeof(buf), "study_%s_case%d_p%.6g.csv",
                pair == pns::ElementPair::Mini ? "mini" : "th", case_id, p);
  return buf;
}

int run_solve(pns::ElementPair pair, double p, int case_id, int level, int quad_deg,
              const std::string& out, const std::string& vtk) {
  pns::StudyConfig cfg;
  cfg.pair = pair;
  cfg.case_id = case_id;
  cfg.max_level = level;
  cfg.assembly_degree = quad_deg;
  pns::DiscreteState state;
  pns::EocTable table = pns::run_single_study(cfg, p, &state);

  pns::EocTable last;
  last.pair = table.pair;
  last.case_id = table.case_id;
  last.p = table.p;
  last.rows.push_back(table.rows.back());
  const auto& row = last.rows.front();
  std::printf("level %d  h %.5g  e_v %.6e  e_q_s %.6e  newton %d\n", row.level, row.h, row.e_v,
              row.e_q_s, row.newton_iters);
  if (!out.empty()) pns::emit_csv(last, out);

  if (!vtk.empty()) {
    std::vector<pns::TriMesh> chain;
    chain.push_back(pns::unit_square_initial());
    for (int i = 0; i < level; ++i) chain.push_back(pns::red_refine(chain.back()));
    const pns::TriMesh& mesh = chain.back();
    std::vector<Eigen::Vector2d> vel(mesh.n_vertices());
    std::vector<double> pres(mesh.n_vertices());
    for (int v = 0; v < mesh.n_vertices(); ++v) {
      vel[v] = {state.velocity[2 * v], state.velocity[2 * v + 1]};
      pres[v] = state.pressure[v];
    }
    std::ofstream os(vtk);
    if (!os) throw std::runtime_error("cannot open " + vtk);
    pns::write_mesh_vtk(mesh, os, &vel, &pres);
  }
  return 0;
}

int run_study_cmd(pns::ElementPair pair, int case_id, const std::vector<double>& p_list,
                  int max_level, bool deterministic, const std::string& out_dir) {
  pns::StudyConfig cfg;
  cfg.pair = pair;
  cfg.case_id = case_id;
  cfg.max_level = max_level;

  auto run_one = [&](double p) {
    const pns::EocTable table = pns::run_single_study(cfg, p);
    pns::emit_csv(table, out_dir + "/" + study_file_name(pair, case_id, p));
  };

  const int threads = deterministic ? 1 : worker_threads();
  if (threads <= 1) {
    for (double p : p_list) run_one(p);
  } else {
    // Study cells are independent; each writes its own file.
    std::vector<std::future<void>> jobs;
    for (double p : p_list) jobs.push_back(std::async(std::launch::async, run_one, p));
    for (auto& j : jobs) j.get();
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"p-Navier-Stokes mixed FEM benchmark"};
  app.require_subcommand(1);

  std::string element = "mini", out, vtk, out_dir = ".", p_list_csv;
  double p = 2.0, p_min = 4.0 / 3.0, p_max = 3.0;
  int case_id = 1, level = 3, max_level = 5, quad_deg = 8, n_grid = 100;
  bool deterministic = false;

  CLI::App* solve = app.add_subcommand("solve", "solve one configuration at one level");
  solve->add_option("--element", element)->check(CLI::IsMember({"mini", "th"}));
  solve->add_option("--p", p)->required();
  solve->add_option("--case", case_id)->check(CLI::IsMember({1, 2}));
  solve->add_option("--level", level)->required();
  solve->add_option("--quad-deg", quad_deg);
  solve->add_option("--out", out);
  solve->add_option("--vtk", vtk);

  CLI::App* study = app.add_subcommand("study", "EOC study over a list of p");
  study->add_option("--element", element)->check(CLI::IsMember({"mini", "th"}));
  study->add_option("--case", case_id)->check(CLI::IsMember({1, 2}));
  study->add_option("--p-list", p_list_csv)->required();
  study->add_option("--max-level", max_level)->required();
  study->add_flag("--deterministic", deterministic, "serial fixed-order execution");
  study->add_option("--out-dir", out_dir)->required();

  CLI::App* rates = app.add_subcommand("rates", "analytic rate curves");
  rates->add_option("--p-min", p_min)->required();
  rates->add_option("--p-max", p_max)->required();
  rates->add_option("--n", n_grid)->required();
  rates->add_option("--out", out)->required();

  CLI::App* infsup = app.add_subcommand("infsup", "discrete inf-sup probe");
  infsup->add_option("--element", element)->check(CLI::IsMember({"mini", "th"}));
  infsup->add_option("--max-level", max_level)->required();
  infsup->add_option("--out", out)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 3;
  }

  try {
    if (solve->parsed()) {
      return run_solve(parse_pair(element), p, case_id, level, quad_deg, out, vtk);
    }
    if (study->parsed()) {
      return run_study_cmd(parse_pair(element), case_id, parse_p_list(p_list_csv), max_level,
                           deterministic, out_dir);
    }
    if (rates->parsed()) {
      if (n_grid < 1) throw std::invalid_argument("rates: --n must be >= 1");
      std::vector<double> grid;
      for (int i = 0; i < n_grid; ++i) {
        grid.push_back(n_grid == 1 ? p_min : p_min + (p_max - p_min) * i / (n_grid - 1.0));
      }
      pns::emit_rates_csv(pns::rates_curves(grid), out);
      return 0;
    }
    if (infsup->parsed()) {
      const auto betas = pns::infsup_probe(parse_pair(element), max_level);
      std::ofstream os(out);
      if (!os) throw std::runtime_error("cannot open " + out);
      os << "level,beta_h\n";
      char buf[64];
      for (size_t i = 0; i < betas.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%d,%.17g\n", static_cast<int>(i + 1), betas[i]);
        os << buf;
      }
      return 0;
    }
  } catch (const pns::NewtonFailure& e) {
    std::cerr << "solver did not converge: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 3;
}
