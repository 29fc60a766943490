// qisdp command-line tool. Links only the C interface.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include "qisdp/qisdp.h"

namespace {

// Exit codes outside the range used by solver statuses.
constexpr int kUsage = 64;
constexpr int kDataError = 65;
constexpr int kNoInput = 66;
constexpr int kInternal = 70;

int exit_for_error(qisdp_error e) {
  switch (e) {
    case QISDP_E_IO: return kNoInput;
    case QISDP_E_INVALID_ARGUMENT:
    case QISDP_E_DIMENSION:
    case QISDP_E_PARSE:
    case QISDP_E_MODEL: return kDataError;
    default: return kInternal;
  }
}

struct Global {
  double tol = 0.0;
  int maxit = 0;
  std::string direction;
  std::string framing;
  std::string equalities;
  std::uint64_t seed = 1;
  std::string json_out;
  bool verbose = false;
  bool timing = false;
};

class Config {
 public:
  Config() { qisdp_config_new(&c_); }
  ~Config() { qisdp_config_free(c_); }
  Config(const Config&) = delete;
  Config& operator=(const Config&) = delete;
  qisdp_config* get() const { return c_; }

 private:
  qisdp_config* c_ = nullptr;
};

qisdp_error configure(const Global& g, const Config& cfg) {
  qisdp_error e = QISDP_OK;
  if (g.tol > 0 && (e = qisdp_config_set_tol(cfg.get(), g.tol)) != QISDP_OK) return e;
  if (g.maxit > 0 && (e = qisdp_config_set_max_iterations(cfg.get(), g.maxit)) != QISDP_OK) return e;
  if (!g.direction.empty() && (e = qisdp_config_set_direction(cfg.get(), g.direction.c_str())) != QISDP_OK) return e;
  if (!g.framing.empty() && (e = qisdp_config_set_framing(cfg.get(), g.framing.c_str())) != QISDP_OK) return e;
  if (!g.equalities.empty() && (e = qisdp_config_set_equalities(cfg.get(), g.equalities.c_str())) != QISDP_OK)
    return e;
  return qisdp_config_set_seed(cfg.get(), g.seed);
}

int finish(qisdp_error e, qisdp_result* r, const Global& g) {
  if (e != QISDP_OK) {
    std::cerr << "error: " << qisdp_last_error() << "\n";
    return exit_for_error(e);
  }
  std::cout << qisdp_result_text(r, g.verbose ? 1 : 0);
  if (!g.json_out.empty()) {
    std::ofstream out(g.json_out);
    out << qisdp_result_json(r, g.timing ? 1 : 0) << "\n";
    if (!out) {
      std::cerr << "error: cannot write " << g.json_out << "\n";
      qisdp_result_free(r);
      return kNoInput;
    }
  }
  const int status = qisdp_result_status(r);
  qisdp_result_free(r);
  return status & 0xff;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Semidefinite programming for quantum information"};
  app.require_subcommand(1);
  app.fallthrough();
  Global g;
  app.add_option("--tol", g.tol, "Gap and feasibility tolerance")->check(CLI::PositiveNumber);
  app.add_option("--maxit", g.maxit, "Iteration limit")->check(CLI::PositiveNumber);
  app.add_option("--direction", g.direction, "Search direction")->check(CLI::IsMember({"hkm", "nt"}));
  app.add_option("--framing", g.framing, "Model framing")->check(CLI::IsMember({"dual", "primal"}));
  app.add_option("--equalities", g.equalities, "Equality handling")
      ->check(CLI::IsMember({"split", "eliminate", "ineq"}));
  app.add_option("--seed", g.seed, "Seed for randomized subcommands");
  app.add_option("--json-out", g.json_out, "Write the JSON report to this file");
  app.add_flag("--verbose", g.verbose, "Print the iteration table");
  app.add_flag("--timing", g.timing, "Include wall time in the JSON report");

  std::string file, level = "1", graph, state, states, poly, scenario;
  int dim = 0, nv_level = 2, k = 1, restarts = 20;
  bool weighted = false, no_ppt = false, tsirelson = false;
  double werner = -1.0;

  auto* solve = app.add_subcommand("solve", "Solve an SDPA file or a JSON model");
  solve->add_option("file", file, "Input (.json model, otherwise SDPA sparse)")->required();

  auto* npa = app.add_subcommand("npa", "NPA upper bound of a Bell expression");
  npa->add_option("--scenario", scenario, "Scenario JSON")->required();
  npa->add_option("--level", level, "Level: k or 1+AB");

  auto* mlp = app.add_subcommand("mlp", "Dimension-bounded prepare-and-measure bound");
  mlp->add_option("--scenario", scenario, "Scenario JSON")->required();
  mlp->add_option("--level", level, "Level")->default_val("2");
  mlp->add_option("--dim", dim, "Dimension bound (default: from the scenario)");

  auto* nv = app.add_subcommand("nv", "Randomized fixed-dimension bound");
  nv->add_option("--scenario", scenario, "Scenario JSON")->required();
  nv->add_option("--level", nv_level, "Monomial level")->check(CLI::PositiveNumber);

  auto* theta = app.add_subcommand("theta", "Lovasz theta of a graph");
  theta->add_option("--graph", graph, "Edge-list file")->required();
  theta->add_flag("--weighted", weighted, "Use the weighted formulation");

  auto* dps = app.add_subcommand("dps", "Symmetric-extension separability test");
  auto* state_opt = dps->add_option("--state", state, "State JSON");
  auto* werner_opt = dps->add_option("--werner", werner, "Two-qubit Werner state parameter");
  state_opt->excludes(werner_opt);
  dps->add_option("--k", k, "Number of B copies")->check(CLI::PositiveNumber);
  dps->add_flag("--no-ppt", no_ppt, "Drop the PPT conditions");

  auto* qsd = app.add_subcommand("qsd", "Optimal state discrimination");
  qsd->add_option("--states", states, "States JSON")->required();

  auto* seesaw = app.add_subcommand("seesaw", "See-saw lower bound");
  seesaw->add_option("--scenario", scenario, "Scenario JSON")->required();
  seesaw->add_option("--restarts", restarts, "Random restarts")->check(CLI::PositiveNumber);

  auto* sos = app.add_subcommand("sos", "Sum-of-squares certificate");
  auto* poly_opt = sos->add_option("--poly", poly, "Polynomial JSON");
  auto* tsi_opt = sos->add_flag("--tsirelson", tsirelson, "CHSH Tsirelson certificate");
  poly_opt->excludes(tsi_opt);

  try {
    app.parse(argc, argv);
    if (dps->parsed() && state.empty() && werner < 0) throw CLI::ValidationError("dps", "--state or --werner is required");
    if (sos->parsed() && poly.empty() && !tsirelson) throw CLI::ValidationError("sos", "--poly or --tsirelson is required");
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsage;
  }

  Config cfg;
  if (const qisdp_error e = configure(g, cfg); e != QISDP_OK) {
    std::cerr << "error: " << qisdp_last_error() << "\n";
    return kUsage;
  }
  qisdp_result* r = nullptr;
  qisdp_error e = QISDP_OK;
  if (solve->parsed()) {
    e = qisdp_run_solve(file.c_str(), cfg.get(), &r);
  } else if (npa->parsed()) {
    e = qisdp_run_npa(scenario.c_str(), level.c_str(), cfg.get(), &r);
  } else if (mlp->parsed()) {
    e = qisdp_run_mlp(scenario.c_str(), level.c_str(), dim, cfg.get(), &r);
  } else if (nv->parsed()) {
    e = qisdp_run_nv(scenario.c_str(), nv_level, cfg.get(), &r);
  } else if (theta->parsed()) {
    e = qisdp_run_theta(graph.c_str(), weighted ? 1 : 0, cfg.get(), &r);
  } else if (dps->parsed()) {
    e = state.empty() ? qisdp_run_dps_werner(werner, k, no_ppt ? 0 : 1, cfg.get(), &r)
                      : qisdp_run_dps(state.c_str(), k, no_ppt ? 0 : 1, cfg.get(), &r);
  } else if (qsd->parsed()) {
    e = qisdp_run_qsd(states.c_str(), cfg.get(), &r);
  } else if (seesaw->parsed()) {
    e = qisdp_run_seesaw(scenario.c_str(), restarts, cfg.get(), &r);
  } else if (sos->parsed()) {
    e = tsirelson ? qisdp_run_tsirelson_sos(cfg.get(), &r) : qisdp_run_sos(poly.c_str(), cfg.get(), &r);
  }
  return finish(e, r, g);
}
