#include "qisdp/runner.hpp"

#include "qisdp/error.hpp"

namespace qisdp {

Framing framing_from_string(const std::string& s) {
  if (s == "dual") return Framing::Dual;
  if (s == "primal") return Framing::Primal;
  throw invalid_argument("framing must be 'dual' or 'primal'");
}

EqualityMode equality_mode_from_string(const std::string& s) {
  if (s == "split") return EqualityMode::FreeSplit;
  if (s == "eliminate") return EqualityMode::Eliminate;
  if (s == "ineq") return EqualityMode::TwoInequalities;
  throw invalid_argument("equalities must be 'split', 'eliminate' or 'ineq'");
}

SearchDirection direction_from_string(const std::string& s) {
  if (s == "hkm") return SearchDirection::HKM;
  if (s == "nt") return SearchDirection::NT;
  throw invalid_argument("direction must be 'hkm' or 'nt'");
}

namespace {

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

Json load_json(const std::string& path) {
  const std::string text = read_file(path);
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(0, path + ": " + e.what());
  }
}

CompileOptions compile_options(const RunOptions& o, CompileOptions base = {}) {
  if (o.framing) base.framing = *o.framing;
  if (o.equalities) base.equalities = *o.equalities;
  return base;
}

NpaOptions npa_options(const RunOptions& o) {
  NpaOptions n;
  n.compile = compile_options(o, n.compile);
  n.solver = o.solver;
  return n;
}

RunReport model_report(const std::string& command, const ModelResult& r) {
  RunReport rep;
  rep.command = command;
  attach_solver(rep, r.compiled.problem, r.solution, r.log);
  rep.value = r.value;
  return rep;
}

Json cmat_list(const std::vector<CMat>& ms) {
  Json a = Json::array();
  for (const auto& m : ms) a.push_back(matrix_to_json(m));
  return a;
}

ScenarioFile load_scenario(const std::string& path) { return scenario_from_json(load_json(path)); }

}  // namespace

RunReport run_solve(const std::string& path, const RunOptions& o) {
  if (ends_with(path, ".json")) {
    const Model m = model_from_json(load_json(path));
    auto r = solve_model(m, compile_options(o), o.solver);
    RunReport rep = model_report("solve", r);
    Json params = Json::array();
    for (Eigen::Index k = 0; k < r.params.size(); ++k) params.push_back(r.params(k));
    rep.result["params"] = params;
    return rep;
  }
  const ConeProblem p = parse_sdpa(read_file(path));
  auto r = solve(p, o.solver);
  RunReport rep;
  rep.command = "solve";
  attach_solver(rep, p, r.solution, r.log);
  rep.value = r.solution.primal_value;
  return rep;
}

RunReport run_npa(const std::string& scenario, const std::string& level, const RunOptions& o) {
  const ScenarioFile s = load_scenario(scenario);
  if (s.prepare_measure) throw invalid_argument("npa expects a Bell scenario; use mlp for prepare-and-measure");
  const NpaLevel lv = NpaLevel::parse(level);
  auto r = solve_bell(s.scenario, lv, s.bell, {}, npa_options(o));
  RunReport rep = model_report("npa", r.run);
  rep.value = r.value;
  rep.result["level"] = lv.str();
  rep.result["words"] = r.gamma.rows();
  rep.result["classes"] = r.moments.size();
  return rep;
}

RunReport run_mlp(const std::string& scenario, const std::string& level, int dimension, const RunOptions& o) {
  const ScenarioFile s = load_scenario(scenario);
  if (!s.prepare_measure) throw invalid_argument("mlp expects a prepare-and-measure scenario");
  const int d = dimension > 0 ? dimension : s.dimension;
  if (d < 1) throw invalid_argument("a dimension bound is required (--dim or \"dimension\")");
  const NpaLevel lv = NpaLevel::parse(level);
  auto r = mlp_solve(s.scenario, lv, d, s.witness, npa_options(o));
  RunReport rep = model_report("mlp", r.run);
  rep.value = r.value;
  rep.result["level"] = lv.str();
  rep.result["dimension"] = d;
  rep.result["words"] = r.gamma.rows();
  return rep;
}

RunReport run_nv(const std::string& scenario, int level, const RunOptions& o) {
  const ScenarioFile s = load_scenario(scenario);
  NvOptions nv;
  nv.seed = o.seed;
  NvBasis basis;
  Mat game;
  double constant = 0.0;
  if (s.prepare_measure) {
    if (s.outcomes != 2) throw invalid_argument("nv supports binary measurements");
    PmSpec spec;
    spec.dim = s.dimension > 0 ? s.dimension : 2;
    spec.states = s.preparations;
    spec.measurements = s.measurements;
    spec.level = level;
    const PmNv pm(spec);
    basis = nv_build_basis(pm.sampler(), nv);
    game = pm.game(s.witness);
  } else {
    const MomentModel mm = build_moment_model(s.scenario, NpaLevel{level, false});
    std::vector<int> dims = s.local_dims;
    if (dims.empty()) dims.assign(s.scenario.parties(), 2);
    basis = nv_build_basis(bell_sampler(mm, dims), nv);
    game = bell_game(mm, s.bell, &constant);
  }
  auto r = nv_solve(basis.basis, game, constant, npa_options(o));
  RunReport rep = model_report("nv", r.run);
  rep.value = r.value;
  rep.result["basis_size"] = basis.basis.size();
  rep.result["draws"] = basis.draws;
  rep.result["seed"] = o.seed;
  return rep;
}

RunReport run_theta(const std::string& graph, bool weighted, const RunOptions& o) {
  const Graph g = parse_graph(read_file(graph));
  const bool use_weighted = weighted || !g.weights.empty();
  const ThetaResult r = use_weighted ? weighted_theta(g, o.solver) : lovasz_theta(g, o.solver);
  RunReport rep = model_report("theta", r.run);
  rep.value = r.value;
  rep.result["vertices"] = g.n;
  rep.result["edges"] = g.edges.size();
  rep.result["formulation"] = use_weighted ? "weighted" : "eigenvalue";
  return rep;
}

namespace {

RunReport dps_report(const CMat& rho, int da, int db, int k, bool ppt, const RunOptions& o) {
  DpsOptions opt;
  opt.ppt = ppt;
  opt.solver = o.solver;
  const DpsResult r = dps_test(rho, da, db, k, opt);
  RunReport rep = model_report("dps", r.run);
  rep.value = r.t;
  rep.result["feasible"] = r.feasible;
  rep.result["entangled"] = !r.feasible;
  rep.result["k"] = k;
  rep.result["ppt"] = ppt;
  rep.result["parameters"] = r.parameters;
  rep.result["witness_value"] = r.witness_value;
  rep.result["witness"] = matrix_to_json(r.witness);
  return rep;
}

}  // namespace

RunReport run_dps(const std::string& state, int k, bool ppt, const RunOptions& o) {
  const Json j = load_json(state);
  if (!j.is_object() || !j.contains("state") || !j.contains("dims"))
    throw invalid_argument("state file needs 'state' and 'dims'");
  const auto dims = j.at("dims").get<std::vector<int>>();
  if (dims.size() != 2) throw invalid_argument("'dims' must list d_A and d_B");
  return dps_report(matrix_from_json(j.at("state")), dims[0], dims[1], k, ppt, o);
}

RunReport run_dps_werner(double p, int k, bool ppt, const RunOptions& o) {
  if (p < 0.0 || p > 1.0) throw invalid_argument("Werner parameter must lie in [0, 1]");
  RunReport rep = dps_report(werner_state(p), 2, 2, k, ppt, o);
  rep.result["werner_p"] = p;
  return rep;
}

RunReport run_qsd(const std::string& states, const RunOptions& o) {
  const Json j = load_json(states);
  if (!j.is_object() || !j.contains("states")) throw invalid_argument("QSD file needs 'states'");
  std::vector<CMat> rho;
  for (const auto& s : j.at("states")) rho.push_back(matrix_from_json(s));
  std::vector<double> priors;
  if (j.contains("priors")) {
    priors = j.at("priors").get<std::vector<double>>();
  } else {
    priors.assign(rho.size(), rho.empty() ? 0.0 : 1.0 / static_cast<double>(rho.size()));
  }
  const PovmResult r = qsd_optimal(rho, priors, o.solver);
  RunReport rep = model_report("qsd", r.run);
  rep.value = r.value;
  rep.result["povm"] = cmat_list(r.povm);
  return rep;
}

RunReport run_seesaw(const std::string& scenario, int restarts, const RunOptions& o) {
  const ScenarioFile s = load_scenario(scenario);
  SeesawOptions opt;
  opt.restarts = restarts;
  opt.seed = o.seed;
  opt.solver = o.solver;
  SeesawResult r;
  if (s.prepare_measure) {
    const int d = s.dimension > 0 ? s.dimension : 2;
    r = seesaw_pm(d, s.preparations, std::vector<int>(s.measurements, s.outcomes), s.witness, opt);
  } else {
    if (s.scenario.parties() != 2) throw invalid_argument("seesaw supports two-party Bell scenarios");
    const std::vector<int> dims = s.local_dims.empty() ? std::vector<int>{2, 2} : s.local_dims;
    r = seesaw_bell(s.scenario, s.bell, dims[0], dims[1], opt);
  }
  RunReport rep;
  rep.command = "seesaw";
  rep.status = Status::Success;
  rep.value = r.best;
  rep.result["restarts"] = restarts;
  rep.result["seed"] = o.seed;
  rep.result["restart_values"] = r.restart_values;
  rep.result["trajectory"] = r.best_run.trajectory;
  rep.result["states"] = cmat_list(r.best_run.states);
  Json meas = Json::array();
  for (const auto& m : r.best_run.measurements) meas.push_back(cmat_list(m));
  rep.result["measurements"] = meas;
  return rep;
}

RunReport run_sos(const std::string& polynomial, const RunOptions& o) {
  const Polynomial h = polynomial_from_json(load_json(polynomial));
  const SosCertificate c = sos_certificate(h, o.solver);
  RunReport rep = model_report("sos", c.run);
  rep.value = c.margin;
  rep.result["feasible"] = c.feasible;
  rep.result["margin"] = c.margin;
  rep.result["residual"] = c.residual;
  rep.result["basis_size"] = c.basis.size();
  rep.result["null_dimension"] = c.null_dimension;
  rep.result["squares"] = c.squares.size();
  return rep;
}

RunReport run_tsirelson_sos(const RunOptions& o) {
  const TsirelsonSos t = tsirelson_sos_chsh(o.solver);
  RunReport rep = model_report("sos", t.run);
  rep.value = t.q1;
  rep.result["q1"] = t.q1;
  rep.result["residual"] = t.residual;
  Json g = Json::array();
  for (int i = 0; i < t.gram.rows(); ++i) {
    Json row = Json::array();
    for (int k = 0; k < t.gram.cols(); ++k) row.push_back(t.gram(i, k));
    g.push_back(row);
  }
  rep.result["gram"] = g;
  return rep;
}

}  // namespace qisdp
