#include "qisdp/qisdp.h"

#include <cstring>
#include <new>
#include <string>

#include "qisdp/error.hpp"
#include "qisdp/runner.hpp"

struct qisdp_config {
  qisdp::RunOptions opt;
};

struct qisdp_problem {
  qisdp::ConeProblem p;
};

struct qisdp_result {
  qisdp::RunReport report;
  mutable std::string json;
  mutable std::string text;
};

namespace {

thread_local std::string g_last_error;

qisdp_error code_of(qisdp::ErrorKind k) {
  switch (k) {
    case qisdp::ErrorKind::InvalidArgument: return QISDP_E_INVALID_ARGUMENT;
    case qisdp::ErrorKind::Dimension: return QISDP_E_DIMENSION;
    case qisdp::ErrorKind::Parse: return QISDP_E_PARSE;
    case qisdp::ErrorKind::Io: return QISDP_E_IO;
    case qisdp::ErrorKind::Numerical: return QISDP_E_NUMERICAL;
    case qisdp::ErrorKind::Model: return QISDP_E_MODEL;
  }
  return QISDP_E_INTERNAL;
}

template <class F>
qisdp_error guarded(F f) {
  try {
    f();
    g_last_error.clear();
    return QISDP_OK;
  } catch (const qisdp::Error& e) {
    g_last_error = e.what();
    return code_of(e.kind());
  } catch (const nlohmann::json::exception& e) {
    g_last_error = e.what();
    return QISDP_E_PARSE;
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
  } catch (const std::exception& e) {
    g_last_error = e.what();
  } catch (...) {
    g_last_error = "unknown error";
  }
  return QISDP_E_INTERNAL;
}

qisdp_error null_arg(const char* what) {
  g_last_error = std::string(what) + " must not be NULL";
  return QISDP_E_INVALID_ARGUMENT;
}

const qisdp::RunOptions& options(const qisdp_config* c) {
  static const qisdp::RunOptions defaults;
  return c ? c->opt : defaults;
}

template <class F>
qisdp_error run(qisdp_result** out, F f) {
  if (!out) return null_arg("out");
  *out = nullptr;
  return guarded([&] { *out = new qisdp_result{f(), {}, {}}; });
}

}  // namespace

extern "C" {

const char* qisdp_last_error(void) { return g_last_error.c_str(); }
const char* qisdp_version(void) { return "1.0.0"; }

qisdp_error qisdp_config_new(qisdp_config** out) {
  if (!out) return null_arg("out");
  return guarded([&] { *out = new qisdp_config{}; });
}

void qisdp_config_free(qisdp_config* c) { delete c; }

qisdp_error qisdp_config_set_tol(qisdp_config* c, double tol) {
  if (!c) return null_arg("config");
  return guarded([&] {
    qisdp::SolverConfig s = c->opt.solver;
    s.tol_gap = s.tol_primal = s.tol_dual = tol;
    s.validate();
    c->opt.solver = s;
  });
}

qisdp_error qisdp_config_set_max_iterations(qisdp_config* c, int maxit) {
  if (!c) return null_arg("config");
  return guarded([&] {
    qisdp::SolverConfig s = c->opt.solver;
    s.max_iterations = maxit;
    s.validate();
    c->opt.solver = s;
  });
}

qisdp_error qisdp_config_set_direction(qisdp_config* c, const char* name) {
  if (!c || !name) return null_arg("config and name");
  return guarded([&] { c->opt.solver.direction = qisdp::direction_from_string(name); });
}

qisdp_error qisdp_config_set_framing(qisdp_config* c, const char* name) {
  if (!c || !name) return null_arg("config and name");
  return guarded([&] { c->opt.framing = qisdp::framing_from_string(name); });
}

qisdp_error qisdp_config_set_equalities(qisdp_config* c, const char* name) {
  if (!c || !name) return null_arg("config and name");
  return guarded([&] { c->opt.equalities = qisdp::equality_mode_from_string(name); });
}

qisdp_error qisdp_config_set_seed(qisdp_config* c, uint64_t seed) {
  if (!c) return null_arg("config");
  c->opt.seed = seed;
  c->opt.solver.seed = seed;
  return QISDP_OK;
}

qisdp_error qisdp_problem_parse_sdpa(const char* text, qisdp_problem** out) {
  if (!text || !out) return null_arg("text and out");
  *out = nullptr;
  return guarded([&] { *out = new qisdp_problem{qisdp::parse_sdpa(text)}; });
}

qisdp_error qisdp_problem_read(const char* path, qisdp_problem** out) {
  if (!path || !out) return null_arg("path and out");
  *out = nullptr;
  return guarded([&] {
    const std::string p(path);
    const std::string text = qisdp::read_file(p);
    if (p.size() >= 5 && p.compare(p.size() - 5, 5, ".json") == 0) {
      const qisdp::Model m = qisdp::model_from_json(qisdp::Json::parse(text));
      *out = new qisdp_problem{qisdp::compile(m).problem};
    } else {
      *out = new qisdp_problem{qisdp::parse_sdpa(text)};
    }
  });
}

void qisdp_problem_free(qisdp_problem* p) { delete p; }

qisdp_error qisdp_problem_dims(const qisdp_problem* p, int* m, int* sdp_blocks, int* nonneg, int* free_dim) {
  if (!p) return null_arg("problem");
  if (m) *m = p->p.m();
  if (sdp_blocks) *sdp_blocks = static_cast<int>(p->p.structure.sdp_blocks.size());
  if (nonneg) *nonneg = p->p.structure.nonneg_dim;
  if (free_dim) *free_dim = p->p.structure.free_dim;
  return QISDP_OK;
}

qisdp_error qisdp_problem_write_sdpa(const qisdp_problem* p, char** out) {
  if (!p || !out) return null_arg("problem and out");
  *out = nullptr;
  return guarded([&] {
    const std::string s = qisdp::write_sdpa(p->p);
    char* buf = new char[s.size() + 1];
    std::memcpy(buf, s.c_str(), s.size() + 1);
    *out = buf;
  });
}

void qisdp_string_free(char* s) { delete[] s; }

qisdp_error qisdp_problem_solve(const qisdp_problem* p, const qisdp_config* cfg, qisdp_result** out) {
  if (!p) return null_arg("problem");
  return run(out, [&] {
    auto r = qisdp::solve(p->p, options(cfg).solver);
    qisdp::RunReport rep;
    rep.command = "solve";
    qisdp::attach_solver(rep, p->p, r.solution, r.log);
    rep.value = r.solution.primal_value;
    return rep;
  });
}

qisdp_error qisdp_run_solve(const char* path, const qisdp_config* cfg, qisdp_result** out) {
  if (!path) return null_arg("path");
  return run(out, [&] { return qisdp::run_solve(path, options(cfg)); });
}

qisdp_error qisdp_run_npa(const char* scenario, const char* level, const qisdp_config* cfg, qisdp_result** out) {
  if (!scenario || !level) return null_arg("scenario and level");
  return run(out, [&] { return qisdp::run_npa(scenario, level, options(cfg)); });
}

qisdp_error qisdp_run_mlp(const char* scenario, const char* level, int dim, const qisdp_config* cfg,
                          qisdp_result** out) {
  if (!scenario || !level) return null_arg("scenario and level");
  return run(out, [&] { return qisdp::run_mlp(scenario, level, dim, options(cfg)); });
}

qisdp_error qisdp_run_nv(const char* scenario, int level, const qisdp_config* cfg, qisdp_result** out) {
  if (!scenario) return null_arg("scenario");
  return run(out, [&] { return qisdp::run_nv(scenario, level, options(cfg)); });
}

qisdp_error qisdp_run_theta(const char* graph, int weighted, const qisdp_config* cfg, qisdp_result** out) {
  if (!graph) return null_arg("graph");
  return run(out, [&] { return qisdp::run_theta(graph, weighted != 0, options(cfg)); });
}

qisdp_error qisdp_run_dps(const char* state, int k, int ppt, const qisdp_config* cfg, qisdp_result** out) {
  if (!state) return null_arg("state");
  return run(out, [&] { return qisdp::run_dps(state, k, ppt != 0, options(cfg)); });
}

qisdp_error qisdp_run_dps_werner(double p, int k, int ppt, const qisdp_config* cfg, qisdp_result** out) {
  return run(out, [&] { return qisdp::run_dps_werner(p, k, ppt != 0, options(cfg)); });
}

qisdp_error qisdp_run_qsd(const char* states, const qisdp_config* cfg, qisdp_result** out) {
  if (!states) return null_arg("states");
  return run(out, [&] { return qisdp::run_qsd(states, options(cfg)); });
}

qisdp_error qisdp_run_seesaw(const char* scenario, int restarts, const qisdp_config* cfg, qisdp_result** out) {
  if (!scenario) return null_arg("scenario");
  return run(out, [&] { return qisdp::run_seesaw(scenario, restarts, options(cfg)); });
}

qisdp_error qisdp_run_sos(const char* polynomial, const qisdp_config* cfg, qisdp_result** out) {
  if (!polynomial) return null_arg("polynomial");
  return run(out, [&] { return qisdp::run_sos(polynomial, options(cfg)); });
}

qisdp_error qisdp_run_tsirelson_sos(const qisdp_config* cfg, qisdp_result** out) {
  return run(out, [&] { return qisdp::run_tsirelson_sos(options(cfg)); });
}

void qisdp_result_free(qisdp_result* r) { delete r; }

int qisdp_result_status(const qisdp_result* r) {
  return r ? static_cast<int>(r->report.status) : QISDP_STATUS_NUMERICAL_FAILURE;
}

double qisdp_result_value(const qisdp_result* r) { return r && r->report.value ? *r->report.value : 0.0; }

double qisdp_result_max_dimacs(const qisdp_result* r) { return r ? r->report.max_dimacs() : 0.0; }

const char* qisdp_result_json(const qisdp_result* r, int include_time) {
  if (!r) return "";
  r->json = r->report.to_json(include_time != 0).dump(2);
  return r->json.c_str();
}

const char* qisdp_result_text(const qisdp_result* r, int verbose) {
  if (!r) return "";
  r->text = r->report.text(verbose != 0);
  return r->text.c_str();
}

}  // extern "C"
