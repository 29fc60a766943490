#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "qisdp/report.hpp"

namespace qisdp {

// Settings shared by the command-line subcommands.
struct RunOptions {
  SolverConfig solver;
  std::optional<Framing> framing;           // command default when empty
  std::optional<EqualityMode> equalities;   // command default when empty
  std::uint64_t seed = 1;
};

Framing framing_from_string(const std::string& s);            // dual, primal
EqualityMode equality_mode_from_string(const std::string& s);  // split, eliminate, ineq
SearchDirection direction_from_string(const std::string& s);   // hkm, nt

// File-driven runners; each returns a report whose status mirrors the
// underlying solve.
RunReport run_solve(const std::string& path, const RunOptions& o);  // .json model or SDPA
RunReport run_npa(const std::string& scenario, const std::string& level, const RunOptions& o);
RunReport run_mlp(const std::string& scenario, const std::string& level, int dimension, const RunOptions& o);
RunReport run_nv(const std::string& scenario, int level, const RunOptions& o);
RunReport run_theta(const std::string& graph, bool weighted, const RunOptions& o);
// state: JSON {"state": matrix, "dims": [dA, dB]}
RunReport run_dps(const std::string& state, int k, bool ppt, const RunOptions& o);
RunReport run_dps_werner(double p, int k, bool ppt, const RunOptions& o);
// JSON {"states": [matrix, ...], "priors": [...]} (priors default to uniform)
RunReport run_qsd(const std::string& states, const RunOptions& o);
RunReport run_seesaw(const std::string& scenario, int restarts, const RunOptions& o);
RunReport run_sos(const std::string& polynomial, const RunOptions& o);
RunReport run_tsirelson_sos(const RunOptions& o);

}  // namespace qisdp
