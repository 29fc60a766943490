#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "qisdp/io.hpp"
#include "qisdp/ipm.hpp"

namespace qisdp {

// Normalized DIMACS errors of (X, y, Z) for min <C,X> s.t. A(X) = b:
//   1: |A(X) - b|_2 / (1 + |b|_inf)
//   2: max(0, -lambda_min(X)) / (1 + |b|_inf)
//   3: |C - A^T y - Z|_F / (1 + |C|_max)
//   4: max(0, -lambda_min(Z)) / (1 + |C|_max)
//   5: (<C,X> - b^T y) / (1 + |<C,X>| + |b^T y|)
//   6: <X,Z> / (1 + |<C,X>| + |b^T y|)
// Free coordinates have no cone constraint; their part of Z is treated as
// zero, so a violated free dual equality shows up in error 3.
std::array<double, 6> dimacs_errors(const ConeProblem& p, const Solution& s);

struct RunReport {
  std::string command;
  std::vector<int> sdp_blocks;
  int m = 0;
  int nonneg = 0;
  int free = 0;
  Status status = Status::Success;
  double primal_value = 0.0;
  double dual_value = 0.0;
  double gap = 0.0;
  double p_inf = 0.0;
  double d_inf = 0.0;
  int iterations = 0;
  double time = 0.0;
  std::optional<std::array<double, 6>> dimacs;
  std::optional<double> value;  // application-level result
  Json result = Json::object(); // application-specific fields
  IterationLog log;
  bool has_solver = false;

  bool success() const { return status == Status::Success; }
  // Largest |DIMACS error|; 0 when no solver run is attached.
  double max_dimacs() const;

  // Versioned schema "qisdp.report" v1. Floating-point values are rounded to
  // 12 significant digits; wall time is included only on request.
  Json to_json(bool include_time = false) const;
  std::string text(bool verbose = false) const;
};

// Fills the solver part of a report from a problem and its result.
void attach_solver(RunReport& r, const ConeProblem& p, const Solution& s, const IterationLog& log);

double round_sig(double v, int digits = 12);

}  // namespace qisdp
