#include "qisdp/report.hpp"

#include <fmt/format.h>

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>

namespace qisdp {

namespace {

double lambda_min(const SymBlockMat& m) {
  double lo = std::numeric_limits<double>::infinity();
  for (const auto& b : m.blocks)
    if (b.rows() > 0) lo = std::min(lo, Eigen::SelfAdjointEigenSolver<Mat>(b, Eigen::EigenvaluesOnly).eigenvalues()(0));
  if (m.nonneg.size() > 0) lo = std::min(lo, m.nonneg.minCoeff());
  return std::isfinite(lo) ? lo : 0.0;
}

double cone_inner(const SymBlockMat& x, const SymBlockMat& z) {
  double s = 0.0;
  for (std::size_t k = 0; k < x.blocks.size(); ++k) s += x.blocks[k].cwiseProduct(z.blocks[k]).sum();
  return s + x.nonneg.dot(z.nonneg);
}

void round_all(Json& j) {
  if (j.is_number_float()) {
    j = round_sig(j.get<double>());
  } else if (j.is_structured()) {
    for (auto& v : j) round_all(v);
  }
}

}  // namespace

double round_sig(double v, int digits) {
  if (v == 0.0 || !std::isfinite(v)) return v;
  return std::stod(fmt::format("{:.{}g}", v, digits));
}

std::array<double, 6> dimacs_errors(const ConeProblem& p, const Solution& s) {
  const double bmax = p.b.size() ? p.b.cwiseAbs().maxCoeff() : 0.0;
  const double cmax = p.c.max_abs();
  Vec ax(p.m());
  for (int i = 0; i < p.m(); ++i) ax(i) = frobenius_inner(p.a[i], s.x);
  SymBlockMat rd = p.c;
  for (int i = 0; i < p.m(); ++i) rd.axpy(-s.y(i), p.a[i]);
  SymBlockMat zc = s.z;
  zc.free.setZero();
  rd -= zc;
  const double cx = frobenius_inner(p.c, s.x), by = p.b.dot(s.y);
  const double denom = 1.0 + std::abs(cx) + std::abs(by);
  return {(ax - p.b).norm() / (1.0 + bmax),
          std::max(0.0, -lambda_min(s.x)) / (1.0 + bmax),
          rd.norm() / (1.0 + cmax),
          std::max(0.0, -lambda_min(s.z)) / (1.0 + cmax),
          (cx - by) / denom,
          cone_inner(s.x, s.z) / denom};
}

void attach_solver(RunReport& r, const ConeProblem& p, const Solution& s, const IterationLog& log) {
  r.has_solver = true;
  r.sdp_blocks = p.structure.sdp_blocks;
  r.m = p.m();
  r.nonneg = p.structure.nonneg_dim;
  r.free = p.structure.free_dim;
  r.status = s.status;
  r.primal_value = s.primal_value;
  r.dual_value = s.dual_value;
  r.gap = s.stats.gap;
  r.p_inf = s.stats.p_inf;
  r.d_inf = s.stats.d_inf;
  r.iterations = s.stats.iterations;
  r.time = s.stats.time;
  r.dimacs = dimacs_errors(p, s);
  r.log = log;
}

double RunReport::max_dimacs() const {
  if (!dimacs) return 0.0;
  double m = 0.0;
  for (double e : *dimacs) m = std::max(m, std::abs(e));
  return m;
}

Json RunReport::to_json(bool include_time) const {
  Json j{{"schema", "qisdp.report"}, {"version", 1}, {"command", command}, {"status", status_name(status)},
         {"status_code", static_cast<int>(status)}};
  if (value) j["value"] = *value;
  if (has_solver) {
    j["problem"] = {{"sdp_blocks", sdp_blocks}, {"m", m}, {"nonneg", nonneg}, {"free", free}};
    j["solver"] = {{"primal_value", primal_value}, {"dual_value", dual_value}, {"gap", gap},
                   {"primal_infeasibility", p_inf}, {"dual_infeasibility", d_inf}, {"iterations", iterations}};
    if (dimacs) j["dimacs"] = *dimacs;
  }
  if (!result.empty()) j["result"] = result;
  round_all(j);
  if (include_time) j["wall_time"] = time;
  return j;
}

std::string RunReport::text(bool verbose) const {
  std::string out;
  if (verbose && has_solver) out += log.table() + "\n";
  out += fmt::format("{}: {}\n", command, status_name(status));
  if (value) out += fmt::format("  value        {:.9g}\n", *value);
  if (has_solver) {
    out += fmt::format("  blocks       [{}]  m = {}  nonneg = {}  free = {}\n", fmt::join(sdp_blocks, ", "), m, nonneg,
                       free);
    out += fmt::format("  primal obj   {:.10e}\n  dual obj     {:.10e}\n", primal_value, dual_value);
    out += fmt::format("  gap {:.2e}  p_inf {:.2e}  d_inf {:.2e}  iterations {}  time {:.3f}s\n", gap, p_inf, d_inf,
                       iterations, time);
    if (dimacs) out += fmt::format("  DIMACS       {:.2e}\n", fmt::join(*dimacs, " "));
  }
  for (auto it = result.begin(); it != result.end(); ++it) {
    const Json& v = it.value();
    if (v.is_primitive()) {
      out += fmt::format("  {:<12} {}\n", it.key(), v.is_number_float() ? fmt::format("{:.9g}", v.get<double>())
                                                                : v.is_string() ? v.get<std::string>() : v.dump());
    } else if (v.is_array() && v.size() <= 16 && std::all_of(v.begin(), v.end(), [](const Json& e) { return e.is_number(); })) {
      out += fmt::format("  {:<12} {}\n", it.key(), v.dump());
    }
  }
  return out;
}

}  // namespace qisdp
