// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <fmt/core.h>

#include "qisdp/io.hpp"
#include "qisdp/ipm.hpp"
#include "qisdp/modeling.hpp"
#include "qisdp/npa.hpp"
#include "qisdp/qi_apps.hpp"

using namespace qisdp;

namespace {

const double kSqrt2 = std::sqrt(2.0);

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail += (detail.empty() ? "" : "; ") + what;
    }
  }
};

// Problems collected from every solve above, re-run by the solver quality gates.
std::vector<std::pair<std::string, ConeProblem>> g_suite;

void collect(const std::string& label, const ModelResult& r) { g_suite.emplace_back(label, r.compiled.problem); }

int g_failures = 0;

void criterion(int id, const std::string& name, double limit_s, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o.pass = false;
    o.detail = std::string("exception: ") + e.what();
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (secs >= limit_s) o.require(false, fmt::format("runtime {:.3f}s over {}s", secs, limit_s));
  if (!o.pass) ++g_failures;
  fmt::print("{} {:>2} {} ({:.3f}s){}{}\n", o.pass ? "PASS" : "FAIL", id, name, secs, o.detail.empty() ? "" : ": ",
             o.detail);
  std::fflush(stdout);
}

// Oracles written independently of the library.

CMat partial_transpose_b(const CMat& rho, int da, int db) {
  CMat out(rho.rows(), rho.cols());
  for (int a = 0; a < da; ++a)
    for (int b = 0; b < db; ++b)
      for (int a2 = 0; a2 < da; ++a2)
        for (int b2 = 0; b2 < db; ++b2) out(a * db + b, a2 * db + b2) = rho(a * db + b2, a2 * db + b);
  return out;
}

Eigen::VectorXcd random_pure(int d, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Eigen::VectorXcd v(d);
  for (int i = 0; i < d; ++i) v(i) = {g(rng), g(rng)};
  return v / v.norm();
}

// Success probability of the Helstrom measurement for two pure states with equal priors.
double helstrom_oracle(double c) { return 0.5 * (1.0 + std::sqrt(std::max(0.0, 1.0 - c * c))); }

// x^T M x over v = (A1, A2, B1, B2) with squares set to 1, compared to q1 - CHSH.
double tsirelson_residual(const Mat& m, double q1) {
  // constant term: trace; A_i B_j: 2 M_{i, 2+j}; A1 A2 and B1 B2 anticommutator terms must vanish
  const double sgn[2][2] = {{1, 1}, {1, -1}};
  double r = std::abs(m.trace() - q1);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) r = std::max(r, std::abs(2 * m(i, 2 + j) + sgn[i][j]));
  r = std::max(r, std::abs(m(0, 1) + m(1, 0)));
  r = std::max(r, std::abs(m(2, 3) + m(3, 2)));
  return r;
}

Model load_model(const std::string& path) { return model_from_json(Json::parse(read_file(path))); }

}  // namespace

int main() {
  criterion(1, "CHSH Tsirelson bound, NPA level 1 and 1+AB", 5.0, [] {
    Outcome o;
    for (const char* lv : {"1", "1+AB"}) {
      const auto r = solve_bell(Scenario::chsh(), NpaLevel::parse(lv), BellExpr::chsh());
      collect(std::string("npa ") + lv, r.run);
      o.require(r.status == Status::Success, fmt::format("level {} status {}", lv, static_cast<int>(r.status)));
      o.require(std::abs(r.value - 2 * kSqrt2) <= 1e-6, fmt::format("level {} value {:.10f}", lv, r.value));
      o.detail += fmt::format("{}{}: {:.9f}", o.detail.empty() ? "" : ", ", lv, r.value);
    }
    return o;
  });

  criterion(2, "moment index sets and dual unknown counts, levels 2-5", 1.0, [] {
    Outcome o;
    const int sizes[] = {13, 25, 41, 61};
    const int unknowns[] = {31, 61, 101, 151};
    std::string got;
    for (int k = 2; k <= 5; ++k) {
      const auto mm = build_moment_model(Scenario::chsh(), NpaLevel{k, false});
      const auto c = compile(moment_program(mm), {Framing::Dual, EqualityMode::FreeSplit});
      o.require(mm.size() == sizes[k - 2], fmt::format("level {} |S| = {}", k, mm.size()));
      o.require(c.problem.m() == unknowns[k - 2], fmt::format("level {} m = {}", k, c.problem.m()));
      got += fmt::format("{}{}/{}", got.empty() ? "" : " ", mm.size(), c.problem.m());
    }
    if (o.pass) o.detail = got;
    return o;
  });

  criterion(3, "correlation interval", 2.0, [] {
    Outcome o;
    const auto lo = solve_model(load_model("data/correlation_min.json"));
    const auto hi = solve_model(load_model("data/correlation_max.json"));
    collect("correlation min", lo);
    collect("correlation max", hi);
    o.require(lo.solution.success() && hi.solution.success(), "solver status");
    o.require(std::abs(lo.value - 0.074153) <= 1e-3, fmt::format("lower {:.6f}", lo.value));
    o.require(std::abs(hi.value - 0.99573) <= 1e-3, fmt::format("upper {:.6f}", hi.value));
    if (o.pass) o.detail = fmt::format("[{:.6f}, {:.6f}]", lo.value, hi.value);
    return o;
  });

  criterion(4, "Hermitian model compile sizes", 1.0, [] {
    Outcome o;
    const Model m = load_model("data/hermitian_model.json");
    const auto split = compile(m, {Framing::Dual, EqualityMode::FreeSplit}).problem;
    const auto elim = compile(m, {Framing::Dual, EqualityMode::Eliminate}).problem;
    const auto primal = compile(m, {Framing::Primal}).problem;
    o.require(split.structure.sdp_blocks == std::vector<int>{6} && split.m() == 9 && split.structure.free_dim == 1,
              fmt::format("split m={} free={}", split.m(), split.structure.free_dim));
    o.require(elim.m() == 8 && elim.structure.free_dim == 0,
              fmt::format("eliminate m={} free={}", elim.m(), elim.structure.free_dim));
    o.require(primal.structure.sdp_blocks == std::vector<int>{6} && primal.m() == 1,
              fmt::format("primal m={}", primal.m()));
    if (o.pass) o.detail = "split 6/9/1, eliminate 8/0, primal 6/1";
    for (auto f : {Framing::Dual, Framing::Primal}) collect("hermitian model", solve_model(m, {f}));
    return o;
  });

  criterion(5, "CHSH sum-of-squares certificate", 5.0, [] {
    Outcome o;
    const auto t = tsirelson_sos_chsh();
    collect("tsirelson sos", t.run);
    const double lmin = Eigen::SelfAdjointEigenSolver<Mat>(t.gram).eigenvalues().minCoeff();
    const double res = tsirelson_residual(t.gram, t.q1);
    o.require(t.status == Status::Success, "solver status");
    o.require(std::abs(t.q1 - 2 * kSqrt2) <= 1e-6, fmt::format("q1 {:.10f}", t.q1));
    o.require(lmin >= -1e-9, fmt::format("gram lambda_min {:.3e}", lmin));
    o.require(res < 1e-6 && t.residual < 1e-6, fmt::format("residual {:.3e} / {:.3e}", res, t.residual));
    if (o.pass) o.detail = fmt::format("q1 {:.9f}, lambda_min {:.2e}, residual {:.2e}", t.q1, lmin, res);
    return o;
  });

  double npa_level1 = 0.0;
  {
    const auto r = solve_bell(Scenario::chsh(), NpaLevel{1, false}, BellExpr::chsh());
    npa_level1 = r.value;
  }

  criterion(6, "Lovasz theta of C5 and the CHSH exclusivity graph", 10.0, [&] {
    Outcome o;
    const auto c5 = lovasz_theta(Graph::cycle(5));
    collect("theta C5", c5.run);
    const Graph g = exclusivity_graph(chsh_events());
    const auto ex = lovasz_theta(g);
    collect("theta CHSH", ex.run);
    o.require(g.n == 8, fmt::format("exclusivity graph has {} vertices", g.n));
    o.require(std::abs(c5.value - std::sqrt(5.0)) <= 1e-6, fmt::format("theta(C5) {:.10f}", c5.value));
    o.require(std::abs(ex.value - (2 + kSqrt2)) <= 1e-4, fmt::format("theta(CHSH) {:.10f}", ex.value));
    // the winning probabilities sum to 2 + beta/2 for the CHSH value beta
    o.require(std::abs(ex.value - (2 + npa_level1 / 2)) <= 1e-4,
              fmt::format("cross-check with NPA {:.10f}", 2 + npa_level1 / 2));
    if (o.pass) o.detail = fmt::format("{:.9f}, {:.9f}", c5.value, ex.value);
    return o;
  });

  criterion(7, "Werner state entanglement signs, DPS k = 1 with PPT", 10.0, [] {
    Outcome o;
    std::string got;
    for (double p : {0.1, 0.25, 0.4, 0.5, 0.9}) {
      const CMat rho = werner_state(p);
      const double lmin = Eigen::SelfAdjointEigenSolver<CMat>(partial_transpose_b(rho, 2, 2)).eigenvalues().minCoeff();
      const bool separable = lmin >= 0;
      const auto r = dps_test(rho, 2, 2, 1);
      collect(fmt::format("dps p={}", p), r.run);
      o.require(r.status == Status::Success, fmt::format("p={} status {}", p, static_cast<int>(r.status)));
      o.require(r.feasible == separable, fmt::format("p={} feasible={} oracle={}", p, r.feasible, separable));
      got += fmt::format("{}{}:{}", got.empty() ? "" : " ", p, r.feasible ? "feasible" : "entangled");
    }
    if (o.pass) o.detail = got;
    return o;
  });

  criterion(8, "Helstrom bound for 20 random pure-state pairs", 10.0, [] {
    Outcome o;
    std::mt19937_64 rng(20240601);
    double worst = 0.0;
    for (int t = 0; t < 20; ++t) {
      const int d = 2 + t % 3;
      const Eigen::VectorXcd a = random_pure(d, rng), b = random_pure(d, rng);
      const double c = std::abs(a.dot(b));
      const std::vector<CMat> states{a * a.adjoint(), b * b.adjoint()};
      const auto r = qsd_optimal(states, {0.5, 0.5});
      if (t < 3) collect(fmt::format("qsd {}", t), r.run);
      o.require(r.status == Status::Success, fmt::format("pair {} status {}", t, static_cast<int>(r.status)));
      worst = std::max(worst, std::abs(r.value - helstrom_oracle(c)));
    }
    o.require(worst <= 1e-6, fmt::format("max deviation {:.3e}", worst));
    if (o.pass) o.detail = fmt::format("max deviation {:.2e}", worst);
    return o;
  });

  criterion(9, "see-saw meets NPA, MLP and NV bounds (CHSH, 2->1 QRAC)", 60.0, [] {
    Outcome o;
    SeesawOptions ss;
    ss.restarts = 20;
    const auto lb_chsh = seesaw_bell(Scenario::chsh(), BellExpr::chsh(), 2, 2, ss).best;
    const auto npa = solve_bell(Scenario::chsh(), NpaLevel{1, false}, BellExpr::chsh());
    const MomentModel mm = build_moment_model(Scenario::chsh(), NpaLevel{1, false});
    const auto nv_chsh = nv_solve(nv_build_basis(bell_sampler(mm, {2, 2})).basis, bell_game(mm, BellExpr::chsh()));
    collect("nv chsh", nv_chsh.run);

    const auto terms = qrac_terms();
    const auto lb_qrac = seesaw_pm(2, 4, {2, 2}, terms, ss).best;
    const auto mlp = mlp_solve(Scenario::prepare_measure(4, 2), NpaLevel{2, false}, 2, terms);
    collect("mlp qrac", mlp.run);
    PmSpec spec;
    const PmNv pm(spec);
    const auto nv_qrac = nv_solve(nv_build_basis(pm.sampler()).basis, pm.game(terms));
    collect("nv qrac", nv_qrac.run);

    const double qrac = 0.5 * (1 + 1 / kSqrt2);
    auto pincer = [&](const std::string& what, double lower, double upper, double exact) {
      o.require(std::abs(upper - lower) <= 1e-3, fmt::format("{} gap {:.3e}", what, upper - lower));
      o.require(lower <= upper + 1e-6, fmt::format("{} lower bound {:.9f} above upper {:.9f}", what, lower, upper));
      o.require(std::abs(upper - exact) <= 1e-3, fmt::format("{} upper {:.9f}", what, upper));
    };
    pincer("CHSH/NPA", lb_chsh, npa.value, 2 * kSqrt2);
    pincer("CHSH/NV", lb_chsh, nv_chsh.value, 2 * kSqrt2);
    pincer("QRAC/MLP", lb_qrac, mlp.value, qrac);
    pincer("QRAC/NV", lb_qrac, nv_qrac.value, qrac);
    if (o.pass)
      o.detail = fmt::format("CHSH {:.7f} <= {:.7f}/{:.7f}, QRAC {:.7f} <= {:.7f}/{:.7f}", lb_chsh, npa.value,
                             nv_chsh.value, lb_qrac, mlp.value, nv_qrac.value);
    return o;
  });

  criterion(10, "solver quality gates over the suite", 60.0, [] {
    Outcome o;
    double worst_final = 0.0, worst_dir = 0.0;
    int iterates = 0;
    for (const auto& [label, original] : g_suite) {
      const ConeProblem p = split_free(original);
      double value[2] = {0, 0};
      for (int d = 0; d < 2; ++d) {
        SolverConfig cfg;
        cfg.direction = d ? SearchDirection::NT : SearchDirection::HKM;
        bool weak = true;
        auto obs = [&](const Iterate& it, const IterationRecord& rec) {
          ++iterates;
          // <C,X> - b^T y = <X,Z> + <R_d,X> - y^T R_p with <X,Z> >= 0 on the interior
          const auto r = residuals(p, it);
          const double xz = frobenius_inner(it.x, it.z);
          const double slack = frobenius_inner(r.rd, it.x) - it.y.dot(r.rp);
          const double diff = frobenius_inner(p.c, it.x) - p.b.dot(it.y);
          const double scale = 1 + std::abs(rec.primal_obj) + std::abs(rec.dual_obj);
          weak = weak && xz >= 0 && std::abs(diff - (xz + slack)) <= 1e-8 * scale;
        };
        const auto res = solve(p, cfg, obs);
        const auto& s = res.solution;
        o.require(s.success(), fmt::format("{} {} status {}", label, d ? "NT" : "HKM", static_cast<int>(s.status)));
        o.require(weak, fmt::format("{} {} weak duality", label, d ? "NT" : "HKM"));
        if (s.success()) {
          const auto& last = res.log.records.empty() ? res.log.initial : res.log.records.back();
          const double f = std::max({std::abs(last.gap), last.p_inf, last.d_inf});
          worst_final = std::max(worst_final, f);
          o.require(f <= 1e-7, fmt::format("{} final gap/residual {:.3e}", label, f));
          o.require(s.primal_value - s.dual_value >= -10 * cfg.tol_gap, fmt::format("{} weak duality at end", label));
        }
        value[d] = s.primal_value;
      }
      worst_dir = std::max(worst_dir, std::abs(value[0] - value[1]));
      o.require(std::abs(value[0] - value[1]) <= 1e-6,
                fmt::format("{} HKM {:.10f} vs NT {:.10f}", label, value[0], value[1]));
    }
    if (o.pass)
      o.detail = fmt::format("{} problems, {} iterates, max final {:.2e}, max HKM-NT {:.2e}", g_suite.size(), iterates,
                             worst_final, worst_dir);
    return o;
  });

  fmt::print("{} of 10 criteria passed\n", 10 - g_failures);
  return g_failures == 0 ? 0 : 1;
}
