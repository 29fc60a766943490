#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "qisdp/error.hpp"

using namespace qisdp;
using fixtures::correlation_model;
using fixtures::hermitian_model;
using fixtures::hermitian_x;

TEST_CASE("parameter counts") {
  CHECK(parameter_count(3, 3, Structure::Hermitian, Field::Complex) == 9);
  CHECK(parameter_count(3, 3, Structure::Symmetric, Field::Real) == 6);
  CHECK(parameter_count(2, 2, Structure::Skew, Field::Real) == 1);
  CHECK(parameter_count(2, 3, Structure::Full, Field::Real) == 6);
  CHECK(parameter_count(2, 3, Structure::Full, Field::Complex) == 12);
  CHECK(parameter_count(4, 4, Structure::Diagonal, Field::Real) == 4);
  CHECK_THROWS_AS(parameter_count(2, 3, Structure::Symmetric, Field::Real), Error);
  CHECK_THROWS_AS(parameter_count(3, 3, Structure::Hermitian, Field::Real), Error);
}

TEST_CASE("variable expressions reproduce their structure") {
  Model m;
  std::mt19937_64 rng(7);
  std::normal_distribution<double> g;
  for (Structure s : {Structure::Full, Structure::Symmetric, Structure::Hermitian,
                      Structure::Diagonal, Structure::Skew}) {
    const Field f = s == Structure::Hermitian ? Field::Complex : Field::Real;
    auto v = m.declare("", 3, 3, s, f);
    MatExpr e = m.expr(v);
    CHECK(static_cast<int>(e.terms.size()) == v.param_count);
    Vec p = Vec::Zero(m.num_params());
    for (int k = 0; k < v.param_count; ++k) p(v.first_param + k) = g(rng);
    CMat val = e.evaluate(p);
    if (s == Structure::Symmetric) CHECK((val - val.transpose()).norm() < 1e-15);
    if (s == Structure::Hermitian) CHECK((val - val.adjoint()).norm() < 1e-15);
    if (s == Structure::Skew) CHECK((val + val.transpose()).norm() < 1e-15);
    if (s == Structure::Diagonal) CHECK((val - CMat(val.diagonal().asDiagonal())).norm() == 0.0);
  }
}

TEST_CASE("clean") {
  MatExpr e(2, 2);
  e.constant(0, 0) = 1e-15;
  e.terms[0] = CMat::Identity(2, 2) * 1e-12;
  e.terms[1] = CMat::Identity(2, 2);
  MatExpr c = clean(e, 1e-9);
  CHECK(c.terms.size() == 1);
  CHECK(c.terms.count(1) == 1);
  CHECK(c.constant(0, 0).real() == 1e-15);
  MatExpr same = clean(e, 0.0);
  CHECK(same.terms.size() == 2);
  CHECK_THROWS(clean(e, -1.0));
}

TEST_CASE("compile sizes of the Hermitian model") {
  const Model m = hermitian_model(hermitian_x());
  auto dual = compile(m);
  CHECK(dual.problem.structure.sdp_blocks == std::vector<int>{6});
  CHECK(dual.problem.m() == 9);
  CHECK(dual.problem.structure.free_dim == 1);
  CHECK(dual.problem.structure.nonneg_dim == 0);

  auto elim = compile(m, {Framing::Dual, EqualityMode::Eliminate});
  CHECK(elim.problem.m() == 8);
  CHECK(elim.problem.structure.free_dim == 0);

  auto primal = compile(m, {Framing::Primal});
  CHECK(primal.problem.structure.sdp_blocks == std::vector<int>{6});
  CHECK(primal.problem.m() == 1);
  CHECK(primal.problem.structure.free_dim == 0);

  auto two = compile(m, {Framing::Dual, EqualityMode::TwoInequalities});
  CHECK(two.problem.m() == 9);
  CHECK(two.problem.structure.nonneg_dim == 2);
}

TEST_CASE("framing and equality-mode invariance") {
  const CMat x = hermitian_x();
  const Model m = hermitian_model(x);
  const double expected = 3.227;
  std::vector<double> values;
  for (auto fr : {Framing::Dual, Framing::Primal})
    for (auto mode : {EqualityMode::FreeSplit, EqualityMode::Eliminate, EqualityMode::TwoInequalities}) {
      CompileOptions o;
      o.framing = fr;
      o.equalities = mode;
      auto r = solve_model(m, o);
      REQUIRE(r.solution.status == Status::Success);
      values.push_back(r.value);
      CHECK(r.value == doctest::Approx(expected).epsilon(1e-6));

      // recovered S is Hermitian and normalized
      const auto& v = m.vars()[0];
      CMat s = m.expr(v).evaluate(r.params);
      CHECK((s - s.adjoint()).cwiseAbs().maxCoeff() < 1e-9);
      const double tol = mode == EqualityMode::TwoInequalities ? 1e-7 + o.epsilon : 1e-7;
      CHECK(std::abs(s.trace().real() - 1.0) < tol);
      CHECK(std::abs((x * s).trace().real() - r.value) < 1e-6);
    }
  for (double v : values) CHECK(std::abs(v - values.front()) < 1e-6);
}

TEST_CASE("real shortcut drops imaginary parameters when the data is real") {
  Model m;
  auto s = m.declare("S", 3, 3, Structure::Hermitian, Field::Complex);
  m.add_psd(s);
  m.add_equality(m.expr(s).trace_re() - 1.0);
  Mat h(3, 3);
  h << 1, 0.5, 0, 0.5, 2, 0.3, 0, 0.3, -1;
  m.maximize(re_trace_product(h.cast<cplx>(), m.expr(s)));
  CompileOptions o;
  o.real_shortcut = true;
  auto c = compile(m, o);
  CHECK(c.recovery.shortcut_applied);
  CHECK(c.problem.structure.sdp_blocks == std::vector<int>{3});
  CHECK(c.problem.m() == 6);
  auto full = solve_model(m);
  auto cut = solve_model(m, o);
  CHECK(cut.value == doctest::Approx(full.value).epsilon(1e-6));
  Eigen::SelfAdjointEigenSolver<Mat> es(h);
  CHECK(cut.value == doctest::Approx(es.eigenvalues().maxCoeff()).epsilon(1e-6));

  // complex data: flag is ignored
  auto cx = compile(hermitian_model(hermitian_x()), o);
  CHECK_FALSE(cx.recovery.shortcut_applied);
  CHECK(cx.problem.structure.sdp_blocks == std::vector<int>{6});
}

TEST_CASE("correlation interval") {
  for (auto fr : {Framing::Dual, Framing::Primal}) {
    CompileOptions o;
    o.framing = fr;
    auto hi = solve_model(correlation_model(true), o);
    auto lo = solve_model(correlation_model(false), o);
    REQUIRE(hi.solution.status == Status::Success);
    REQUIRE(lo.solution.status == Status::Success);
    CHECK(hi.value == doctest::Approx(0.99573).epsilon(1e-4));
    CHECK(lo.value == doctest::Approx(0.074153).epsilon(1e-3));
    // closed form: extremes of c12 c13 +- sqrt((1-c12^2)(1-c13^2)) over the box corners
    CHECK(std::abs(hi.value - (0.73 * 0.79 + std::sqrt((1 - 0.73 * 0.73) * (1 - 0.79 * 0.79)))) < 1e-6);
    CHECK(std::abs(lo.value - (0.67 * 0.79 - std::sqrt((1 - 0.67 * 0.67) * (1 - 0.79 * 0.79)))) < 1e-6);
  }
}

TEST_CASE("two-inequalities optimum is within epsilon of elimination") {
  const Model m = correlation_model(true);
  auto e = solve_model(m, {Framing::Dual, EqualityMode::Eliminate});
  for (double eps : {1e-8, 1e-4, 1e-3}) {
    CompileOptions o{Framing::Dual, EqualityMode::TwoInequalities, eps};
    auto t = solve_model(m, o);
    REQUIRE(t.solution.status == Status::Success);
    // 3 equalities, each with unit coefficient norm; plus solver tolerance
    CHECK(std::abs(t.value - e.value) <= eps * 3 * 1.0 + 1e-6);
  }
}

TEST_CASE("affinity: scaling inputs scales C and b only") {
  auto build = [](double lambda) {
    Model m;
    auto c = m.declare("C", 3, 3, Structure::Symmetric, Field::Real);
    MatExpr e = m.expr(c);
    Mat f0(3, 3);
    f0 << 2, 0.1, 0, 0.1, 1, 0.2, 0, 0.2, 3;
    m.add_psd(MatExpr::constant_of(lambda * f0.cast<cplx>()) - e);
    m.maximize(lambda * e.trace_re());
    return compile(m);
  };
  auto a = build(1.0);
  auto b = build(2.5);
  REQUIRE(a.problem.m() == b.problem.m());
  CHECK((b.problem.c - 2.5 * a.problem.c).norm() < 1e-12);
  CHECK((b.problem.b - 2.5 * a.problem.b).norm() < 1e-12);
  for (int i = 0; i < a.problem.m(); ++i) CHECK((a.problem.a[i] - b.problem.a[i]).norm() == 0.0);
}

TEST_CASE("dual multipliers of the Hermitian model") {
  const CMat x = hermitian_x();
  auto r = solve_model(hermitian_model(x));
  const auto& rec = r.compiled.recovery;
  Vec mu = rec.equality_multipliers(r.solution);
  REQUIRE(mu.size() == 1);
  // the trace multiplier equals the optimal value in magnitude
  CHECK(std::abs(std::abs(mu(0)) - 3.227) < 1e-5);
  CMat w = rec.lmi_multiplier(r.solution, 0);
  CHECK(w.rows() == 3);
  CHECK((w - w.adjoint()).norm() < 1e-9);
}

TEST_CASE("model errors") {
  Model m;
  CHECK_THROWS_AS(compile(m), Error);
  auto a = m.scalar("a");
  auto b = m.scalar("b");
  m.add_nonneg(m.value(a));
  m.minimize(m.value(b));
  CHECK_THROWS_WITH_AS(compile(m), doctest::Contains("unbounded"), Error);
  Model m2;
  auto v = m2.declare("v", 2, 2, Structure::Symmetric);
  CHECK_THROWS_AS(m2.add_psd(MatExpr(2, 3)), Error);
  MatExpr bad(2, 2);
  bad.terms[5] = CMat::Identity(2, 2);
  CHECK_THROWS_AS(m2.add_psd(bad), Error);
  MatExpr nonherm = m2.expr(v);
  nonherm.constant(0, 1) = 1.0;
  m2.add_psd(nonherm);
  CHECK_THROWS_WITH_AS(compile(m2), doctest::Contains("not Hermitian"), Error);
  Model m3;
  auto u = m3.scalar("u");
  m3.add_nonneg(m3.value(u));
  m3.add_equality(m3.value(u) - 1.0);
  m3.add_equality(m3.value(u) - 2.0);
  CHECK_THROWS_WITH_AS(compile(m3, {Framing::Dual, EqualityMode::Eliminate}),
                       doctest::Contains("inconsistent"), Error);
}
