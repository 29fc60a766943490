#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <cmath>
#include <optional>
#include <random>

#include "qisdp/error.hpp"
#include "qisdp/qi_apps.hpp"

using namespace qisdp;

namespace {

const double kPi = 3.14159265358979323846;
const double kSqrt2 = std::sqrt(2.0);

CMat eye(int n) { return CMat::Identity(n, n); }

CVec ket(std::initializer_list<cplx> v) {
  CVec k(static_cast<int>(v.size()));
  int i = 0;
  for (auto c : v) k(i++) = c;
  return k.normalized();
}

CMat proj(const CVec& v) { return v * v.adjoint(); }

CVec random_ket(int d, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  CVec v(d);
  for (int i = 0; i < d; ++i) v(i) = cplx(g(rng), g(rng));
  return v.normalized();
}

CMat random_density(int d, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  CMat z(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) z(i, j) = cplx(g(rng), g(rng));
  CMat r = z * z.adjoint();
  return r / r.trace().real();
}

double min_eig(const CMat& m) {
  return Eigen::SelfAdjointEigenSolver<CMat>(hermitize(m)).eigenvalues()(0);
}

// Brute-force independence number and clique cover number for tiny graphs.
int independence_number(const Graph& g) {
  int best = 0;
  for (int mask = 0; mask < (1 << g.n); ++mask) {
    bool ok = true;
    for (auto [u, v] : g.edges)
      if ((mask >> u & 1) && (mask >> v & 1)) ok = false;
    if (ok) best = std::max(best, __builtin_popcount(mask));
  }
  return best;
}

int clique_cover_number(const Graph& g) {
  for (int k = 1; k <= g.n; ++k) {
    std::vector<int> colour(g.n, 0);
    while (true) {
      bool ok = true;
      for (int i = 0; i < g.n && ok; ++i)
        for (int j = i + 1; j < g.n && ok; ++j)
          if (colour[i] == colour[j] && !g.adjacent(i, j)) ok = false;
      if (ok) return k;
      int pos = 0;
      while (pos < g.n && ++colour[pos] == k) colour[pos++] = 0;
      if (pos == g.n) break;
    }
  }
  return g.n;
}

Graph random_graph(int n, double density, std::mt19937_64& rng) {
  std::bernoulli_distribution coin(density);
  Graph g;
  g.n = n;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (coin(rng)) g.edges.emplace_back(i, j);
  return g;
}

template <class F>
std::optional<ErrorKind> thrown_kind(F f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  return std::nullopt;
}

double evaluate(const Polynomial& p, const std::vector<double>& x) {
  double s = 0.0;
  for (const auto& [e, c] : p.terms) {
    double t = c;
    for (std::size_t i = 0; i < e.size(); ++i) t *= std::pow(x[i], e[i]);
    s += t;
  }
  return s;
}

}  // namespace

TEST_CASE("theta of cycles, complete and empty graphs") {
  for (int n : {5, 7}) {
    const double c = std::cos(kPi / n);
    auto r = lovasz_theta(Graph::cycle(n));
    REQUIRE(r.status == Status::Success);
    CHECK(r.value == doctest::Approx(n * c / (1.0 + c)).epsilon(1e-6));
  }
  CHECK(lovasz_theta(Graph::cycle(5)).value == doctest::Approx(std::sqrt(5.0)).epsilon(1e-6));
  CHECK(lovasz_theta(Graph::complete(6)).value == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(lovasz_theta(Graph::empty(4)).value == doctest::Approx(4.0).epsilon(1e-6));
  CHECK(weighted_theta(Graph::cycle(5)).value == doctest::Approx(std::sqrt(5.0)).epsilon(1e-6));
  CHECK(weighted_theta(Graph::empty(3)).value == doctest::Approx(3.0).epsilon(1e-6));
}

TEST_CASE("theta sandwich and agreement of the two forms") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 12; ++trial) {
    const Graph g = random_graph(4 + trial % 3, 0.45, rng);
    const double a = lovasz_theta(g).value;
    const double b = weighted_theta(g).value;
    CAPTURE(trial);
    CHECK(a == doctest::Approx(b).epsilon(1e-5));
    CHECK(independence_number(g) <= a + 1e-6);
    CHECK(a <= clique_cover_number(g) + 1e-6);
    // theta(G) theta(complement) >= n
    CHECK(a * lovasz_theta(g.complement()).value >= g.n - 1e-5);
  }
}

TEST_CASE("weighted theta homogeneity and validation") {
  Graph g = Graph::cycle(5);
  g.weights = {1, 2, 3, 4, 5};
  const double base = weighted_theta(g).value;
  Graph h = g;
  for (double& w : h.weights) w *= 3.0;
  CHECK(weighted_theta(h).value == doctest::Approx(3.0 * base).epsilon(1e-6));
  // bounded by the weight of the heaviest clique cover and above heaviest independent set
  CHECK(base >= 4 + 2 - 1e-6);  // {1,3} is independent: weights 2 + 4
  CHECK(base <= 15 + 1e-6);

  Graph bad = Graph::cycle(4);
  bad.edges.emplace_back(1, 1);
  CHECK(thrown_kind([&] { lovasz_theta(bad); }) == ErrorKind::InvalidArgument);
  Graph neg = Graph::cycle(4);
  neg.weights = {1, -1, 1, 1};
  CHECK(thrown_kind([&] { weighted_theta(neg); }) == ErrorKind::InvalidArgument);
}

TEST_CASE("CHSH exclusivity graph") {
  const auto ev = chsh_events();
  REQUIRE(ev.size() == 8);
  const Graph g = exclusivity_graph(ev);
  std::vector<int> deg(8, 0);
  for (auto [u, v] : g.edges) ++deg[u], ++deg[v];
  for (int d : deg) CHECK(d == 3);
  CHECK(independence_number(g) == 3);
  const double theta = weighted_theta(g).value;
  CHECK(theta == doctest::Approx(2.0 + kSqrt2).epsilon(1e-6));
  CHECK(2.0 * theta - 4.0 == doctest::Approx(2.0 * kSqrt2).epsilon(1e-6));

  auto dup = ev;
  dup.push_back(ev[0]);
  CHECK(thrown_kind([&] { exclusivity_graph(dup); }) == ErrorKind::InvalidArgument);
}

TEST_CASE("Choi matrices of standard maps") {
  std::mt19937_64 rng(3);
  const auto id = choi_of_map([](const CMat& x) { return x; }, 2, 2);
  CVec omega = CVec::Zero(4);
  omega(0) = omega(3) = 1.0;
  CHECK((id - proj(omega)).norm() < 1e-12);
  const CMat rho = random_density(2, rng);
  CHECK((apply_choi(id, rho, 2, 2) - rho).norm() < 1e-12);

  const auto dep = choi_of_map([](const CMat& x) { return CMat(x.trace() * eye(3) / 3.0); }, 2, 3);
  CHECK((dep - kron(eye(3) / 3.0, eye(2))).norm() < 1e-12);
  CHECK((apply_choi(dep, rho, 2, 3) - eye(3) / 3.0).norm() < 1e-12);

  // transpose map: Choi is SWAP, positive but not completely positive
  const auto tr = choi_of_map([](const CMat& x) { return CMat(x.transpose()); }, 2, 2);
  CHECK((tr - permutation_operator({2, 2}, {1, 0})).norm() < 1e-12);
  CHECK(min_eig(tr) == doctest::Approx(-1.0));
  const ChannelSpec one{{2}, {2}};
  auto c = check_channel(tr, one);
  CHECK_FALSE(c.cp);
  CHECK(c.tp);
  CHECK(check_channel(id, one).ok());
}

TEST_CASE("random Kraus channels are CPTP and apply correctly") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 5; ++trial) {
    const int din = 2, dout = 2 + trial % 2, r = 1 + trial % 3;
    CMat z(dout * r, din);
    for (int i = 0; i < z.rows(); ++i)
      for (int j = 0; j < din; ++j) z(i, j) = cplx(g(rng), g(rng));
    const CMat v = Eigen::HouseholderQR<CMat>(z).householderQ() * CMat::Identity(dout * r, din);
    std::vector<CMat> kraus;
    for (int k = 0; k < r; ++k) kraus.push_back(v.block(k * dout, 0, dout, din));
    const CMat j = choi_of_kraus(kraus);
    CHECK(check_channel(j, ChannelSpec{{din}, {dout}}).ok());
    const CMat rho = random_density(din, rng);
    CMat direct = CMat::Zero(dout, dout);
    for (const auto& k : kraus) direct += k * rho * k.adjoint();
    CHECK((apply_choi(j, rho, din, dout) - direct).norm() < 1e-10);
  }
}

TEST_CASE("bipartite channel properties") {
  const ChannelSpec bi{{2, 2}, {2, 2}, true, true, true, true};
  const auto id = choi_of_map([](const CMat& x) { return x; }, 4, 4);
  auto c = check_channel(id, bi);
  CHECK(c.cp);
  CHECK(c.tp);
  CHECK(c.ns);
  CHECK(c.ppt);
  const CMat swap = permutation_operator({2, 2}, {1, 0});
  const auto sw = choi_of_map([&](const CMat& x) { return CMat(swap * x * swap); }, 4, 4);
  CHECK_FALSE(check_channel(sw, bi).ns);
  // replace everything by a fixed product state: nonsignaling and PPT
  const auto fixed = choi_of_map([](const CMat& x) { return CMat(x.trace() * eye(4) / 4.0); }, 4, 4);
  CHECK(check_channel(fixed, bi).ok());
  // preparing a maximally entangled output is nonsignaling but not PPT-preserving
  CVec phi = CVec::Zero(4);
  phi(0) = phi(3) = 1.0 / kSqrt2;
  const auto ent = choi_of_map([&](const CMat& x) { return CMat(x.trace() * proj(phi)); }, 4, 4);
  auto e = check_channel(ent, bi);
  CHECK(e.ns);
  CHECK(e.tp);
  CHECK_FALSE(e.ppt);
}

TEST_CASE("channel optimization") {
  CVec omega = CVec::Zero(4);
  omega(0) = omega(3) = 1.0;
  const CMat o = proj(omega);
  auto r = optimize_channel(ChannelSpec{{2}, {2}}, o);
  REQUIRE(r.status == Status::Success);
  CHECK(r.value == doctest::Approx(4.0).epsilon(1e-6));
  CHECK(check_channel(r.choi, ChannelSpec{{2}, {2}}, 1e-6).ok());

  std::mt19937_64 rng(9);
  const CMat h = hermitize(random_density(4, rng) - eye(4) / 8.0);
  auto q = optimize_channel(ChannelSpec{{2}, {2}}, h);
  REQUIRE(q.status == Status::Success);
  const double lmax = Eigen::SelfAdjointEigenSolver<CMat>(h).eigenvalues().maxCoeff();
  CHECK(q.value <= lmax * 2 + 1e-6);
  CHECK(q.value == doctest::Approx((h * q.choi).trace().real()).epsilon(1e-6));

  // nonsignaling + PPT optimum of the swap fidelity is below the CPTP one
  const ChannelSpec bi{{2, 2}, {2, 2}, true, true, true, true};
  const CMat swap = permutation_operator({2, 2}, {1, 0});
  const auto sw = choi_of_map([&](const CMat& x) { return CMat(swap * x * swap); }, 4, 4);
  auto full = optimize_channel(ChannelSpec{{2, 2}, {2, 2}}, sw);
  auto restricted = optimize_channel(bi, sw);
  REQUIRE(full.status == Status::Success);
  REQUIRE(restricted.status == Status::Success);
  CHECK(full.value == doctest::Approx(16.0).epsilon(1e-6));
  CHECK(restricted.value < full.value - 1e-3);
  CHECK(check_channel(restricted.choi, bi, 1e-6).ok());
}

TEST_CASE("DPS first level on Werner states") {
  for (double p : {0.1, 0.25, 0.4, 0.5, 0.9}) {
    const CMat rho = werner_state(p);
    const double oracle = std::min(min_eig(rho), min_eig(partial_transpose(rho, {2, 2}, {1})));
    CHECK(oracle == doctest::Approx(std::min((1.0 - p) / 4.0, (1.0 - 3.0 * p) / 4.0)));
    auto r = dps_test(rho, 2, 2, 1);
    CAPTURE(p);
    REQUIRE(r.status == Status::Success);
    CHECK(r.t == doctest::Approx(oracle).epsilon(1e-6));
    CHECK(r.feasible == (p <= 1.0 / 3.0));
    CHECK(r.witness_value == doctest::Approx(r.t).epsilon(1e-5));
  }
}

TEST_CASE("DPS second level and witnesses") {
  std::mt19937_64 rng(21);
  DpsOptions no_ppt;
  no_ppt.ppt = false;
  for (double p : {0.25, 0.4, 0.9}) {
    const CMat rho = werner_state(p);
    auto k1 = dps_test(rho, 2, 2, 1);
    auto k2 = dps_test(rho, 2, 2, 2);
    auto sym = dps_test(rho, 2, 2, 2, no_ppt);
    CAPTURE(p);
    REQUIRE(k2.status == Status::Success);
    if (k2.feasible) CHECK(k1.feasible);
    if (k2.feasible) CHECK(sym.feasible);
    CHECK(k2.witness_value == doctest::Approx(k2.t).epsilon(1e-5));
    if (!k2.feasible) {
      // the witness is nonnegative on product states
      for (int s = 0; s < 50; ++s) {
        const CMat prod = kron(proj(random_ket(2, rng)), proj(random_ket(2, rng)));
        CHECK((k2.witness * prod).trace().real() >= -1e-6);
      }
    }
  }
  CHECK(dps_test(werner_state(0.25), 2, 2, 2).feasible);
  CHECK_FALSE(dps_test(werner_state(0.9), 2, 2, 2, no_ppt).feasible);

  const CMat prod = kron(random_density(2, rng), random_density(3, rng));
  auto r = dps_test(prod, 2, 3, 2);
  CHECK(r.feasible);
  CHECK(r.t > 0.0);

  CHECK(thrown_kind([&] { dps_test(werner_state(0.5), 2, 2, 6); }) == ErrorKind::InvalidArgument);
  CHECK(thrown_kind([&] { dps_test(werner_state(0.5), 2, 3, 1); }) == ErrorKind::Dimension);
}

TEST_CASE("SWAP extraction") {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 5; ++trial) {
    const int da = 2, db = 2 + trial % 2;
    const CMat rho = random_density(da * db, rng);
    const CMat ua = proj(random_ket(da, rng)), vb = proj(random_ket(db, rng));
    const CMat w = kron(rho, kron(ua, vb));
    CHECK(swap_probability_extract(w, da, db) ==
          doctest::Approx((rho * kron(ua, vb)).trace().real()).epsilon(1e-12));
    const CMat ra = random_density(da, rng), rb = random_density(db, rng);
    const CMat wp = kron(kron(ra, rb), kron(ua, vb));
    CHECK(swap_probability_extract(wp, da, db, false) ==
          doctest::Approx((ra * ua).trace().real()).epsilon(1e-12));
  }
  CHECK(thrown_kind([&] { swap_probability_extract(eye(4), 2, 2); }) == ErrorKind::Dimension);
}

TEST_CASE("SoS certificates") {
  CHECK(monomials_of_degree(3, 2).size() == 6);
  CHECK(monomials_of_degree(3, 3).size() == 10);

  Polynomial a{2, {}};
  a.add({4, 0}, 1).add({2, 2}, 2).add({0, 4}, 1);
  auto ca = sos_certificate(a);
  CHECK(ca.feasible);
  CHECK(ca.margin > 1e-3);
  CHECK(ca.residual < 1e-7);

  Polynomial b{2, {}};
  b.add({4, 0}, 1).add({2, 2}, -2).add({0, 4}, 1);
  auto cb = sos_certificate(b);
  CHECK(cb.feasible);
  CHECK(std::abs(cb.margin) < 1e-5);
  CHECK(cb.residual < 1e-5);

  Polynomial motzkin{3, {}};
  motzkin.add({4, 2, 0}, 1).add({2, 4, 0}, 1).add({2, 2, 2}, -3).add({0, 0, 6}, 1);
  auto cm = sos_certificate(motzkin);
  CHECK_FALSE(cm.feasible);
  CHECK(cm.margin < -1e-4);
  CHECK(cm.null_dimension > 0);

  Polynomial neg{1, {}};
  neg.add({2}, -1);
  CHECK_FALSE(sos_certificate(neg).feasible);

  Polynomial odd{2, {}};
  odd.add({3, 0}, 1);
  CHECK(thrown_kind([&] { sos_certificate(odd); }) == ErrorKind::InvalidArgument);
  Polynomial mixed{2, {}};
  mixed.add({2, 0}, 1).add({0, 0}, 1);
  CHECK(thrown_kind([&] { sos_certificate(mixed); }) == ErrorKind::InvalidArgument);
}

TEST_CASE("SoS soundness on random Gram polynomials") {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 6; ++trial) {
    const int nv = 2 + trial % 2;
    const auto basis = monomials_of_degree(nv, 2);
    const int n = static_cast<int>(basis.size());
    Mat f(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) f(i, j) = g(rng);
    const Mat gram = f * f.transpose();
    Polynomial h{nv, {}};
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        std::vector<int> e(nv);
        for (int v = 0; v < nv; ++v) e[v] = basis[i][v] + basis[j][v];
        h.terms[e] += gram(i, j);
      }
    auto c = sos_certificate(h);
    CAPTURE(trial);
    REQUIRE(c.feasible);
    CHECK(c.residual < 1e-7);
    for (int s = 0; s < 20; ++s) {
      std::vector<double> x(nv);
      for (double& v : x) v = g(rng);
      double sum = 0.0;
      for (const auto& sq : c.squares) sum += std::pow(evaluate(sq, x), 2);
      CHECK(evaluate(h, x) >= -1e-9);
      CHECK(sum == doctest::Approx(evaluate(h, x)).epsilon(1e-5).scale(1.0));
    }
  }
}

TEST_CASE("Tsirelson bound from an SoS decomposition") {
  auto r = tsirelson_sos_chsh();
  REQUIRE(r.status == Status::Success);
  CHECK(r.q1 == doctest::Approx(2.0 * kSqrt2).epsilon(1e-7));
  CHECK(r.residual < 1e-6);
  Vec c1(4), c2(4);
  c1 << 1, 1, -kSqrt2, 0;
  c2 << 1, -1, 0, -kSqrt2;
  const Mat expected = (c1 * c1.transpose() + c2 * c2.transpose()) / (2.0 * kSqrt2);
  CHECK((r.gram - expected).cwiseAbs().maxCoeff() < 1e-5);
  CHECK(is_psd(r.gram, 1e-8).psd);
  Vec target(7);
  target << 2 * kSqrt2, -1, -1, -1, 1, 0, 0;
  CHECK((chsh_gram_polynomial(expected) - target).norm() < 1e-12);
}

TEST_CASE("state discrimination") {
  const CVec k0 = ket({1, 0}), k1 = ket({0, 1});
  auto orth = qsd_optimal({proj(k0), proj(k1)}, {0.5, 0.5});
  REQUIRE(orth.status == Status::Success);
  CHECK(orth.value == doctest::Approx(1.0).epsilon(1e-7));
  CHECK(qsd_optimal({proj(k0), proj(k0)}, {0.3, 0.7}).value == doctest::Approx(0.7).epsilon(1e-7));

  for (double th : {0.2, 0.7, 1.2}) {
    const CVec psi = ket({std::cos(th / 2), cplx(0, std::sin(th / 2))});
    const double c = std::abs(k0.dot(psi));
    auto r = qsd_optimal({proj(k0), proj(psi)}, {0.5, 0.5});
    CHECK(r.value == doctest::Approx(helstrom_pure(c)).epsilon(1e-7));
    CMat sum = CMat::Zero(2, 2);
    for (const auto& m : r.povm) {
      CHECK(is_psd_hermitian(m, 1e-7));
      sum += m;
    }
    CHECK((sum - eye(2)).norm() < 1e-7);
  }

  // trine states
  std::vector<CMat> trine;
  for (int k = 0; k < 3; ++k) trine.push_back(proj(ket({std::cos(2 * kPi * k / 3), std::sin(2 * kPi * k / 3)})));
  CHECK(qsd_optimal(trine, {1.0 / 3, 1.0 / 3, 1.0 / 3}).value == doctest::Approx(2.0 / 3.0).epsilon(1e-7));

  CHECK(thrown_kind([&] { qsd_optimal({proj(k0)}, {0.5}); }) == ErrorKind::InvalidArgument);
  CHECK(thrown_kind([&] { qsd_optimal({proj(k0), eye(2)}, {0.5, 0.5}); }) == ErrorKind::InvalidArgument);
}

TEST_CASE("state discrimination against projective brute force") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 4; ++trial) {
    const CMat r0 = random_density(2, rng), r1 = random_density(2, rng);
    const double p = 0.3 + 0.1 * trial;
    auto sdp = qsd_optimal({r0, r1}, {p, 1 - p});
    // Helstrom: (1 + |p r0 - (1-p) r1|_1) / 2
    const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<CMat>(hermitize(p * r0 - (1 - p) * r1)).eigenvalues();
    CHECK(sdp.value == doctest::Approx(0.5 * (1 + ev.cwiseAbs().sum())).epsilon(1e-7));
    double best = std::max(p, 1 - p);  // trivial measurements
    for (int a = 0; a <= 90; ++a)
      for (int b = 0; b < 180; ++b) {
        const double th = kPi * a / 90, ph = 2 * kPi * b / 180;
        const CVec v = ket({std::cos(th / 2), std::polar(std::sin(th / 2), ph)});
        const CMat m0 = proj(v);
        const double s = p * (r0 * m0).trace().real() + (1 - p) * (r1 * (eye(2) - m0)).trace().real();
        best = std::max(best, s);
      }
    CAPTURE(trial);
    CHECK(best <= sdp.value + 1e-7);
    CHECK(best >= sdp.value - 2e-3);
  }
}

TEST_CASE("see-saw lower bounds") {
  SeesawOptions opt;
  opt.restarts = 4;
  const CVec k0 = ket({1, 0}), psi = ket({1, 1});
  const std::vector<CMat> states{proj(k0), proj(psi)};
  std::vector<PmTerm> terms{{0, 0, 0, 0.5}, {1, 1, 0, 0.5}};
  auto q = seesaw_pm(2, 2, {2}, terms, opt, states);
  CHECK(q.best == doctest::Approx(qsd_optimal(states, {0.5, 0.5}).value).epsilon(1e-6));

  auto chsh = seesaw_bell(Scenario::chsh(), BellExpr::chsh(), 2, 2, opt);
  CHECK(chsh.best >= 2 * kSqrt2 - 1e-3);
  CHECK(chsh.best <= 2 * kSqrt2 + 1e-6);
  const auto& tr = chsh.best_run.trajectory;
  for (std::size_t i = 1; i < tr.size(); ++i) CHECK(tr[i] >= tr[i - 1]);

  auto qrac = seesaw_pm(2, 4, {2, 2}, qrac_terms(), opt);
  CHECK(qrac.best >= 0.5 * (1 + 1 / kSqrt2) - 1e-3);
  CHECK(qrac.best <= 0.5 * (1 + 1 / kSqrt2) + 1e-6);
  for (std::size_t i = 2; i < qrac.best_run.trajectory.size(); ++i)
    CHECK(qrac.best_run.trajectory[i] >= qrac.best_run.trajectory[i - 1]);

  SeesawOptions serial = opt;
  serial.parallel = false;
  auto again = seesaw_pm(2, 4, {2, 2}, qrac_terms(), serial);
  CHECK(again.restart_values == qrac.restart_values);
}
