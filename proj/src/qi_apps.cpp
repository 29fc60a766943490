#include "qisdp/qi_apps.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <algorithm>
#include <cmath>
#include <future>
#include <numeric>
#include <random>
#include <set>

#include "qisdp/error.hpp"

namespace qisdp {

namespace {

CMat eye(int n) { return CMat::Identity(n, n); }

void hermitian_entries(const MatExpr& e, std::vector<ScalarExpr>& out) {
  for (int j = 0; j < e.cols; ++j)
    for (int i = 0; i <= j; ++i) {
      out.push_back(e.entry_re(i, j));
      if (i < j) out.push_back(e.entry_im(i, j));
    }
}

// Adds Re/Im entry equalities e == 0 for a Hermitian-valued expression and
// returns (is_imag, i, j) per added equality.
std::vector<std::tuple<bool, int, int>> add_hermitian_equality(Model& m, const MatExpr& e,
                                                               const std::string& label) {
  std::vector<std::tuple<bool, int, int>> rows;
  for (int j = 0; j < e.cols; ++j)
    for (int i = 0; i <= j; ++i) {
      m.add_equality(e.entry_re(i, j), label);
      rows.emplace_back(false, i, j);
      if (i < j) {
        m.add_equality(e.entry_im(i, j), label);
        rows.emplace_back(true, i, j);
      }
    }
  return rows;
}

// Keeps a maximal independent subset of the equalities expr == 0; the
// primal framing rejects dependent rows.
void add_independent_equalities(Model& m, const std::vector<ScalarExpr>& eqs, const std::string& label) {
  if (eqs.empty()) return;
  const int n = m.num_params();
  Mat a = Mat::Zero(n, static_cast<int>(eqs.size()));
  Mat aug = Mat::Zero(n + 1, static_cast<int>(eqs.size()));
  for (std::size_t e = 0; e < eqs.size(); ++e) {
    for (const auto& [k, c] : eqs[e].terms) a(k, static_cast<Eigen::Index>(e)) = c;
    aug.col(static_cast<Eigen::Index>(e)) << a.col(static_cast<Eigen::Index>(e)), eqs[e].constant;
  }
  Eigen::ColPivHouseholderQR<Mat> qr(a);
  qr.setThreshold(1e-10);
  Eigen::ColPivHouseholderQR<Mat> qa(aug);
  qa.setThreshold(1e-10);
  if (qa.rank() != qr.rank()) throw model_error(label + " constraints are inconsistent");
  std::vector<int> keep;
  for (Eigen::Index r = 0; r < qr.rank(); ++r) keep.push_back(qr.colsPermutation().indices()(r));
  std::sort(keep.begin(), keep.end());
  for (int e : keep) m.add_equality(eqs[e], label);
}

CMat evaluate_var(const Model& m, const VarDecl& v, const Vec& p) { return m.expr(v).evaluate(p); }

}  // namespace

// ---------------------------------------------------------------- graphs

void Graph::validate() const {
  if (n < 0) throw invalid_argument("graph vertex count must be nonnegative");
  for (auto [u, v] : edges) {
    if (u < 0 || v < 0 || u >= n || v >= n) throw invalid_argument("edge endpoint out of range");
    if (u == v) throw invalid_argument("self-loops are not allowed");
  }
  if (!weights.empty()) {
    if (static_cast<int>(weights.size()) != n) throw invalid_argument("one weight per vertex is required");
    for (double w : weights)
      if (!(w > 0)) throw invalid_argument("vertex weights must be positive");
  }
}

bool Graph::adjacent(int i, int j) const {
  for (auto [u, v] : edges)
    if ((u == i && v == j) || (u == j && v == i)) return true;
  return false;
}

Graph Graph::complement() const {
  Graph c;
  c.n = n;
  c.weights = weights;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (!adjacent(i, j)) c.edges.emplace_back(i, j);
  return c;
}

Graph Graph::cycle(int n) {
  if (n < 3) throw invalid_argument("cycles need at least 3 vertices");
  Graph g;
  g.n = n;
  for (int i = 0; i < n; ++i) g.edges.emplace_back(i, (i + 1) % n);
  return g;
}

Graph Graph::complete(int n) { return empty(n).complement(); }

Graph Graph::empty(int n) {
  Graph g;
  g.n = n;
  return g;
}

namespace {

std::set<std::pair<int, int>> edge_set(const Graph& g) {
  std::set<std::pair<int, int>> s;
  for (auto [u, v] : g.edges) s.emplace(std::min(u, v), std::max(u, v));
  return s;
}

}  // namespace

ThetaResult lovasz_theta(const Graph& g, const SolverConfig& cfg) {
  g.validate();
  if (g.n == 0) throw invalid_argument("graph has no vertices");
  const auto edges = edge_set(g);
  Model m;
  auto lam = m.scalar("lambda");
  auto x = edges.empty() ? VarDecl{} : m.declare("x", static_cast<int>(edges.size()), 1);
  MatExpr lmi(g.n, g.n);
  CMat j = CMat::Ones(g.n, g.n);
  for (auto [u, v] : edges) j(u, v) = j(v, u) = 0.0;
  lmi.constant = -j;
  lmi.terms.emplace(lam.first_param, eye(g.n));
  int k = 0;
  for (auto [u, v] : edges) {
    CMat e = CMat::Zero(g.n, g.n);
    e(u, v) = e(v, u) = -1.0;
    lmi.terms.emplace(x.first_param + k++, e);
  }
  m.add_psd(lmi, "lambda I - X");
  m.minimize(m.value(lam));
  ThetaResult r;
  r.run = solve_model(m, {}, cfg);
  r.status = r.run.solution.status;
  r.value = r.run.value;
  r.matrix = j.real();
  k = 0;
  for (auto [u, v] : edges) {
    const double val = r.run.params(x.first_param + k++);
    r.matrix(u, v) = r.matrix(v, u) = val;
  }
  return r;
}

ThetaResult weighted_theta(const Graph& g, const SolverConfig& cfg) {
  g.validate();
  if (g.n == 0) throw invalid_argument("graph has no vertices");
  Model m;
  auto b = m.declare("B", g.n, g.n, Structure::Symmetric, Field::Real);
  const MatExpr be = m.expr(b);
  m.add_psd(b);
  m.add_equality(be.trace_re() - 1.0, "trace");
  for (auto [u, v] : edge_set(g)) m.add_equality(be.entry_re(u, v), "edge");
  Mat w = Mat::Ones(g.n, g.n);
  if (!g.weights.empty()) {
    Vec s(g.n);
    for (int i = 0; i < g.n; ++i) s(i) = std::sqrt(g.weights[i]);
    w = s * s.transpose();
  }
  m.maximize(re_trace_product(w.cast<cplx>(), be));
  ThetaResult r;
  r.run = solve_model(m, {Framing::Primal}, cfg);
  r.status = r.run.solution.status;
  r.value = r.run.value;
  r.matrix = evaluate_var(m, b, r.run.params).real();
  return r;
}

Graph exclusivity_graph(const std::vector<Event>& events) {
  Graph g;
  g.n = static_cast<int>(events.size());
  for (int i = 0; i < g.n; ++i)
    for (int j = i + 1; j < g.n; ++j) {
      if (events[i].outcomes == events[j].outcomes)
        throw invalid_argument("event " + std::to_string(j) + " duplicates event " + std::to_string(i));
      bool exclusive = false;
      for (const auto& [test, out] : events[i].outcomes) {
        auto it = events[j].outcomes.find(test);
        if (it != events[j].outcomes.end() && it->second != out) exclusive = true;
      }
      if (exclusive) g.edges.emplace_back(i, j);
    }
  return g;
}

std::vector<Event> chsh_events() {
  std::vector<Event> ev;
  for (int x = 0; x < 2; ++x)
    for (int y = 0; y < 2; ++y)
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
          if ((a ^ b) == (x & y))
            ev.push_back({{{x, a}, {2 + y, b}},
                          std::to_string(a) + std::to_string(b) + "|" + std::to_string(x) + std::to_string(y)});
  return ev;
}

// ---------------------------------------------------------------- channels

CMat choi_of_map(const std::function<CMat(const CMat&)>& map, int din, int dout) {
  if (din < 1 || dout < 1) throw invalid_argument("channel dimensions must be positive");
  CMat j = CMat::Zero(dout * din, dout * din);
  for (int a = 0; a < din; ++a)
    for (int b = 0; b < din; ++b) {
      CMat e = CMat::Zero(din, din);
      e(a, b) = 1.0;
      const CMat out = map(e);
      if (out.rows() != dout || out.cols() != dout) throw dimension_error("map output has the wrong size");
      j += kron(out, e);
    }
  return j;
}

CMat choi_of_kraus(const std::vector<CMat>& kraus) {
  if (kraus.empty()) throw invalid_argument("at least one Kraus operator is required");
  const int dout = static_cast<int>(kraus[0].rows()), din = static_cast<int>(kraus[0].cols());
  for (const auto& k : kraus)
    if (k.rows() != dout || k.cols() != din) throw dimension_error("Kraus operators differ in shape");
  return choi_of_map(
      [&](const CMat& x) {
        CMat y = CMat::Zero(dout, dout);
        for (const auto& k : kraus) y += k * x * k.adjoint();
        return y;
      },
      din, dout);
}

CMat apply_choi(const CMat& j, const CMat& rho, int din, int dout) {
  if (j.rows() != din * dout || j.cols() != din * dout) throw dimension_error("Choi matrix size mismatch");
  if (rho.rows() != din || rho.cols() != din) throw dimension_error("input state size mismatch");
  return partial_trace(j * kron(eye(dout), CMat(rho.transpose())), {dout, din}, {1});
}

void ChannelSpec::validate() const {
  if (in_dims.empty() || in_dims.size() != out_dims.size() || in_dims.size() > 2)
    throw invalid_argument("channel needs one or two input and output factors of equal arity");
  for (int d : in_dims)
    if (d < 1) throw invalid_argument("channel dimensions must be positive");
  for (int d : out_dims)
    if (d < 1) throw invalid_argument("channel dimensions must be positive");
  if ((nonsignaling || ppt_preserving) && in_dims.size() != 2)
    throw invalid_argument("nonsignaling and PPT-preserving constraints need a bipartite channel");
}

int ChannelSpec::din() const {
  return std::accumulate(in_dims.begin(), in_dims.end(), 1, std::multiplies<>());
}

int ChannelSpec::dout() const {
  return std::accumulate(out_dims.begin(), out_dims.end(), 1, std::multiplies<>());
}

namespace {

std::vector<int> choi_dims(const ChannelSpec& s) {
  std::vector<int> d = s.out_dims;
  d.insert(d.end(), s.in_dims.begin(), s.in_dims.end());
  return d;
}

// Tr_{B'} J and (Tr_{B'B} J) (x) I_B / d_B, both on A' A B.
std::pair<CMat, CMat> nonsignaling_sides(const CMat& j, const ChannelSpec& s) {
  const auto dims = choi_dims(s);  // A' B' A B
  const CMat lhs = partial_trace(j, dims, {1});
  const CMat rhs = kron(partial_trace(j, dims, {1, 3}), eye(s.in_dims[1])) / double(s.in_dims[1]);
  return {lhs, rhs};
}

}  // namespace

ChannelCheck check_channel(const CMat& j, const ChannelSpec& spec, double tol) {
  spec.validate();
  const int d = spec.din() * spec.dout();
  if (j.rows() != d || j.cols() != d) throw dimension_error("Choi matrix size mismatch");
  ChannelCheck c;
  const auto dims = choi_dims(spec);
  const std::vector<int> two{spec.dout(), spec.din()};
  if (spec.completely_positive) c.cp = is_psd_hermitian(j, tol);
  if (spec.trace_preserving)
    c.tp = (partial_trace(j, two, {0}) - eye(spec.din())).cwiseAbs().maxCoeff() <= tol;
  if (spec.nonsignaling) {
    auto [l, r] = nonsignaling_sides(j, spec);
    c.ns = (l - r).cwiseAbs().maxCoeff() <= tol;
  }
  if (spec.ppt_preserving) c.ppt = is_psd_hermitian(partial_transpose(j, dims, {1, 3}), tol);
  return c;
}

ChannelResult optimize_channel(const ChannelSpec& spec, const CMat& objective, const SolverConfig& cfg) {
  spec.validate();
  const int d = spec.din() * spec.dout();
  if (objective.rows() != d || objective.cols() != d) throw dimension_error("objective size mismatch");
  const auto dims = choi_dims(spec);
  Model m;
  auto jv = m.declare("J", d, d, Structure::Hermitian, Field::Complex);
  const MatExpr je = m.expr(jv);
  if (spec.completely_positive) m.add_psd(jv, "J >= 0");
  std::vector<ScalarExpr> eqs;
  if (spec.trace_preserving) {
    const std::vector<int> two{spec.dout(), spec.din()};
    MatExpr tp = je.map([&](const CMat& c) { return partial_trace(c, two, {0}); });
    tp -= eye(spec.din());
    hermitian_entries(tp, eqs);
  }
  if (spec.nonsignaling) {
    const int db = spec.in_dims[1];
    MatExpr ns = je.map([&](const CMat& c) {
      return CMat(partial_trace(c, dims, {1}) - kron(partial_trace(c, dims, {1, 3}), eye(db)) / double(db));
    });
    ns.constant.setZero();
    hermitian_entries(ns, eqs);
  }
  add_independent_equalities(m, eqs, "channel");
  if (spec.ppt_preserving)
    m.add_psd(je.map([&](const CMat& c) { return partial_transpose(c, dims, {1, 3}); }), "J^T_BB' >= 0");
  m.maximize(re_trace_product(objective, je));
  ChannelResult r;
  r.run = solve_model(m, {Framing::Primal}, cfg);
  r.status = r.run.solution.status;
  r.value = r.run.value;
  r.choi = evaluate_var(m, jv, r.run.params);
  return r;
}

// ---------------------------------------------------------------- DPS

CMat werner_state(double p) {
  CVec psi = CVec::Zero(4);
  psi(1) = 1.0 / std::sqrt(2.0);
  psi(2) = -1.0 / std::sqrt(2.0);
  return p * psi * psi.adjoint() + (1.0 - p) * eye(4) / 4.0;
}

namespace {

// Orbits of ordered index pairs under permutations of the B copies.
struct OrbitBasis {
  std::vector<CMat> mats;  // Hermitian basis of the invariant subspace
};

OrbitBasis invariant_basis(int da, int db, int k) {
  std::vector<int> dims{da};
  for (int c = 0; c < k; ++c) dims.push_back(db);
  int total = da;
  for (int c = 0; c < k; ++c) total *= db;
  std::vector<int> perm(k);
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<std::vector<int>> perms;
  do perms.push_back(perm);
  while (std::next_permutation(perm.begin(), perm.end()));
  // image of every basis index under every permutation
  std::vector<std::vector<int>> image(perms.size(), std::vector<int>(total));
  for (std::size_t q = 0; q < perms.size(); ++q)
    for (int r = 0; r < total; ++r) {
      std::vector<int> dig(k + 1);
      int x = r;
      for (int f = k; f >= 0; --f) {
        dig[f] = x % dims[f];
        x /= dims[f];
      }
      std::vector<int> out = dig;
      for (int c = 0; c < k; ++c) out[1 + perms[q][c]] = dig[1 + c];
      int idx = 0;
      for (int f = 0; f <= k; ++f) idx = idx * dims[f] + out[f];
      image[q][r] = idx;
    }
  auto canon = [&](int r, int c) {
    std::pair<int, int> best{total, total};
    for (const auto& im : image) best = std::min(best, std::make_pair(im[r], im[c]));
    return best;
  };
  std::map<std::pair<int, int>, std::vector<std::pair<int, int>>> orbits;
  for (int r = 0; r < total; ++r)
    for (int c = 0; c < total; ++c) orbits[canon(r, c)].emplace_back(r, c);
  OrbitBasis ob;
  const cplx I(0.0, 1.0);
  std::set<std::pair<int, int>> done;
  for (const auto& [rep, cells] : orbits) {
    if (done.count(rep)) continue;
    const auto conj = canon(rep.second, rep.first);
    done.insert(rep);
    done.insert(conj);
    CMat mo = CMat::Zero(total, total);
    for (auto [r, c] : cells) mo(r, c) = 1.0;
    if (conj == rep) {
      ob.mats.push_back(mo);
    } else {
      CMat mc = CMat::Zero(total, total);
      for (auto [r, c] : orbits.at(conj)) mc(r, c) = 1.0;
      ob.mats.push_back(mo + mc);
      ob.mats.push_back(I * mo - I * mc);
    }
  }
  return ob;
}

}  // namespace

DpsResult dps_test(const CMat& rho, int da, int db, int k, const DpsOptions& opt) {
  if (k < 1) throw invalid_argument("number of extension copies must be at least 1");
  if (da < 1 || db < 1) throw invalid_argument("local dimensions must be positive");
  if (rho.rows() != da * db || rho.cols() != da * db) throw dimension_error("state size does not match d_A d_B");
  if ((rho - rho.adjoint()).cwiseAbs().maxCoeff() > 1e-9) throw invalid_argument("state is not Hermitian");
  double total = da;
  for (int c = 0; c < k; ++c) total *= db;
  if (total > opt.max_dimension)
    throw invalid_argument("extension dimension " + std::to_string(static_cast<long long>(total)) +
                           " exceeds the limit " + std::to_string(opt.max_dimension));
  const int n = static_cast<int>(total);
  std::vector<int> dims{da};
  for (int c = 0; c < k; ++c) dims.push_back(db);

  const OrbitBasis ob = invariant_basis(da, db, k);
  Model m;
  auto p = m.declare("orbit", static_cast<int>(ob.mats.size()), 1);
  auto t = m.scalar("t");
  MatExpr ext(n, n);
  for (std::size_t q = 0; q < ob.mats.size(); ++q) ext.terms.emplace(p.first_param + static_cast<int>(q), ob.mats[q]);

  MatExpr shifted = ext;
  shifted.terms.emplace(t.first_param, -eye(n));
  m.add_psd(shifted, "extension - t I");
  if (opt.ppt) {
    // permutation symmetry leaves one bipartition per number of transposed copies
    for (int j = 1; j <= k; ++j) {
      std::vector<int> sys;
      for (int c = 1; c <= j; ++c) sys.push_back(c);
      MatExpr pt = ext.map([&](const CMat& c) { return partial_transpose(c, dims, sys); });
      pt.terms.emplace(t.first_param, -eye(n));
      m.add_psd(pt, "PPT " + std::to_string(j));
    }
  }
  std::vector<int> rest;
  for (int c = 2; c <= k; ++c) rest.push_back(c);
  MatExpr marg = rest.empty() ? ext : ext.map([&](const CMat& c) { return partial_trace(c, dims, rest); });
  marg -= rho;
  const auto rows = add_hermitian_equality(m, marg, "marginal");
  m.maximize(m.value(t));

  DpsResult r;
  r.parameters = m.num_params();
  r.run = solve_model(m, {Framing::Dual, EqualityMode::FreeSplit}, opt.solver);
  r.status = r.run.solution.status;
  r.t = r.run.value;
  r.feasible = r.t >= -opt.feasibility_tol;
  // t* = -sum_e x_e rho_e, regrouped as Tr(W rho)
  const Vec mult = r.run.compiled.recovery.equality_multipliers(r.run.solution);
  r.witness = CMat::Zero(da * db, da * db);
  for (std::size_t e = 0; e < rows.size(); ++e) {
    auto [imag, i, j] = rows[e];
    const double x = mult(static_cast<Eigen::Index>(e));
    if (i == j) {
      r.witness(i, i) += -x;
    } else if (!imag) {
      r.witness(i, j) += -x / 2.0;
      r.witness(j, i) += -x / 2.0;
    } else {
      r.witness(i, j) += cplx(0.0, -x / 2.0);
      r.witness(j, i) += cplx(0.0, x / 2.0);
    }
  }
  r.witness_value = (r.witness * rho).trace().real();
  return r;
}

double swap_probability_extract(const CMat& w, int da, int db, bool b_side) {
  const std::vector<int> dims{da, db, da, db};
  const int n = da * db * da * db;
  if (w.rows() != n || w.cols() != n) throw dimension_error("operator must act on A B A' B'");
  const CMat s = permutation_operator(dims, b_side ? std::vector<int>{2, 3, 0, 1} : std::vector<int>{2, 1, 0, 3});
  return (w * s).trace().real();
}

// ---------------------------------------------------------------- SoS

int Polynomial::degree() const {
  int d = 0;
  for (const auto& [e, c] : terms)
    if (c != 0.0) d = std::max(d, std::accumulate(e.begin(), e.end(), 0));
  return d;
}

bool Polynomial::homogeneous() const {
  int d = -1;
  for (const auto& [e, c] : terms) {
    if (c == 0.0) continue;
    const int s = std::accumulate(e.begin(), e.end(), 0);
    if (d >= 0 && s != d) return false;
    d = s;
  }
  return true;
}

Polynomial& Polynomial::add(const std::vector<int>& exps, double c) {
  if (static_cast<int>(exps.size()) != nvars) throw invalid_argument("exponent vector length mismatch");
  for (int e : exps)
    if (e < 0) throw invalid_argument("exponents must be nonnegative");
  terms[exps] += c;
  return *this;
}

std::vector<std::vector<int>> monomials_of_degree(int nvars, int degree) {
  std::vector<std::vector<int>> out;
  std::vector<int> cur(nvars, 0);
  std::function<void(int, int)> rec = [&](int var, int left) {
    if (var == nvars - 1) {
      cur[var] = left;
      out.push_back(cur);
      return;
    }
    for (int e = left; e >= 0; --e) {
      cur[var] = e;
      rec(var + 1, left - e);
    }
  };
  if (nvars > 0) rec(0, degree);
  return out;
}

namespace {

std::vector<int> add_exps(const std::vector<int>& a, const std::vector<int>& b) {
  std::vector<int> s(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) s[i] = a[i] + b[i];
  return s;
}

}  // namespace

SosCertificate sos_certificate(const Polynomial& h, const SolverConfig& cfg, double tol) {
  if (h.nvars < 1) throw invalid_argument("polynomial needs at least one variable");
  if (!h.homogeneous()) throw invalid_argument("polynomial must be homogeneous");
  const int deg = h.degree();
  if (deg % 2 != 0 || deg == 0) throw invalid_argument("polynomial degree must be even and positive");
  SosCertificate cert;
  cert.basis = monomials_of_degree(h.nvars, deg / 2);
  const int n = static_cast<int>(cert.basis.size());

  // cells (a <= b) grouped by the monomial they produce
  std::map<std::vector<int>, std::vector<std::pair<int, int>>> cells;
  for (int a = 0; a < n; ++a)
    for (int b = a; b < n; ++b) cells[add_exps(cert.basis[a], cert.basis[b])].emplace_back(a, b);
  auto unit = [&](std::pair<int, int> c) {
    Mat e = Mat::Zero(n, n);
    if (c.first == c.second) {
      e(c.first, c.first) = 1.0;
    } else {
      e(c.first, c.second) = e(c.second, c.first) = 0.5;
    }
    return e;
  };
  Mat hm = Mat::Zero(n, n);
  for (const auto& [e, c] : h.terms) {
    if (c == 0.0) continue;
    auto it = cells.find(e);
    if (it == cells.end()) throw invalid_argument("monomial outside the Gram basis");
    hm += c * unit(it->second.front());
  }
  std::vector<Mat> null;
  for (const auto& [e, list] : cells)
    for (std::size_t q = 1; q < list.size(); ++q) null.push_back(unit(list[q]) - unit(list.front()));
  cert.null_dimension = static_cast<int>(null.size());

  Model m;
  auto t = m.scalar("t");
  auto y = null.empty() ? VarDecl{} : m.declare("y", static_cast<int>(null.size()), 1);
  MatExpr g = MatExpr::constant_of(hm.cast<cplx>());
  for (std::size_t q = 0; q < null.size(); ++q) g.terms.emplace(y.first_param + static_cast<int>(q), null[q].cast<cplx>());
  MatExpr shifted = g;
  shifted.terms.emplace(t.first_param, -eye(n));
  m.add_psd(shifted, "Gram - t I");
  m.add_nonneg(1.0 - m.value(t), "t <= 1");
  m.maximize(m.value(t));
  cert.run = solve_model(m, {}, cfg);
  cert.status = cert.run.solution.status;
  cert.margin = cert.run.value;
  cert.feasible = cert.status == Status::Success && cert.margin >= -tol;
  cert.gram = g.evaluate(cert.run.params).real();

  Eigen::SelfAdjointEigenSolver<Mat> es(symmetrize(cert.gram));
  Polynomial sum{h.nvars, {}};
  for (int q = 0; q < n; ++q) {
    const double lam = es.eigenvalues()(q);
    if (lam <= 0.0) continue;
    Polynomial sq{h.nvars, {}};
    for (int a = 0; a < n; ++a)
      if (double c = std::sqrt(lam) * es.eigenvectors()(a, q); c != 0.0) sq.terms[cert.basis[a]] = c;
    for (const auto& [e1, c1] : sq.terms)
      for (const auto& [e2, c2] : sq.terms) sum.terms[add_exps(e1, e2)] += c1 * c2;
    cert.squares.push_back(std::move(sq));
  }
  double res = 0.0;
  std::set<std::vector<int>> keys;
  for (const auto& [e, c] : sum.terms) keys.insert(e);
  for (const auto& [e, c] : h.terms) keys.insert(e);
  for (const auto& e : keys) {
    const double a = sum.terms.count(e) ? sum.terms.at(e) : 0.0;
    const double b = h.terms.count(e) ? h.terms.at(e) : 0.0;
    res += (a - b) * (a - b);
  }
  cert.residual = std::sqrt(res);
  return cert;
}

Vec chsh_gram_polynomial(const Mat& m) {
  if (m.rows() != 4 || m.cols() != 4) throw dimension_error("CHSH Gram matrix must be 4x4");
  Vec c(7);
  c << m.trace(), m(0, 2) + m(2, 0), m(0, 3) + m(3, 0), m(1, 2) + m(2, 1), m(1, 3) + m(3, 1),
      0.5 * (m(0, 1) + m(1, 0)), 0.5 * (m(2, 3) + m(3, 2));
  return c;
}

TsirelsonSos tsirelson_sos_chsh(const SolverConfig& cfg) {
  // q 1 - sum g_xy A_x B_y = v^T M v, v = (A1, A2, B1, B2); diagonal weights
  // gamma_i multiply A_i^2 = 1, so q = Tr M.
  const double g[2][2] = {{1.0, 1.0}, {1.0, -1.0}};
  Model m;
  auto gamma = m.declare("gamma", 4, 1);
  MatExpr lmi(4, 4);
  for (int x = 0; x < 2; ++x)
    for (int y = 0; y < 2; ++y) lmi.constant(x, 2 + y) = lmi.constant(2 + y, x) = -g[x][y] / 2.0;
  ScalarExpr q;
  for (int i = 0; i < 4; ++i) {
    CMat e = CMat::Zero(4, 4);
    e(i, i) = 1.0;
    lmi.terms.emplace(gamma.first_param + i, e);
    q += m.param(gamma.first_param + i);
  }
  m.add_psd(lmi, "Gram");
  m.minimize(q);
  TsirelsonSos r;
  r.run = solve_model(m, {}, cfg);
  r.status = r.run.solution.status;
  r.q1 = r.run.value;
  r.gram = lmi.evaluate(r.run.params).real();
  Vec target(7);
  target << r.q1, -1, -1, -1, 1, 0, 0;
  r.residual = (chsh_gram_polynomial(r.gram) - target).norm();
  return r;
}

// ---------------------------------------------------------------- QSD

PovmResult optimize_povm(const std::vector<CMat>& objectives, const SolverConfig& cfg) {
  if (objectives.empty()) throw invalid_argument("at least one outcome is required");
  const int d = static_cast<int>(objectives[0].rows());
  for (const auto& o : objectives)
    if (o.rows() != d || o.cols() != d) throw dimension_error("objective operators differ in size");
  Model m;
  std::vector<VarDecl> vars;
  MatExpr sum(d, d);
  ScalarExpr obj;
  for (std::size_t a = 0; a < objectives.size(); ++a) {
    auto v = m.declare("M" + std::to_string(a), d, d, Structure::Hermitian, Field::Complex);
    vars.push_back(v);
    m.add_psd(v);
    const MatExpr e = m.expr(v);
    sum += e;
    obj += re_trace_product(hermitize(objectives[a]), e);
  }
  sum -= eye(d);
  add_hermitian_equality(m, sum, "completeness");
  m.maximize(obj);
  CompileOptions co{Framing::Primal};
  co.real_shortcut = true;
  PovmResult r;
  r.run = solve_model(m, co, cfg);
  r.status = r.run.solution.status;
  r.value = r.run.value;
  for (const auto& v : vars) r.povm.push_back(evaluate_var(m, v, r.run.params));
  return r;
}

PovmResult optimize_state(const CMat& objective, const SolverConfig& cfg) {
  const int d = static_cast<int>(objective.rows());
  if (objective.cols() != d) throw dimension_error("objective must be square");
  Model m;
  auto v = m.declare("rho", d, d, Structure::Hermitian, Field::Complex);
  m.add_psd(v);
  const MatExpr e = m.expr(v);
  m.add_equality(e.trace_re() - 1.0, "trace");
  m.maximize(re_trace_product(hermitize(objective), e));
  CompileOptions co{Framing::Primal};
  co.real_shortcut = true;
  PovmResult r;
  r.run = solve_model(m, co, cfg);
  r.status = r.run.solution.status;
  r.value = r.run.value;
  r.povm.push_back(evaluate_var(m, v, r.run.params));
  return r;
}

PovmResult qsd_optimal(const std::vector<CMat>& states, const std::vector<double>& priors,
                       const SolverConfig& cfg) {
  if (states.empty() || states.size() != priors.size())
    throw invalid_argument("one prior per state is required");
  double total = 0.0;
  for (double p : priors) {
    if (p < 0) throw invalid_argument("priors must be nonnegative");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) throw invalid_argument("priors must sum to 1");
  const auto d = states[0].rows();
  std::vector<CMat> obj;
  for (std::size_t i = 0; i < states.size(); ++i) {
    const CMat& s = states[i];
    if (s.rows() != d || s.cols() != d) throw dimension_error("states differ in dimension");
    if (std::abs(s.trace().real() - 1.0) > 1e-9 || !is_psd_hermitian(s, 1e-9))
      throw invalid_argument("state " + std::to_string(i) + " is not a density matrix");
    obj.push_back(priors[i] * s);
  }
  return optimize_povm(obj, cfg);
}

double helstrom_pure(double overlap) { return 0.5 * (1.0 + std::sqrt(std::max(0.0, 1.0 - overlap * overlap))); }

// ---------------------------------------------------------------- see-saw

namespace {

CMat haar_state(int d, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  CVec v(d);
  for (int i = 0; i < d; ++i) v(i) = cplx(g(rng), g(rng));
  v.normalize();
  return v * v.adjoint();
}

std::vector<CMat> random_projective(int d, int outcomes, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  CMat z(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) z(i, j) = cplx(g(rng), g(rng));
  const CMat u = Eigen::HouseholderQR<CMat>(z).householderQ();
  std::vector<CMat> out(outcomes, CMat::Zero(d, d));
  for (int c = 0; c < d; ++c) out[c % outcomes] += u.col(c) * u.col(c).adjoint();
  return out;
}

bool improved(double now, double before, double rel_tol) {
  return now - before > rel_tol * std::max(1.0, std::abs(before));
}

template <class RunOne>
SeesawResult run_restarts(const SeesawOptions& opt, RunOne one) {
  if (opt.restarts < 1) throw invalid_argument("at least one restart is required");
  std::vector<SeesawRun> runs(opt.restarts);
  auto seed_of = [&](int r) {
    std::seed_seq seq{static_cast<std::uint32_t>(opt.seed), static_cast<std::uint32_t>(opt.seed >> 32),
                      static_cast<std::uint32_t>(r)};
    std::mt19937_64 rng(seq);
    return rng();
  };
  if (opt.parallel) {
    std::vector<std::future<SeesawRun>> fut;
    for (int r = 0; r < opt.restarts; ++r) fut.push_back(std::async(std::launch::async, one, seed_of(r)));
    for (int r = 0; r < opt.restarts; ++r) runs[r] = fut[r].get();
  } else {
    for (int r = 0; r < opt.restarts; ++r) runs[r] = one(seed_of(r));
  }
  SeesawResult res;
  int best = 0;
  for (int r = 0; r < opt.restarts; ++r) {
    res.restart_values.push_back(runs[r].value);
    if (runs[r].value > runs[best].value) best = r;
  }
  res.best = runs[best].value;
  res.best_run = std::move(runs[best]);
  return res;
}

}  // namespace

SeesawResult seesaw_bell(const Scenario& s, const BellExpr& e, int da, int db, const SeesawOptions& opt) {
  s.validate();
  if (s.parties() != 2) throw invalid_argument("see-saw Bell scenarios have two parties");
  if (da < 1 || db < 1) throw invalid_argument("local dimensions must be positive");
  for (const auto& t : e.terms) {
    if (t.outcomes.size() != 2 || t.settings.size() != 2) throw invalid_argument("Bell term arity mismatch");
    for (int p = 0; p < 2; ++p)
      if (t.settings[p] < 0 || t.settings[p] >= s.settings(p) || t.outcomes[p] < 0 ||
          t.outcomes[p] >= s.outcomes[p][t.settings[p]])
        throw invalid_argument("Bell term out of range");
  }
  const std::vector<int> dims{da, db};
  auto one = [&, dims](std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    SeesawRun run;
    run.seed = seed;
    CMat rho = haar_state(da * db, rng);
    std::vector<std::vector<CMat>> meas[2];
    for (int p = 0; p < 2; ++p)
      for (int x = 0; x < s.settings(p); ++x) meas[p].push_back(random_projective(dims[p], s.outcomes[p][x], rng));
    auto value = [&]() {
      double v = e.constant;
      for (const auto& t : e.terms)
        v += t.coef * (rho * kron(meas[0][t.settings[0]][t.outcomes[0]], meas[1][t.settings[1]][t.outcomes[1]]))
                          .trace()
                          .real();
      return v;
    };
    double cur = value();
    run.trajectory.push_back(cur);
    for (int it = 0; it < opt.max_iterations; ++it) {
      const double round_start = cur;
      for (int p = 0; p < 2; ++p) {
        const int other = 1 - p;
        auto saved = meas[p];
        for (int x = 0; x < s.settings(p); ++x) {
          std::vector<CMat> obj(s.outcomes[p][x], CMat::Zero(dims[p], dims[p]));
          for (const auto& t : e.terms) {
            if (t.settings[p] != x) continue;
            const CMat& mo = meas[other][t.settings[other]][t.outcomes[other]];
            const CMat lift = p == 0 ? kron(eye(da), mo) : kron(mo, eye(db));
            obj[t.outcomes[p]] += t.coef * partial_trace(rho * lift, dims, {other});
          }
          auto pr = optimize_povm(obj, opt.solver);
          if (pr.status != Status::Success) continue;
          meas[p][x] = pr.povm;
        }
        const double v = value();
        if (v >= cur) {
          cur = v;
          run.trajectory.push_back(cur);
        } else {
          meas[p] = saved;
        }
      }
      CMat op = CMat::Zero(da * db, da * db);
      for (const auto& t : e.terms)
        op += t.coef * kron(meas[0][t.settings[0]][t.outcomes[0]], meas[1][t.settings[1]][t.outcomes[1]]);
      auto st = optimize_state(op, opt.solver);
      if (st.status == Status::Success) {
        const CMat saved = rho;
        rho = st.povm[0];
        const double v = value();
        if (v >= cur) {
          cur = v;
          run.trajectory.push_back(cur);
        } else {
          rho = saved;
        }
      }
      if (!improved(cur, round_start, opt.rel_tol)) break;
    }
    run.value = cur;
    run.states = {rho};
    for (int p = 0; p < 2; ++p)
      for (const auto& mx : meas[p]) run.measurements.push_back(mx);
    return run;
  };
  return run_restarts(opt, one);
}

SeesawResult seesaw_pm(int d, int preparations, const std::vector<int>& outcomes,
                       const std::vector<PmTerm>& terms, const SeesawOptions& opt,
                       const std::vector<CMat>& fixed_states) {
  if (d < 1 || preparations < 1 || outcomes.empty()) throw invalid_argument("invalid see-saw dimensions");
  for (const auto& t : terms)
    if (t.x < 0 || t.x >= preparations || t.y < 0 || t.y >= static_cast<int>(outcomes.size()) || t.b < 0 ||
        t.b >= outcomes[t.y])
      throw invalid_argument("witness term out of range");
  if (!fixed_states.empty()) {
    if (static_cast<int>(fixed_states.size()) != preparations) throw invalid_argument("one fixed state per preparation");
    for (const auto& s : fixed_states)
      if (s.rows() != d || s.cols() != d) throw dimension_error("fixed state dimension mismatch");
  }
  const int ny = static_cast<int>(outcomes.size());
  auto one = [&](std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    SeesawRun run;
    run.seed = seed;
    std::vector<CMat> states = fixed_states;
    if (states.empty())
      for (int x = 0; x < preparations; ++x) states.push_back(haar_state(d, rng));
    std::vector<std::vector<CMat>> meas;
    for (int y = 0; y < ny; ++y) meas.push_back(random_projective(d, outcomes[y], rng));
    auto value = [&]() {
      double v = 0.0;
      for (const auto& t : terms) v += t.coef * (states[t.x] * meas[t.y][t.b]).trace().real();
      return v;
    };
    double cur = value();
    run.trajectory.push_back(cur);
    bool first = true;
    for (int it = 0; it < opt.max_iterations; ++it) {
      const double round_start = cur;
      auto saved = meas;
      for (int y = 0; y < ny; ++y) {
        std::vector<CMat> obj(outcomes[y], CMat::Zero(d, d));
        for (const auto& t : terms)
          if (t.y == y) obj[t.b] += t.coef * states[t.x];
        auto pr = optimize_povm(obj, opt.solver);
        if (pr.status == Status::Success) meas[y] = pr.povm;
      }
      const double v = value();
      // the first measurement step starts from random measurements, so it is always taken
      if (v >= cur || first) {
        cur = v;
        run.trajectory.push_back(cur);
      } else {
        meas = saved;
      }
      first = false;
      if (fixed_states.empty()) {
        auto saved_states = states;
        for (int x = 0; x < preparations; ++x) {
          CMat op = CMat::Zero(d, d);
          for (const auto& t : terms)
            if (t.x == x) op += t.coef * meas[t.y][t.b];
          auto st = optimize_state(op, opt.solver);
          if (st.status == Status::Success) states[x] = st.povm[0];
        }
        const double w = value();
        if (w >= cur) {
          cur = w;
          run.trajectory.push_back(cur);
        } else {
          states = saved_states;
        }
      }
      if (!improved(cur, round_start, opt.rel_tol)) break;
    }
    run.value = cur;
    run.states = states;
    run.measurements = meas;
    return run;
  };
  return run_restarts(opt, one);
}

}  // namespace qisdp
