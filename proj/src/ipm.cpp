#include "qisdp/ipm.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>

#include "qisdp/error.hpp"

namespace qisdp {

const char* status_name(Status s) {
  switch (s) {
    case Status::Success: return "success";
    case Status::PrimalInfeasible: return "primal infeasible (suspected)";
    case Status::DualInfeasible: return "dual infeasible (suspected)";
    case Status::LackOfProgress: return "lack of progress";
    case Status::IterationLimit: return "iteration limit";
    case Status::NumericalFailure: return "numerical failure";
  }
  return "unknown";
}

void SolverConfig::validate() const {
  if (!(tol_gap > 0 && tol_primal > 0 && tol_dual > 0))
    throw invalid_argument("solver tolerances must be positive");
  if (max_iterations < 1) throw invalid_argument("max_iterations must be >= 1");
  if (!(gamma_step > 0 && gamma_step < 1)) throw invalid_argument("gamma_step must lie in (0,1)");
  if (!(expon >= 1)) throw invalid_argument("expon must be >= 1");
  if (stall_window < 1) throw invalid_argument("stall_window must be >= 1");
}

std::string IterationLog::table() const {
  std::string out;
  char line[256];
  std::snprintf(line, sizeof line, "%4s %7s %7s %10s %10s %10s %14s %9s\n", "it", "pstep",
                "dstep", "p_inf", "d_inf", "gap", "mean_obj", "time");
  out += line;
  auto row = [&](const IterationRecord& r) {
    std::snprintf(line, sizeof line, "%4d %7.3f %7.3f %10.2e %10.2e %10.2e %14.7e %9.3f\n", r.it,
                  r.pstep, r.dstep, r.p_inf, r.d_inf, r.gap, r.mean_obj, r.time);
    out += line;
  };
  row(initial);
  for (const auto& r : records) row(r);
  return out;
}

Vec apply_a(const ConeProblem& p, const SymBlockMat& x) {
  Vec out(p.m());
  for (int i = 0; i < p.m(); ++i) out(i) = frobenius_inner(p.a[i], x);
  return out;
}

SymBlockMat apply_at(const ConeProblem& p, const Vec& y) {
  if (y.size() != p.m()) throw dimension_error("apply_at: y has wrong length");
  SymBlockMat out(p.structure);
  for (int i = 0; i < p.m(); ++i)
    if (y(i) != 0.0) out.axpy(y(i), p.a[i]);
  return out;
}

ConeProblem split_free(const ConeProblem& p) {
  p.check_shapes();
  BlockStructure s = p.structure;
  const int nf = s.free_dim;
  const int nn = s.nonneg_dim;
  s.nonneg_dim = nn + 2 * nf;
  s.free_dim = 0;
  auto conv = [&](const SymBlockMat& m) {
    SymBlockMat o(s);
    o.blocks = m.blocks;
    o.nonneg.head(nn) = m.nonneg;
    o.nonneg.segment(nn, nf) = m.free;
    o.nonneg.segment(nn + nf, nf) = -m.free;
    return o;
  };
  ConeProblem q(s);
  q.name = p.name;
  q.c = conv(p.c);
  for (int i = 0; i < p.m(); ++i) q.a.push_back(conv(p.a[i]));
  q.b = p.b;
  q.labels = p.labels;
  return q;
}

namespace {

using Clock = std::chrono::steady_clock;

void require_no_free(const ConeProblem& p, const char* who) {
  if (p.structure.free_dim != 0)
    throw invalid_argument(std::string(who) + ": free coordinates must be split first");
}

// Which constraints touch each SDP block, and the stacked LP coefficients.
struct ProblemView {
  const ConeProblem& p;
  std::vector<std::vector<int>> touching;
  Mat alp;  // m x L
  Vec clp;

  explicit ProblemView(const ConeProblem& prob) : p(prob) {
    const auto& s = p.structure;
    touching.resize(s.sdp_blocks.size());
    for (std::size_t k = 0; k < s.sdp_blocks.size(); ++k)
      for (int i = 0; i < p.m(); ++i)
        if (p.a[i].blocks[k].cwiseAbs().maxCoeff() > 0.0) touching[k].push_back(i);
    alp.resize(p.m(), s.nonneg_dim);
    for (int i = 0; i < p.m(); ++i) alp.row(i) = p.a[i].nonneg.transpose();
    clp = p.c.nonneg;
  }

  Vec a_of(const SymBlockMat& x) const {
    Vec out = alp * x.nonneg;
    for (std::size_t k = 0; k < touching.size(); ++k)
      for (int i : touching[k]) out(i) += p.a[i].blocks[k].cwiseProduct(x.blocks[k]).sum();
    return out;
  }

  SymBlockMat at_of(const Vec& y) const {
    SymBlockMat out(p.structure);
    for (std::size_t k = 0; k < touching.size(); ++k)
      for (int i : touching[k])
        if (y(i) != 0.0) out.blocks[k] += y(i) * p.a[i].blocks[k];
    out.nonneg = alp.transpose() * y;
    return out;
  }
};

struct Scaling {
  SearchDirection dir = SearchDirection::HKM;
  std::vector<Mat> left, right;  // HKM: X, Z^{-1}; NT: W, W
  std::vector<Mat> zinv;
  Vec lp_d;    // x / z
  Vec lp_zinv;

  SymBlockMat apply(const SymBlockMat& d) const {
    SymBlockMat out(d.structure);
    for (std::size_t k = 0; k < left.size(); ++k)
      out.blocks[k] = symmetrize(left[k] * d.blocks[k] * right[k]);
    out.nonneg = lp_d.cwiseProduct(d.nonneg);
    return out;
  }
};

bool chol_inverse(const Mat& m, Mat& inv) {
  Eigen::LLT<Mat> llt(m);
  if (llt.info() != Eigen::Success) return false;
  inv = llt.solve(Mat::Identity(m.rows(), m.cols()));
  inv = symmetrize(inv);
  return inv.allFinite();
}

bool make_scaling(const Iterate& it, SearchDirection dir, Scaling& sc) {
  sc.dir = dir;
  const std::size_t nb = it.x.blocks.size();
  sc.left.resize(nb);
  sc.right.resize(nb);
  sc.zinv.resize(nb);
  for (std::size_t k = 0; k < nb; ++k) {
    if (!chol_inverse(it.z.blocks[k], sc.zinv[k])) return false;
    if (dir == SearchDirection::HKM) {
      sc.left[k] = it.x.blocks[k];
      sc.right[k] = sc.zinv[k];
    } else {
      Eigen::SelfAdjointEigenSolver<Mat> ex(it.x.blocks[k]);
      if (ex.eigenvalues()(0) <= 0.0) return false;
      const Mat xh = ex.eigenvectors() * ex.eigenvalues().cwiseSqrt().asDiagonal() *
                     ex.eigenvectors().transpose();
      Eigen::SelfAdjointEigenSolver<Mat> em(symmetrize(xh * it.z.blocks[k] * xh));
      if (em.eigenvalues()(0) <= 0.0) return false;
      const Mat mis = em.eigenvectors() *
                      em.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
                      em.eigenvectors().transpose();
      const Mat w = symmetrize(xh * mis * xh);
      sc.left[k] = w;
      sc.right[k] = w;
    }
  }
  if ((it.z.nonneg.array() <= 0.0).any() || (it.x.nonneg.array() <= 0.0).any()) return false;
  sc.lp_zinv = it.z.nonneg.cwiseInverse();
  sc.lp_d = it.x.nonneg.cwiseProduct(sc.lp_zinv);
  return true;
}

Mat build_schur(const ProblemView& v, const Scaling& sc) {
  const int m = v.p.m();
  Mat mm = v.alp * sc.lp_d.asDiagonal() * v.alp.transpose();
  for (std::size_t k = 0; k < v.touching.size(); ++k) {
    const auto& idx = v.touching[k];
    for (std::size_t jj = 0; jj < idx.size(); ++jj) {
      const int j = idx[jj];
      const Mat h = sc.left[k] * v.p.a[j].blocks[k] * sc.right[k];
      for (std::size_t ii = 0; ii <= jj; ++ii) {
        const int i = idx[ii];
        const double val = v.p.a[i].blocks[k].cwiseProduct(h).sum();
        mm(i, j) += val;
        if (i != j) mm(j, i) += val;
      }
    }
  }
  (void)m;
  return symmetrize(mm);
}

class SchurSolver {
 public:
  bool factor(const Mat& m, double rcond_min) {
    m_ = m;
    ldlt_used_ = false;
    if (m.rows() == 0) return true;
    llt_.compute(m);
    if (llt_.info() == Eigen::Success) {
      const Vec d = Mat(llt_.matrixL()).diagonal();
      const double lo = d.minCoeff(), hi = d.maxCoeff();
      if (lo > 0 && (lo * lo) / (hi * hi) >= rcond_min) return true;
    }
    ldlt_used_ = true;
    ldlt_.compute(m);
    if (ldlt_.info() != Eigen::Success) return false;
    const Vec d = ldlt_.vectorD().cwiseAbs();
    return d.size() == 0 || (d.minCoeff() > 0 && std::isfinite(d.maxCoeff()));
  }

  Vec solve(const Vec& r) const {
    if (r.size() == 0) return r;
    Vec x = raw(r);
    const Vec res = r - m_ * x;
    x += raw(res);
    return x;
  }

  bool used_fallback() const { return ldlt_used_; }

 private:
  Vec raw(const Vec& r) const { return ldlt_used_ ? Vec(ldlt_.solve(r)) : Vec(llt_.solve(r)); }

  Mat m_;
  Eigen::LLT<Mat> llt_;
  Eigen::LDLT<Mat> ldlt_;
  bool ldlt_used_ = false;
};

// Solves A(dX) = rp, A^T dy + dZ = rd, dX + T(dZ) = g.
NewtonStep direction_from(const ProblemView& v, const Scaling& sc, const SchurSolver& schur,
                          const Vec& rp, const SymBlockMat& rd, const SymBlockMat& g) {
  NewtonStep s;
  const Vec rhs = rp - v.a_of(g) + v.a_of(sc.apply(rd));
  s.dy = schur.solve(rhs);
  s.dz = rd;
  s.dz -= v.at_of(s.dy);
  s.dx = g;
  s.dx -= sc.apply(s.dz);
  for (auto& b : s.dx.blocks) b = symmetrize(b);
  for (auto& b : s.dz.blocks) b = symmetrize(b);
  return s;
}

// nu Z^{-1} - X - sym(dX dZ Z^{-1}); the correction term is skipped when pred is null.
SymBlockMat centering_rhs(const Iterate& it, const Scaling& sc, double nu, const NewtonStep* pred) {
  SymBlockMat g(it.x.structure);
  for (std::size_t k = 0; k < g.blocks.size(); ++k) {
    Mat b = nu * sc.zinv[k] - it.x.blocks[k];
    if (pred) b -= pred->dx.blocks[k] * pred->dz.blocks[k] * sc.zinv[k];
    g.blocks[k] = symmetrize(b);
  }
  g.nonneg = nu * sc.lp_zinv - it.x.nonneg;
  if (pred) g.nonneg -= pred->dx.nonneg.cwiseProduct(pred->dz.nonneg).cwiseProduct(sc.lp_zinv);
  return g;
}

double block_max_step(const Mat& m, const Mat& dm) {
  if (m.rows() == 0) return std::numeric_limits<double>::infinity();
  Eigen::LLT<Mat> llt(m);
  if (llt.info() != Eigen::Success) throw numerical_error("step length: matrix is not PD");
  const auto l = llt.matrixL();
  const Mat half = l.solve(dm);
  const Mat t = l.solve(Mat(half.transpose()));
  Eigen::SelfAdjointEigenSolver<Mat> es(symmetrize(t), Eigen::EigenvaluesOnly);
  const double lmin = es.eigenvalues()(0);
  if (lmin >= 0.0) return std::numeric_limits<double>::infinity();
  return -1.0 / lmin;
}

double inner_trace(const SymBlockMat& x, const SymBlockMat& z) { return frobenius_inner(x, z); }

int barrier_order(const BlockStructure& s) { return s.sdp_order() + s.nonneg_dim; }

}  // namespace

Iterate cold_start(const ConeProblem& p) {
  p.check_shapes();
  require_no_free(p, "cold_start");
  const auto& s = p.structure;
  Iterate it;
  it.x = SymBlockMat(s);
  it.z = SymBlockMat(s);
  it.y = Vec::Zero(p.m());
  auto factors = [&](double n, auto norm_of_ai, double cnorm) {
    double xi = std::max(10.0, std::sqrt(n));
    double eta = std::max({10.0, std::sqrt(n), cnorm});
    for (int i = 0; i < p.m(); ++i) {
      const double na = norm_of_ai(i);
      xi = std::max(xi, n * (1.0 + std::abs(p.b(i))) / (1.0 + na));
      eta = std::max(eta, na);
    }
    return std::pair{xi, eta};
  };
  for (std::size_t k = 0; k < s.sdp_blocks.size(); ++k) {
    const int n = s.sdp_blocks[k];
    auto [xi, eta] = factors(
        n, [&](int i) { return p.a[i].blocks[k].norm(); }, p.c.blocks[k].norm());
    it.x.blocks[k] = xi * Mat::Identity(n, n);
    it.z.blocks[k] = eta * Mat::Identity(n, n);
  }
  if (s.nonneg_dim > 0) {
    const int n = s.nonneg_dim;
    auto [xi, eta] = factors(
        n, [&](int i) { return p.a[i].nonneg.norm(); }, p.c.nonneg.norm());
    it.x.nonneg.setConstant(xi);
    it.z.nonneg.setConstant(eta);
  }
  const int n = barrier_order(s);
  it.nu = n > 0 ? inner_trace(it.x, it.z) / n : 0.0;
  return it;
}

Residuals residuals(const ConeProblem& p, const Iterate& it) {
  Residuals r;
  r.rp = p.b - apply_a(p, it.x);
  r.rd = p.c;
  r.rd -= apply_at(p, it.y);
  r.rd -= it.z;
  r.p_inf = r.rp.norm() / (1.0 + p.b.norm());
  r.d_inf = r.rd.norm() / (1.0 + p.c.norm());
  return r;
}

NewtonStep newton_direction(const ConeProblem& p, const Iterate& it, double target_nu,
                            SearchDirection dir) {
  require_no_free(p, "newton_direction");
  ProblemView v(p);
  Scaling sc;
  if (!make_scaling(it, dir, sc)) throw numerical_error("newton_direction: iterate is not interior");
  SchurSolver schur;
  if (!schur.factor(build_schur(v, sc), 0.0))
    throw numerical_error("newton_direction: Schur complement factorization failed");
  const Residuals r = residuals(p, it);
  return direction_from(v, sc, schur, r.rp, r.rd, centering_rhs(it, sc, target_nu, nullptr));
}

double step_length(const Mat& m, const Mat& dm) {
  if (m.rows() != dm.rows() || m.cols() != dm.cols())
    throw dimension_error("step_length: shape mismatch");
  return std::min(1.0, block_max_step(symmetrize(m), symmetrize(dm)));
}

double max_step(const SymBlockMat& m, const SymBlockMat& dm) {
  double t = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < m.blocks.size(); ++k)
    t = std::min(t, block_max_step(m.blocks[k], dm.blocks[k]));
  for (Eigen::Index i = 0; i < m.nonneg.size(); ++i)
    if (dm.nonneg(i) < 0.0) t = std::min(t, -m.nonneg(i) / dm.nonneg(i));
  return t;
}

double corrector_nu(const Iterate& it, const NewtonStep& pred, double alpha_p, double beta_p,
                    double exponent) {
  const int n = barrier_order(it.x.structure);
  const double g = inner_trace(it.x, it.z);
  if (n == 0 || g <= 0.0) return 0.0;
  SymBlockMat xn = it.x;
  xn.axpy(alpha_p, pred.dx);
  SymBlockMat zn = it.z;
  zn.axpy(beta_p, pred.dz);
  const double ratio = std::max(0.0, inner_trace(xn, zn) / g);
  return g / n * std::pow(ratio, exponent);
}

double corrector_exponent(double gap, const SolverConfig& cfg) {
  if (gap > 1e-3) return 1.0;
  return std::min(cfg.expon, 1.0 + std::log10(1e-3 / std::max(gap, 1e-300)));
}

Iterate perturb(Iterate it, double gap, double eps_p, double eps_d, double trace_scale) {
  if (gap > 100.0 * eps_p) {
    for (auto& b : it.x.blocks) b.diagonal().array() += 0.01 * trace_scale;
    it.x.nonneg.array() += 0.01 * trace_scale;
  }
  if (eps_p > 100.0 * eps_d) {
    for (auto& b : it.z.blocks) b.diagonal().array() += 0.1 * trace_scale;
    it.z.nonneg.array() += 0.1 * trace_scale;
  }
  return it;
}

SolveResult solve(const ConeProblem& input, const SolverConfig& cfg,
                  const IterateObserver& observer) {
  cfg.validate();
  input.check_shapes();
  require_independent(input);
  const auto t0 = Clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(Clock::now() - t0).count(); };

  const bool has_free = input.structure.free_dim > 0;
  const ConeProblem split = has_free ? split_free(input) : ConeProblem{};
  const ConeProblem& p = has_free ? split : input;
  ProblemView v(p);
  const int order = barrier_order(p.structure);
  const double bnorm = p.b.norm();
  const double cnorm = p.c.norm();

  SolveResult out;
  Iterate it = cold_start(p);
  Status status = Status::IterationLimit;
  int fallbacks = 0;
  std::vector<double> merit;

  auto measure = [&](IterationRecord& rec, Vec& rp, SymBlockMat& rd) {
    rp = p.b - v.a_of(it.x);
    rd = p.c;
    rd -= v.at_of(it.y);
    rd -= it.z;
    rec.p_inf = rp.norm() / (1.0 + bnorm);
    rec.d_inf = rd.norm() / (1.0 + cnorm);
    rec.gap = inner_trace(it.x, it.z);
    rec.primal_obj = frobenius_inner(p.c, it.x);
    rec.dual_obj = p.b.dot(it.y);
    rec.mean_obj = 0.5 * (rec.primal_obj + rec.dual_obj);
    rec.time = elapsed();
  };

  Vec rp;
  SymBlockMat rd;
  IterationRecord rec;
  measure(rec, rp, rd);
  out.log.initial = rec;
  if (observer) observer(it, rec);

  for (int iter = 0;; ++iter) {
    const bool finite = std::isfinite(rec.p_inf) && std::isfinite(rec.d_inf) &&
                        std::isfinite(rec.gap) && std::isfinite(rec.dual_obj);
    if (!finite) {
      status = Status::NumericalFailure;
      break;
    }
    if (rec.p_inf <= cfg.tol_primal && rec.d_inf <= cfg.tol_dual &&
        std::abs(rec.gap) <= cfg.tol_gap) {
      status = Status::Success;
      break;
    }
    if (iter >= 3) {
      if (rec.dual_obj > 0.0) {
        SymBlockMat cert = p.c;
        cert -= rd;  // = A^T y + Z
        if (cert.norm() / rec.dual_obj < cfg.infeasibility_tol) {
          status = Status::PrimalInfeasible;
          break;
        }
      }
      if (rec.primal_obj < 0.0) {
        const Vec ax = p.b - rp;
        if (ax.norm() / (-rec.primal_obj) < cfg.infeasibility_tol) {
          status = Status::DualInfeasible;
          break;
        }
      }
    }
    const double phi = std::max({rec.p_inf / cfg.tol_primal, rec.d_inf / cfg.tol_dual,
                                 std::abs(rec.gap) / cfg.tol_gap});
    merit.push_back(phi);
    const int w = cfg.stall_window;
    if (static_cast<int>(merit.size()) > w &&
        phi > (1.0 - cfg.stall_ratio) * merit[merit.size() - 1 - w]) {
      status = Status::LackOfProgress;
      break;
    }
    if (iter >= cfg.max_iterations) {
      status = Status::IterationLimit;
      break;
    }

    Scaling sc;
    if (!make_scaling(it, cfg.direction, sc)) {
      status = Status::NumericalFailure;
      break;
    }
    SchurSolver schur;
    if (!schur.factor(build_schur(v, sc), cfg.schur_rcond_min)) {
      status = Status::NumericalFailure;
      break;
    }
    if (schur.used_fallback()) ++fallbacks;

    // predictor
    const NewtonStep pred = direction_from(v, sc, schur, rp, rd, centering_rhs(it, sc, 0.0, nullptr));
    double ap, bp;
    try {
      ap = std::min(1.0, cfg.gamma_step * max_step(it.x, pred.dx));
      bp = std::min(1.0, cfg.gamma_step * max_step(it.z, pred.dz));
    } catch (const Error&) {
      status = Status::NumericalFailure;
      break;
    }
    const double e = corrector_exponent(rec.gap, cfg);
    const double nu = std::min(corrector_nu(it, pred, ap, bp, e), rec.gap / std::max(order, 1));

    // corrector
    const NewtonStep corr = direction_from(v, sc, schur, rp, rd, centering_rhs(it, sc, nu, &pred));
    double ac, bc;
    try {
      ac = std::min(1.0, cfg.gamma_step * max_step(it.x, corr.dx));
      bc = std::min(1.0, cfg.gamma_step * max_step(it.z, corr.dz));
    } catch (const Error&) {
      status = Status::NumericalFailure;
      break;
    }
    if (!corr.dy.allFinite() || !std::isfinite(ac) || !std::isfinite(bc)) {
      status = Status::NumericalFailure;
      break;
    }
    it.x.axpy(ac, corr.dx);
    it.y += bc * corr.dy;
    it.z.axpy(bc, corr.dz);
    it.nu = nu;
    it.iteration = iter + 1;
    if (has_free) {
      // shrink both halves of each split pair; A x and <C, X> are unchanged
      const int nn = input.structure.nonneg_dim, nf = input.structure.free_dim;
      auto pos = it.x.nonneg.segment(nn, nf);
      auto neg = it.x.nonneg.segment(nn + nf, nf);
      const Vec shift = 0.8 * pos.cwiseMin(neg);
      pos -= shift;
      neg -= shift;
    }

    if (cfg.perturbation_enabled) {
      IterationRecord tmp;
      Vec rp2;
      SymBlockMat rd2;
      measure(tmp, rp2, rd2);
      it = perturb(std::move(it), tmp.gap, tmp.p_inf, tmp.d_inf, tmp.gap / std::max(order, 1));
    }

    measure(rec, rp, rd);
    rec.it = iter + 1;
    rec.pstep = ac;
    rec.dstep = bc;
    out.log.records.push_back(rec);
    if (observer) observer(it, rec);
  }

  Solution& sol = out.solution;
  sol.status = status;
  sol.y = it.y;
  sol.stats.iterations = it.iteration;
  sol.stats.p_inf = rec.p_inf;
  sol.stats.d_inf = rec.d_inf;
  sol.stats.gap = rec.gap;
  sol.stats.time = elapsed();
  sol.stats.schur_fallbacks = fallbacks;
  if (has_free) {
    const auto& s = input.structure;
    const int nn = s.nonneg_dim, nf = s.free_dim;
    auto back = [&](const SymBlockMat& m, bool average) {
      SymBlockMat o(s);
      o.blocks = m.blocks;
      o.nonneg = m.nonneg.head(nn);
      o.free = m.nonneg.segment(nn, nf) - m.nonneg.segment(nn + nf, nf);
      if (average) o.free *= 0.5;
      return o;
    };
    sol.x = back(it.x, false);
    sol.z = back(it.z, true);
  } else {
    sol.x = it.x;
    sol.z = it.z;
  }
  sol.primal_value = frobenius_inner(input.c, sol.x);
  sol.dual_value = input.b.dot(sol.y);
  return out;
}

}  // namespace qisdp
