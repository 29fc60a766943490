#include "qisdp/modeling.hpp"

#include <Eigen/QR>
#include <algorithm>
#include <cmath>
#include <set>

#include "qisdp/error.hpp"

namespace qisdp {

const char* to_string(Structure s) {
  switch (s) {
    case Structure::Full: return "full";
    case Structure::Symmetric: return "symmetric";
    case Structure::Hermitian: return "hermitian";
    case Structure::Diagonal: return "diagonal";
    case Structure::Skew: return "skew";
  }
  return "?";
}

const char* to_string(Field f) { return f == Field::Real ? "real" : "complex"; }

Structure structure_from_string(const std::string& s) {
  if (s == "full") return Structure::Full;
  if (s == "symmetric") return Structure::Symmetric;
  if (s == "hermitian") return Structure::Hermitian;
  if (s == "diagonal") return Structure::Diagonal;
  if (s == "skew") return Structure::Skew;
  throw invalid_argument("unknown variable structure '" + s + "'");
}

Field field_from_string(const std::string& s) {
  if (s == "real") return Field::Real;
  if (s == "complex") return Field::Complex;
  throw invalid_argument("unknown variable field '" + s + "'");
}

int parameter_count(int rows, int cols, Structure s, Field f) {
  if (rows < 1 || cols < 1) throw invalid_argument("variable shape must be positive");
  const bool square = rows == cols;
  const int mult = f == Field::Complex ? 2 : 1;
  switch (s) {
    case Structure::Full: return mult * rows * cols;
    case Structure::Symmetric:
      if (!square) throw invalid_argument("symmetric variables must be square");
      return mult * rows * (rows + 1) / 2;
    case Structure::Hermitian:
      if (!square) throw invalid_argument("hermitian variables must be square");
      if (f != Field::Complex) throw invalid_argument("hermitian variables must be complex");
      return rows * rows;
    case Structure::Diagonal:
      if (!square) throw invalid_argument("diagonal variables must be square");
      return mult * rows;
    case Structure::Skew:
      if (!square) throw invalid_argument("skew variables must be square");
      return mult * rows * (rows - 1) / 2;
  }
  throw invalid_argument("invalid structure");
}

// ---------------------------------------------------------------- ScalarExpr

ScalarExpr ScalarExpr::param(int k, double coef) {
  ScalarExpr e;
  e.terms[k] = coef;
  return e;
}

ScalarExpr& ScalarExpr::operator+=(const ScalarExpr& o) {
  constant += o.constant;
  for (const auto& [k, v] : o.terms) terms[k] += v;
  return *this;
}

ScalarExpr& ScalarExpr::operator-=(const ScalarExpr& o) {
  constant -= o.constant;
  for (const auto& [k, v] : o.terms) terms[k] -= v;
  return *this;
}

ScalarExpr& ScalarExpr::operator*=(double s) {
  constant *= s;
  for (auto& [k, v] : terms) v *= s;
  return *this;
}

double ScalarExpr::evaluate(const Vec& p) const {
  double v = constant;
  for (const auto& [k, c] : terms) {
    if (k < 0 || k >= p.size()) throw dimension_error("parameter index out of range");
    v += c * p(k);
  }
  return v;
}

ScalarExpr operator+(ScalarExpr a, const ScalarExpr& b) { return a += b; }
ScalarExpr operator-(ScalarExpr a, const ScalarExpr& b) { return a -= b; }
ScalarExpr operator-(ScalarExpr a) { return a *= -1.0; }
ScalarExpr operator*(double s, ScalarExpr a) { return a *= s; }

// ------------------------------------------------------------------- MatExpr

MatExpr MatExpr::constant_of(const CMat& m) {
  MatExpr e(static_cast<int>(m.rows()), static_cast<int>(m.cols()));
  e.constant = m;
  return e;
}

namespace {
void same_shape(const MatExpr& a, int r, int c) {
  if (a.rows != r || a.cols != c) throw dimension_error("matrix expression shape mismatch");
}
}  // namespace

MatExpr& MatExpr::operator+=(const MatExpr& o) {
  same_shape(*this, o.rows, o.cols);
  constant += o.constant;
  for (const auto& [k, v] : o.terms) {
    auto it = terms.find(k);
    if (it == terms.end()) terms.emplace(k, v);
    else it->second += v;
  }
  return *this;
}

MatExpr& MatExpr::operator-=(const MatExpr& o) {
  same_shape(*this, o.rows, o.cols);
  constant -= o.constant;
  for (const auto& [k, v] : o.terms) {
    auto it = terms.find(k);
    if (it == terms.end()) terms.emplace(k, -v);
    else it->second -= v;
  }
  return *this;
}

MatExpr& MatExpr::operator*=(double s) {
  constant *= s;
  for (auto& [k, v] : terms) v *= s;
  return *this;
}

MatExpr& MatExpr::operator+=(const CMat& m) {
  same_shape(*this, static_cast<int>(m.rows()), static_cast<int>(m.cols()));
  constant += m;
  return *this;
}

MatExpr& MatExpr::operator-=(const CMat& m) {
  same_shape(*this, static_cast<int>(m.rows()), static_cast<int>(m.cols()));
  constant -= m;
  return *this;
}

MatExpr MatExpr::map(const std::function<CMat(const CMat&)>& f) const {
  MatExpr out = constant_of(f(constant));
  for (const auto& [k, v] : terms) {
    CMat t = f(v);
    if (t.rows() != out.rows || t.cols() != out.cols)
      throw dimension_error("linear map changed shape inconsistently");
    out.terms.emplace(k, std::move(t));
  }
  return out;
}

MatExpr MatExpr::adjoint() const {
  return map([](const CMat& m) { return CMat(m.adjoint()); });
}

ScalarExpr MatExpr::trace_re() const {
  if (rows != cols) throw dimension_error("trace of a non-square expression");
  ScalarExpr s(constant.trace().real());
  for (const auto& [k, v] : terms) {
    const double t = v.trace().real();
    if (t != 0.0) s.terms[k] += t;
  }
  return s;
}

ScalarExpr MatExpr::entry_re(int i, int j) const {
  ScalarExpr s(constant(i, j).real());
  for (const auto& [k, v] : terms)
    if (v(i, j).real() != 0.0) s.terms[k] += v(i, j).real();
  return s;
}

ScalarExpr MatExpr::entry_im(int i, int j) const {
  ScalarExpr s(constant(i, j).imag());
  for (const auto& [k, v] : terms)
    if (v(i, j).imag() != 0.0) s.terms[k] += v(i, j).imag();
  return s;
}

CMat MatExpr::evaluate(const Vec& p) const {
  CMat out = constant;
  for (const auto& [k, v] : terms) {
    if (k < 0 || k >= p.size()) throw dimension_error("parameter index out of range");
    out += p(k) * v;
  }
  return out;
}

bool MatExpr::is_real(double tol) const {
  auto ok = [&](const CMat& m) { return m.size() == 0 || m.imag().cwiseAbs().maxCoeff() <= tol; };
  if (!ok(constant)) return false;
  for (const auto& [k, v] : terms)
    if (!ok(v)) return false;
  return true;
}

MatExpr operator+(MatExpr a, const MatExpr& b) { return a += b; }
MatExpr operator-(MatExpr a, const MatExpr& b) { return a -= b; }
MatExpr operator*(double s, MatExpr a) { return a *= s; }

MatExpr operator*(const CMat& a, const MatExpr& m) {
  if (a.cols() != m.rows) throw dimension_error("matrix product shape mismatch");
  return m.map([&](const CMat& v) { return CMat(a * v); });
}

MatExpr operator*(const MatExpr& m, const CMat& a) {
  if (m.cols != a.rows()) throw dimension_error("matrix product shape mismatch");
  return m.map([&](const CMat& v) { return CMat(v * a); });
}

MatExpr kron(const CMat& a, const MatExpr& m) {
  return m.map([&](const CMat& v) { return kron(a, v); });
}

MatExpr kron(const MatExpr& m, const CMat& a) {
  return m.map([&](const CMat& v) { return kron(v, a); });
}

ScalarExpr re_trace_product(const CMat& a, const MatExpr& m) {
  if (a.cols() != m.rows || a.rows() != m.cols) throw dimension_error("trace product shape mismatch");
  auto tr = [&](const CMat& v) { return (a.transpose().array() * v.array()).sum().real(); };
  ScalarExpr s(tr(m.constant));
  for (const auto& [k, v] : m.terms)
    if (double t = tr(v); t != 0.0) s.terms[k] += t;
  return s;
}

MatExpr clean(const MatExpr& e, double threshold) {
  if (threshold < 0) throw invalid_argument("clean: threshold must be nonnegative");
  MatExpr out = MatExpr::constant_of(e.constant);
  for (const auto& [k, v] : e.terms) {
    const double mx = v.size() ? v.cwiseAbs().maxCoeff() : 0.0;
    if (!(mx < threshold)) out.terms.emplace(k, v);
  }
  return out;
}

// --------------------------------------------------------------------- Model

VarDecl Model::declare(const std::string& name, int rows, int cols, Structure s, Field f) {
  VarDecl v;
  v.id = static_cast<int>(vars_.size());
  v.name = name.empty() ? "v" + std::to_string(v.id) : name;
  v.rows = rows;
  v.cols = cols;
  v.structure = s;
  v.field = f;
  v.param_count = parameter_count(rows, cols, s, f);
  v.first_param = num_params_;
  num_params_ += v.param_count;
  vars_.push_back(v);
  return v;
}

const VarDecl& Model::var(const std::string& name) const {
  for (const auto& v : vars_)
    if (v.name == name) return v;
  throw model_error("unknown variable '" + name + "'");
}

MatExpr Model::expr(const VarDecl& v) const {
  if (v.id < 0 || v.id >= static_cast<int>(vars_.size()) || vars_[v.id].first_param != v.first_param)
    throw model_error("variable is not declared in this model");
  const int r = v.rows, c = v.cols;
  MatExpr e(r, c);
  int k = v.first_param;
  const cplx I(0.0, 1.0);
  auto unit = [&](int i, int j, cplx val) {
    CMat m = CMat::Zero(r, c);
    m(i, j) = val;
    return m;
  };
  auto add = [&](CMat m) { e.terms.emplace(k++, std::move(m)); };
  const bool cx = v.field == Field::Complex;
  switch (v.structure) {
    case Structure::Full:
      for (int pass = 0; pass < (cx ? 2 : 1); ++pass)
        for (int j = 0; j < c; ++j)
          for (int i = 0; i < r; ++i) add(unit(i, j, pass ? I : cplx(1.0)));
      break;
    case Structure::Symmetric:
      for (int pass = 0; pass < (cx ? 2 : 1); ++pass)
        for (int j = 0; j < c; ++j)
          for (int i = 0; i <= j; ++i) {
            const cplx s = pass ? I : cplx(1.0);
            CMat m = unit(i, j, s);
            m(j, i) = s;
            add(m);
          }
      break;
    case Structure::Hermitian:
      for (int i = 0; i < r; ++i) add(unit(i, i, 1.0));
      for (int j = 0; j < c; ++j)
        for (int i = 0; i < j; ++i) {
          CMat re = unit(i, j, 1.0);
          re(j, i) = 1.0;
          add(re);
          CMat im = unit(i, j, I);
          im(j, i) = -I;
          add(im);
        }
      break;
    case Structure::Diagonal:
      for (int pass = 0; pass < (cx ? 2 : 1); ++pass)
        for (int i = 0; i < r; ++i) add(unit(i, i, pass ? I : cplx(1.0)));
      break;
    case Structure::Skew:
      for (int pass = 0; pass < (cx ? 2 : 1); ++pass)
        for (int j = 0; j < c; ++j)
          for (int i = 0; i < j; ++i) {
            const cplx s = pass ? I : cplx(1.0);
            CMat m = unit(i, j, s);
            m(j, i) = -s;
            add(m);
          }
      break;
  }
  return e;
}

ScalarExpr Model::param(int k) const {
  if (k < 0 || k >= num_params_) throw model_error("parameter index out of range");
  return ScalarExpr::param(k);
}

ScalarExpr Model::value(const VarDecl& v) const {
  if (v.rows != 1 || v.cols != 1 || v.field != Field::Real)
    throw model_error("value() requires a real 1x1 variable");
  return ScalarExpr::param(v.first_param);
}

void Model::check_expr(const ScalarExpr& e) const {
  for (const auto& [k, v] : e.terms)
    if (k < 0 || k >= num_params_) throw model_error("expression references an undeclared parameter");
}

void Model::check_expr(const MatExpr& e) const {
  for (const auto& [k, v] : e.terms)
    if (k < 0 || k >= num_params_) throw model_error("expression references an undeclared parameter");
}

void Model::add_psd(const MatExpr& e, const std::string& label) {
  if (e.rows != e.cols) throw model_error("LMI expression must be square");
  check_expr(e);
  lmis_.push_back({e, label, -1});
}

void Model::add_psd(const VarDecl& v, const std::string& label) {
  if (v.rows != v.cols) throw model_error("PSD variable must be square");
  lmis_.push_back({expr(v), label.empty() ? v.name + " >= 0" : label, v.id});
}

void Model::add_nonneg(const ScalarExpr& e, const std::string& label) {
  check_expr(e);
  MatExpr m(1, 1);
  m.constant(0, 0) = e.constant;
  for (const auto& [k, v] : e.terms) m.terms.emplace(k, CMat::Constant(1, 1, v));
  lmis_.push_back({m, label, -1});
}

void Model::add_equality(const ScalarExpr& e, const std::string& label) {
  check_expr(e);
  equalities_.push_back({e, label});
}

void Model::minimize(const ScalarExpr& e) { set_objective(e, false); }
void Model::maximize(const ScalarExpr& e) { set_objective(e, true); }

void Model::set_objective(const ScalarExpr& e, bool maximize) {
  check_expr(e);
  maximize_ = maximize;
  objective_ = maximize ? -e : e;
}

void Model::add_lmi(Lmi l) {
  if (l.expr.rows != l.expr.cols) throw model_error("LMI expression must be square");
  check_expr(l.expr);
  if (l.direct_var >= static_cast<int>(vars_.size())) throw model_error("LMI references unknown variable");
  lmis_.push_back(std::move(l));
}

// ------------------------------------------------------------------ compile

namespace {

struct Lowered {
  int size = 0;
  bool embedded = false;
  Mat constant;
  std::map<int, Mat> terms;  // active params only
};

Mat lower_one(const CMat& m, bool embed) {
  if (embed) return embed_hermitian(m, 1e-9);
  return symmetrize(m.real());
}

void check_hermitian(const CMat& m, int lmi_index) {
  const double scale = std::max(1.0, m.size() ? m.cwiseAbs().maxCoeff() : 0.0);
  if (m.size() && (m - m.adjoint()).cwiseAbs().maxCoeff() > 1e-9 * scale)
    throw model_error("LMI " + std::to_string(lmi_index) + " is not Hermitian");
}

bool conjugation_invariant(const Model& m, std::vector<bool>& active) {
  const int np = m.num_params();
  std::vector<int> kind(np, 0);  // 0 unknown, 1 real, 2 imaginary, 3 mixed
  auto mark = [&](int k, int t) {
    if (kind[k] == 0) kind[k] = t;
    else if (kind[k] != t) kind[k] = 3;
  };
  for (const auto& l : m.lmis()) {
    if (l.expr.constant.size() && l.expr.constant.imag().cwiseAbs().maxCoeff() > 0) return false;
    for (const auto& [k, v] : l.expr.terms) {
      const bool has_re = v.real().cwiseAbs().maxCoeff() > 0;
      const bool has_im = v.imag().cwiseAbs().maxCoeff() > 0;
      if (has_re && has_im) return false;
      if (has_re) mark(k, 1);
      if (has_im) mark(k, 2);
    }
  }
  for (int k = 0; k < np; ++k)
    if (kind[k] == 3) return false;
  auto no_imag_terms = [&](const ScalarExpr& e) {
    for (const auto& [k, v] : e.terms)
      if (v != 0.0 && kind[k] == 2) return false;
    return true;
  };
  if (!no_imag_terms(m.objective())) return false;
  for (const auto& e : m.equalities())
    if (!no_imag_terms(e.expr)) return false;
  for (int k = 0; k < np; ++k) active[k] = kind[k] != 2;
  return true;
}

std::vector<Lowered> lower_lmis(const Model& m, const std::vector<bool>& active) {
  std::vector<Lowered> out;
  int idx = 0;
  for (const auto& l : m.lmis()) {
    check_hermitian(l.expr.constant, idx);
    bool real = l.expr.constant.size() == 0 || l.expr.constant.imag().cwiseAbs().maxCoeff() == 0.0;
    for (const auto& [k, v] : l.expr.terms) {
      check_hermitian(v, idx);
      if (active[k] && v.imag().cwiseAbs().maxCoeff() != 0.0) real = false;
    }
    Lowered lw;
    lw.embedded = !real;
    lw.size = real ? l.expr.rows : 2 * l.expr.rows;
    lw.constant = lower_one(l.expr.constant, lw.embedded);
    for (const auto& [k, v] : l.expr.terms)
      if (active[k]) {
        Mat t = lower_one(v, lw.embedded);
        if (t.cwiseAbs().maxCoeff() != 0.0) lw.terms.emplace(k, std::move(t));
      }
    out.push_back(std::move(lw));
    ++idx;
  }
  return out;
}

void check_usage(const Model& m, const std::vector<bool>& active,
                 const std::vector<bool>& used) {
  for (int k = 0; k < m.num_params(); ++k) {
    if (!active[k] || used[k]) continue;
    auto it = m.objective().terms.find(k);
    if (it != m.objective().terms.end() && it->second != 0.0)
      throw model_error("parameter " + std::to_string(k) +
                        " is unconstrained but enters the objective: model is unbounded");
    throw model_error("parameter " + std::to_string(k) + " does not appear in any constraint");
  }
}

// Eliminates E p + c = 0 using a column-pivoted QR factorization:
// p = p0 + N t with N spanning the null space of E.
void eliminate(const Mat& e, const Vec& c, Vec& p0, Mat& n) {
  const Eigen::Index np = e.cols();
  Eigen::ColPivHouseholderQR<Mat> qr(e);
  qr.setThreshold(1e-12);
  const Eigen::Index r = qr.rank();
  const Mat rfull = qr.matrixR().topRows(r).template triangularView<Eigen::Upper>();
  const Mat r1 = rfull.leftCols(r);
  const Mat r2 = rfull.rightCols(np - r);
  const Vec qtc = qr.householderQ().transpose() * c;
  if (qtc.size() > r && qtc.tail(qtc.size() - r).norm() > 1e-9 * (1.0 + c.norm()))
    throw model_error("equality constraints are inconsistent");
  const auto r1u = r1.topLeftCorner(r, r).template triangularView<Eigen::Upper>();
  const Vec pb = r1u.solve(Vec(-qtc.head(r)));
  const Mat nb = -r1u.solve(r2);
  Vec q0 = Vec::Zero(np);
  Mat qn = Mat::Zero(np, np - r);
  q0.head(r) = pb;
  qn.topRows(r) = nb;
  qn.bottomRows(np - r).setIdentity();
  const auto& perm = qr.colsPermutation();
  p0 = perm * q0;
  n = perm * qn;
  // snap tiny round-off so structurally sparse bases stay sparse
  for (Eigen::Index k = 0; k < n.size(); ++k)
    if (std::abs(n.data()[k]) < 1e-14) n.data()[k] = 0.0;
  for (Eigen::Index k = 0; k < p0.size(); ++k)
    if (std::abs(p0(k)) < 1e-14) p0(k) = 0.0;
}

Compiled compile_dual(const Model& m, const CompileOptions& opt, const std::vector<bool>& active,
                      const std::vector<Lowered>& low) {
  const int np = m.num_params();
  const int ne = static_cast<int>(m.equalities().size());
  Compiled out;
  Recovery& rec = out.recovery;
  rec.framing = Framing::Dual;
  rec.mode = opt.equalities;
  rec.num_params = np;

  BlockStructure s;
  rec.lmi_slots.resize(low.size());
  int nonneg = 0;
  for (std::size_t l = 0; l < low.size(); ++l) {
    if (low[l].size == 1) {
      rec.lmi_slots[l].nonneg = nonneg++;
    } else {
      rec.lmi_slots[l].block = static_cast<int>(s.sdp_blocks.size());
      rec.lmi_slots[l].embedded = low[l].embedded;
      s.sdp_blocks.push_back(low[l].size);
    }
  }
  const int eq_nonneg_start = nonneg;
  if (opt.equalities == EqualityMode::TwoInequalities) nonneg += 2 * ne;
  s.nonneg_dim = nonneg;
  s.free_dim = opt.equalities == EqualityMode::FreeSplit ? ne : 0;

  // parameter-space images: C part and A part per parameter
  std::vector<int> act;
  for (int k = 0; k < np; ++k)
    if (active[k]) act.push_back(k);
  const int na = static_cast<int>(act.size());
  std::vector<SymBlockMat> apar(na, SymBlockMat(s));  // z = C - sum p_k A_k
  SymBlockMat c(s);
  std::vector<int> pos(np, -1);
  for (int j = 0; j < na; ++j) pos[act[j]] = j;

  std::vector<bool> used(np, false);
  for (std::size_t l = 0; l < low.size(); ++l) {
    const auto& slot = rec.lmi_slots[l];
    if (slot.block >= 0) c.blocks[slot.block] = low[l].constant;
    else c.nonneg(slot.nonneg) = low[l].constant(0, 0);
    for (const auto& [k, v] : low[l].terms) {
      used[k] = true;
      if (slot.block >= 0) apar[pos[k]].blocks[slot.block] = -v;
      else apar[pos[k]].nonneg(slot.nonneg) = -v(0, 0);
    }
  }
  for (int e = 0; e < ne; ++e) {
    const auto& ex = m.equalities()[e].expr;
    for (const auto& [k, v] : ex.terms)
      if (active[k] && v != 0.0) used[k] = true;
    if (opt.equalities == EqualityMode::FreeSplit) {
      c.free(e) = ex.constant;
      for (const auto& [k, v] : ex.terms)
        if (active[k]) apar[pos[k]].free(e) = -v;
    } else if (opt.equalities == EqualityMode::TwoInequalities) {
      const int a = eq_nonneg_start + 2 * e;
      c.nonneg(a) = ex.constant + opt.epsilon;
      c.nonneg(a + 1) = -ex.constant + opt.epsilon;
      for (const auto& [k, v] : ex.terms)
        if (active[k]) {
          apar[pos[k]].nonneg(a) = -v;
          apar[pos[k]].nonneg(a + 1) = v;
        }
    }
  }
  check_usage(m, active, used);

  Vec obj = Vec::Zero(na);
  for (const auto& [k, v] : m.objective().terms)
    if (active[k]) obj(pos[k]) = v;

  rec.obj_constant = m.objective().constant;
  rec.sense = m.maximizing() ? -1.0 : 1.0;
  rec.eq_rows.assign(ne, -1);
  for (int e = 0; e < ne; ++e) {
    if (opt.equalities == EqualityMode::FreeSplit) rec.eq_rows[e] = e;
    if (opt.equalities == EqualityMode::TwoInequalities) rec.eq_rows[e] = eq_nonneg_start + 2 * e;
  }

  ConeProblem& p = out.problem;
  p = ConeProblem(s);
  Mat sel = Mat::Zero(np, na);
  for (int j = 0; j < na; ++j) sel(act[j], j) = 1.0;

  if (opt.equalities == EqualityMode::Eliminate && ne > 0) {
    Mat e = Mat::Zero(ne, na);
    Vec ce(ne);
    for (int i = 0; i < ne; ++i) {
      const auto& ex = m.equalities()[i].expr;
      ce(i) = ex.constant;
      for (const auto& [k, v] : ex.terms)
        if (active[k]) e(i, pos[k]) += v;
    }
    Vec q0;
    Mat nb;
    eliminate(e, ce, q0, nb);
    for (int j = 0; j < na; ++j)
      if (q0(j) != 0.0) c.axpy(-q0(j), apar[j]);
    p.c = c;
    for (Eigen::Index t = 0; t < nb.cols(); ++t) {
      SymBlockMat a(s);
      double bt = 0.0;
      for (int j = 0; j < na; ++j)
        if (nb(j, t) != 0.0) {
          a.axpy(nb(j, t), apar[j]);
          bt -= nb(j, t) * obj(j);
        }
      p.add_constraint(std::move(a), bt);
    }
    rec.obj_constant += obj.dot(q0);
    rec.p0 = sel * q0;
    rec.basis = sel * nb;
  } else {
    p.c = c;
    for (int j = 0; j < na; ++j)
      p.add_constraint(std::move(apar[j]), -obj(j), "p" + std::to_string(act[j]));
    rec.p0 = Vec::Zero(np);
    rec.basis = sel;
  }
  return out;
}

SymBlockMat unit_sym(const BlockStructure& s, int block, int i, int j, double v) {
  SymBlockMat m(s);
  if (i == j) m.blocks[block](i, i) = v;
  else {
    m.blocks[block](i, j) = 0.5 * v;
    m.blocks[block](j, i) = 0.5 * v;
  }
  return m;
}

Compiled compile_primal(const Model& m, const std::vector<bool>& active,
                        const std::vector<Lowered>& low) {
  const int np = m.num_params();
  Compiled out;
  Recovery& rec = out.recovery;
  rec.framing = Framing::Primal;
  rec.mode = EqualityMode::FreeSplit;
  rec.num_params = np;

  // direct variables become X blocks
  std::vector<int> direct_block(m.vars().size(), -1);
  std::vector<bool> is_direct_lmi(low.size(), false);
  BlockStructure s;
  rec.lmi_slots.resize(low.size());
  for (std::size_t l = 0; l < low.size(); ++l) {
    const int vid = m.lmis()[l].direct_var;
    if (vid < 0 || direct_block[vid] >= 0) continue;
    const auto& v = m.vars()[vid];
    const bool ok = (v.structure == Structure::Symmetric && v.field == Field::Real) ||
                    v.structure == Structure::Hermitian;
    if (!ok || low[l].size < 2) continue;
    direct_block[vid] = static_cast<int>(s.sdp_blocks.size());
    is_direct_lmi[l] = true;
    rec.lmi_slots[l] = {direct_block[vid], -1, low[l].embedded, true};
    s.sdp_blocks.push_back(low[l].size);
  }
  std::vector<bool> in_direct(np, false);
  for (const auto& v : m.vars())
    if (direct_block[v.id] >= 0)
      for (int k = 0; k < v.param_count; ++k) in_direct[v.first_param + k] = true;

  int nonneg = 0;
  for (std::size_t l = 0; l < low.size(); ++l) {
    if (is_direct_lmi[l]) continue;
    if (low[l].size == 1) {
      rec.lmi_slots[l] = {-1, nonneg++, false, true};
    } else {
      rec.lmi_slots[l] = {static_cast<int>(s.sdp_blocks.size()), -1, low[l].embedded, true};
      s.sdp_blocks.push_back(low[l].size);
    }
  }
  s.nonneg_dim = nonneg;
  std::vector<int> free_slot(np, -1);
  int nfree = 0;
  for (int k = 0; k < np; ++k)
    if (active[k] && !in_direct[k]) free_slot[k] = nfree++;
  s.free_dim = nfree;

  // p_k = <P_k, x>
  rec.param_maps.assign(np, SymBlockMat(s));
  rec.param_offset = Vec::Zero(np);
  for (const auto& v : m.vars()) {
    const int blk = direct_block[v.id];
    if (blk < 0) continue;
    const int n = v.rows;
    int k = v.first_param;
    const bool emb = s.sdp_blocks[blk] == 2 * n;
    if (v.structure == Structure::Symmetric) {
      for (int j = 0; j < n; ++j)
        for (int i = 0; i <= j; ++i) rec.param_maps[k++] = unit_sym(s, blk, i, j, 1.0);
      continue;
    }
    for (int i = 0; i < n; ++i) {
      SymBlockMat pm = unit_sym(s, blk, i, i, 1.0);
      if (emb) pm += unit_sym(s, blk, n + i, n + i, 1.0);
      rec.param_maps[k++] = pm;
    }
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < j; ++i) {
        SymBlockMat re = unit_sym(s, blk, i, j, 1.0);
        if (emb) re += unit_sym(s, blk, n + i, n + j, 1.0);
        rec.param_maps[k++] = re;
        SymBlockMat im(s);
        if (emb) {
          im = unit_sym(s, blk, n + i, j, 1.0);
          im -= unit_sym(s, blk, i, n + j, 1.0);
        }
        rec.param_maps[k++] = im;
      }
  }
  for (int k = 0; k < np; ++k)
    if (free_slot[k] >= 0) rec.param_maps[k].free(free_slot[k]) = 1.0;

  std::vector<bool> used(np, false);
  for (int k = 0; k < np; ++k) used[k] = in_direct[k];

  ConeProblem& p = out.problem;
  p = ConeProblem(s);
  for (std::size_t l = 0; l < low.size(); ++l) {
    if (is_direct_lmi[l]) continue;
    const auto& slot = rec.lmi_slots[l];
    const int sz = low[l].size;
    for (int j = 0; j < sz; ++j)
      for (int i = 0; i <= j; ++i) {
        SymBlockMat a = slot.block >= 0 ? unit_sym(s, slot.block, i, j, 1.0) : SymBlockMat(s);
        if (slot.block < 0) a.nonneg(slot.nonneg) = 1.0;
        for (const auto& [k, v] : low[l].terms)
          if (v(i, j) != 0.0) {
            a.axpy(-v(i, j), rec.param_maps[k]);
            used[k] = true;
          }
        p.add_constraint(std::move(a), low[l].constant(i, j),
                         "lmi" + std::to_string(l) + "(" + std::to_string(i) + "," +
                             std::to_string(j) + ")");
      }
  }
  const int ne = static_cast<int>(m.equalities().size());
  rec.eq_rows.assign(ne, -1);
  for (int e = 0; e < ne; ++e) {
    const auto& ex = m.equalities()[e].expr;
    SymBlockMat a(s);
    for (const auto& [k, v] : ex.terms)
      if (active[k] && v != 0.0) {
        a.axpy(v, rec.param_maps[k]);
        used[k] = true;
      }
    rec.eq_rows[e] = p.m();
    const auto& label = m.equalities()[e].label;
    p.add_constraint(std::move(a), -ex.constant, label.empty() ? "eq" + std::to_string(e) : label);
  }
  check_usage(m, active, used);
  for (const auto& [k, v] : m.objective().terms)
    if (active[k]) p.c.axpy(v, rec.param_maps[k]);
  rec.obj_constant = m.objective().constant;
  rec.sense = m.maximizing() ? -1.0 : 1.0;
  return out;
}

}  // namespace

Compiled compile(const Model& m, const CompileOptions& opt) {
  if (m.lmis().empty() && m.equalities().empty()) throw model_error("model has no constraints");
  if (opt.equalities == EqualityMode::TwoInequalities && !(opt.epsilon > 0))
    throw invalid_argument("two-inequalities epsilon must be positive");
  std::vector<bool> active(m.num_params(), true);
  bool shortcut = false;
  if (opt.real_shortcut) {
    std::vector<bool> act(m.num_params(), true);
    if (conjugation_invariant(m, act)) {
      active = act;
      shortcut = true;
    }
  }
  const auto low = lower_lmis(m, active);
  Compiled c = opt.framing == Framing::Dual ? compile_dual(m, opt, active, low)
                                            : compile_primal(m, active, low);
  c.recovery.shortcut_applied = shortcut;
  return c;
}

// ------------------------------------------------------------------ Recovery

Vec Recovery::params(const Solution& s) const {
  if (framing == Framing::Dual) return p0 + basis * s.y;
  Vec p(num_params);
  for (int k = 0; k < num_params; ++k) p(k) = frobenius_inner(param_maps[k], s.x) + param_offset(k);
  return p;
}

double Recovery::objective(const Solution& s) const {
  const double f = framing == Framing::Dual ? obj_constant - s.dual_value
                                            : obj_constant + s.primal_value;
  return sense * f;
}

double Recovery::bound(const Solution& s) const {
  const double f = framing == Framing::Dual ? obj_constant - s.primal_value
                                            : obj_constant + s.dual_value;
  return sense * f;
}

Vec Recovery::equality_multipliers(const Solution& s) const {
  const int ne = static_cast<int>(eq_rows.size());
  Vec out(ne);
  if (framing == Framing::Primal) {
    for (int e = 0; e < ne; ++e) out(e) = s.y(eq_rows[e]);
    return out;
  }
  if (mode == EqualityMode::Eliminate) return Vec();
  for (int e = 0; e < ne; ++e) {
    if (mode == EqualityMode::FreeSplit) out(e) = s.x.free(eq_rows[e]);
    else out(e) = s.x.nonneg(eq_rows[e]) - s.x.nonneg(eq_rows[e] + 1);
  }
  return out;
}

CMat Recovery::lmi_multiplier(const Solution& s, int k) const {
  if (k < 0 || k >= static_cast<int>(lmi_slots.size())) throw invalid_argument("LMI index out of range");
  const auto& slot = lmi_slots[k];
  const SymBlockMat& src = framing == Framing::Dual ? s.x : s.z;
  if (slot.block < 0) return CMat::Constant(1, 1, src.nonneg(slot.nonneg));
  const Mat& b = src.blocks[slot.block];
  if (slot.embedded) return recover_complex(b);
  return b.cast<cplx>();
}

ModelResult solve_model(const Model& m, const CompileOptions& copt, const SolverConfig& scfg) {
  ModelResult r;
  r.compiled = compile(m, copt);
  auto res = solve(r.compiled.problem, scfg);
  r.solution = std::move(res.solution);
  r.log = std::move(res.log);
  r.params = r.compiled.recovery.params(r.solution);
  r.value = r.compiled.recovery.objective(r.solution);
  return r;
}

}  // namespace qisdp
