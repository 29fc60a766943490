#include "qisdp/cone.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "qisdp/error.hpp"

namespace qisdp {

void BlockStructure::validate() const {
  for (int s : sdp_blocks)
    if (s < 1) throw dimension_error("SDP block sizes must be >= 1");
  if (nonneg_dim < 0 || free_dim < 0)
    throw dimension_error("nonneg and free dimensions must be >= 0");
}

std::size_t BlockStructure::packed_dim() const {
  std::size_t n = 0;
  for (int s : sdp_blocks) n += static_cast<std::size_t>(s) * (s + 1) / 2;
  return n + nonneg_dim + free_dim;
}

int BlockStructure::sdp_order() const {
  int n = 0;
  for (int s : sdp_blocks) n += s;
  return n;
}

SymBlockMat::SymBlockMat(const BlockStructure& s) : structure(s) {
  s.validate();
  blocks.reserve(s.sdp_blocks.size());
  for (int k : s.sdp_blocks) blocks.push_back(Mat::Zero(k, k));
  nonneg = Vec::Zero(s.nonneg_dim);
  free = Vec::Zero(s.free_dim);
}

SymBlockMat::SymBlockMat(const BlockStructure& s, std::vector<Mat> bl, Vec nn, Vec fr)
    : structure(s), blocks(std::move(bl)), nonneg(std::move(nn)), free(std::move(fr)) {
  s.validate();
  if (blocks.size() != s.sdp_blocks.size())
    throw dimension_error("SymBlockMat: block count does not match structure");
  for (std::size_t k = 0; k < blocks.size(); ++k) {
    if (blocks[k].rows() != s.sdp_blocks[k] || blocks[k].cols() != s.sdp_blocks[k])
      throw dimension_error("SymBlockMat: block " + std::to_string(k) +
                            " does not match declared size");
    blocks[k] = symmetrize(blocks[k]);
  }
  if (nonneg.size() != s.nonneg_dim || free.size() != s.free_dim)
    throw dimension_error("SymBlockMat: nonneg/free part does not match structure");
}

SymBlockMat SymBlockMat::identity(const BlockStructure& s) {
  SymBlockMat out(s);
  for (auto& b : out.blocks) b.setIdentity();
  out.nonneg.setOnes();
  return out;
}

namespace {
void require_same(const SymBlockMat& a, const SymBlockMat& b) {
  if (!a.same_shape(b)) throw dimension_error("block structures differ");
}
}  // namespace

SymBlockMat& SymBlockMat::operator+=(const SymBlockMat& o) { return axpy(1.0, o); }
SymBlockMat& SymBlockMat::operator-=(const SymBlockMat& o) { return axpy(-1.0, o); }

SymBlockMat& SymBlockMat::operator*=(double s) {
  for (auto& b : blocks) b *= s;
  nonneg *= s;
  free *= s;
  return *this;
}

SymBlockMat& SymBlockMat::axpy(double a, const SymBlockMat& x) {
  require_same(*this, x);
  for (std::size_t k = 0; k < blocks.size(); ++k) blocks[k] += a * x.blocks[k];
  nonneg += a * x.nonneg;
  free += a * x.free;
  return *this;
}

double SymBlockMat::norm() const { return std::sqrt(frobenius_inner(*this, *this)); }

double SymBlockMat::max_abs() const {
  double m = 0.0;
  for (const auto& b : blocks)
    if (b.size()) m = std::max(m, b.cwiseAbs().maxCoeff());
  if (nonneg.size()) m = std::max(m, nonneg.cwiseAbs().maxCoeff());
  if (free.size()) m = std::max(m, free.cwiseAbs().maxCoeff());
  return m;
}

bool SymBlockMat::is_zero() const { return max_abs() == 0.0; }

Vec SymBlockMat::packed() const {
  Vec out(static_cast<Eigen::Index>(structure.packed_dim()));
  Eigen::Index p = 0;
  const double r2 = std::sqrt(2.0);
  for (const auto& b : blocks)
    for (Eigen::Index j = 0; j < b.cols(); ++j)
      for (Eigen::Index i = 0; i <= j; ++i) out(p++) = (i == j) ? b(i, j) : r2 * b(i, j);
  out.segment(p, nonneg.size()) = nonneg;
  p += nonneg.size();
  out.segment(p, free.size()) = free;
  return out;
}

SymBlockMat operator+(SymBlockMat a, const SymBlockMat& b) { return a += b; }
SymBlockMat operator-(SymBlockMat a, const SymBlockMat& b) { return a -= b; }
SymBlockMat operator*(double s, SymBlockMat a) { return a *= s; }

double frobenius_inner(const SymBlockMat& a, const SymBlockMat& b) {
  require_same(a, b);
  double s = 0.0;
  for (std::size_t k = 0; k < a.blocks.size(); ++k) s += a.blocks[k].cwiseProduct(b.blocks[k]).sum();
  return s + a.nonneg.dot(b.nonneg) + a.free.dot(b.free);
}

void ConeProblem::add_constraint(SymBlockMat ai, double bi, std::string label) {
  if (!(ai.structure == structure)) throw dimension_error("constraint structure mismatch");
  a.push_back(std::move(ai));
  Vec nb(b.size() + 1);
  nb.head(b.size()) = b;
  nb(b.size()) = bi;
  b = std::move(nb);
  if (!label.empty() || !labels.empty()) {
    labels.resize(a.size() - 1);
    labels.push_back(std::move(label));
  }
}

void ConeProblem::check_shapes() const {
  structure.validate();
  if (!(c.structure == structure)) throw dimension_error("objective structure mismatch");
  if (b.size() != m()) throw dimension_error("rhs length does not match constraint count");
  for (int i = 0; i < m(); ++i)
    if (!(a[i].structure == structure))
      throw dimension_error("constraint " + std::to_string(i) + " structure mismatch");
}

std::string ConeProblem::constraint_name(int i) const {
  std::string s = "constraint " + std::to_string(i);
  if (i < static_cast<int>(labels.size()) && !labels[i].empty()) s += " (" + labels[i] + ")";
  return s;
}

ValidationReport validate_problem(const ConeProblem& p, double dep_tol, double spread_limit) {
  p.check_shapes();
  ValidationReport r;
  r.m = p.m();
  std::vector<Vec> basis;
  for (int i = 0; i < p.m(); ++i) {
    Vec v = p.a[i].packed();
    const double n0 = v.norm();
    if (n0 == 0.0) {
      r.dependent.push_back(i);
      continue;
    }
    // two passes of modified Gram-Schmidt
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& q : basis) v -= q.dot(v) * q;
    const double n1 = v.norm();
    if (n1 <= dep_tol * n0) {
      r.dependent.push_back(i);
    } else {
      basis.push_back(v / n1);
    }
  }
  r.rank = static_cast<int>(basis.size());
  for (int i : r.dependent)
    r.messages.push_back(p.constraint_name(i) + " is linearly dependent on earlier constraints");

  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  auto scan = [&](const SymBlockMat& s) {
    for (const auto& b : s.blocks)
      for (Eigen::Index k = 0; k < b.size(); ++k) {
        const double v = std::abs(b.data()[k]);
        if (v > 0) lo = std::min(lo, v), hi = std::max(hi, v);
      }
    for (Eigen::Index k = 0; k < s.nonneg.size(); ++k)
      if (double v = std::abs(s.nonneg(k)); v > 0) lo = std::min(lo, v), hi = std::max(hi, v);
    for (Eigen::Index k = 0; k < s.free.size(); ++k)
      if (double v = std::abs(s.free(k)); v > 0) lo = std::min(lo, v), hi = std::max(hi, v);
  };
  scan(p.c);
  for (const auto& ai : p.a) scan(ai);
  for (Eigen::Index k = 0; k < p.b.size(); ++k)
    if (double v = std::abs(p.b(k)); v > 0) lo = std::min(lo, v), hi = std::max(hi, v);
  if (hi > 0) {
    r.coef_min = lo;
    r.coef_max = hi;
    if (hi / lo > spread_limit) {
      r.scaling_warning = true;
      std::ostringstream os;
      os << "coefficient magnitudes span " << lo << " .. " << hi;
      r.messages.push_back(os.str());
    }
  }
  return r;
}

void require_independent(const ConeProblem& p, double dep_tol) {
  const auto r = validate_problem(p, dep_tol);
  if (!r.dependent.empty())
    throw model_error(p.constraint_name(r.dependent.front()) +
                      " is linearly dependent on earlier constraints");
}

}  // namespace qisdp
