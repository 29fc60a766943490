#pragma once

#include <string>
#include <vector>

#include "qisdp/linalg.hpp"

namespace qisdp {

// SDP blocks, then a nonnegative orthant, then free coordinates.
struct BlockStructure {
  std::vector<int> sdp_blocks;
  int nonneg_dim = 0;
  int free_dim = 0;

  void validate() const;
  // Sum of s_k(s_k+1)/2 plus nonneg and free counts.
  std::size_t packed_dim() const;
  int sdp_order() const;  // sum of s_k
  bool operator==(const BlockStructure&) const = default;
};

// Element of the block cone space. SDP blocks are kept exactly symmetric by
// every constructor and mutator below.
struct SymBlockMat {
  BlockStructure structure;
  std::vector<Mat> blocks;
  Vec nonneg;
  Vec free;

  SymBlockMat() = default;
  explicit SymBlockMat(const BlockStructure& s);  // zero element
  SymBlockMat(const BlockStructure& s, std::vector<Mat> blocks, Vec nonneg, Vec free);

  static SymBlockMat identity(const BlockStructure& s);  // free part is zero

  bool same_shape(const SymBlockMat& o) const { return structure == o.structure; }
  SymBlockMat& operator+=(const SymBlockMat& o);
  SymBlockMat& operator-=(const SymBlockMat& o);
  SymBlockMat& operator*=(double s);
  SymBlockMat& axpy(double a, const SymBlockMat& x);  // this += a * x
  double norm() const;  // Frobenius
  double max_abs() const;
  bool is_zero() const;
  // Packed coordinates scaled so that the Euclidean dot product equals the
  // Frobenius pairing (off-diagonal entries carry sqrt(2)).
  Vec packed() const;
};

SymBlockMat operator+(SymBlockMat a, const SymBlockMat& b);
SymBlockMat operator-(SymBlockMat a, const SymBlockMat& b);
SymBlockMat operator*(double s, SymBlockMat a);

double frobenius_inner(const SymBlockMat& a, const SymBlockMat& b);

// min <C,X> s.t. <A_i,X> = b_i, X in cone; dual max b^T y s.t. C - sum y_i A_i in cone.
struct ConeProblem {
  BlockStructure structure;
  SymBlockMat c;
  std::vector<SymBlockMat> a;
  Vec b;
  std::string name;
  std::vector<std::string> labels;

  ConeProblem() = default;
  explicit ConeProblem(const BlockStructure& s) : structure(s), c(s) {}

  int m() const { return static_cast<int>(a.size()); }
  void add_constraint(SymBlockMat ai, double bi, std::string label = {});
  void check_shapes() const;  // throws on structural mismatch
  std::string constraint_name(int i) const;
};

struct ValidationReport {
  int m = 0;
  int rank = 0;
  std::vector<int> dependent;  // indices dependent on earlier constraints
  double coef_min = 0.0;       // smallest nonzero |coefficient|
  double coef_max = 0.0;
  bool scaling_warning = false;
  std::vector<std::string> messages;

  bool clean() const { return dependent.empty() && !scaling_warning; }
};

ValidationReport validate_problem(const ConeProblem& p, double dep_tol = 1e-10,
                                  double spread_limit = 1e8);

// Throws naming the first dependent constraint.
void require_independent(const ConeProblem& p, double dep_tol = 1e-10);

}  // namespace qisdp
