#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "qisdp/cone.hpp"
#include "qisdp/ipm.hpp"

namespace qisdp {

enum class Structure { Full, Symmetric, Hermitian, Diagonal, Skew };
enum class Field { Real, Complex };
enum class Framing { Dual, Primal };
enum class EqualityMode { FreeSplit, Eliminate, TwoInequalities };

const char* to_string(Structure s);
const char* to_string(Field f);
Structure structure_from_string(const std::string& s);
Field field_from_string(const std::string& s);

// Number of real scalar parameters; throws for invalid combinations.
int parameter_count(int rows, int cols, Structure s, Field f);

struct VarDecl {
  int id = -1;
  std::string name;
  int rows = 0;
  int cols = 0;
  Structure structure = Structure::Full;
  Field field = Field::Real;
  int first_param = 0;
  int param_count = 0;
};

// Real affine function c + sum_k a_k p_k of the model parameters.
struct ScalarExpr {
  double constant = 0.0;
  std::map<int, double> terms;

  ScalarExpr() = default;
  ScalarExpr(double c) : constant(c) {}  // NOLINT: implicit constants are convenient
  static ScalarExpr param(int k, double coef = 1.0);

  ScalarExpr& operator+=(const ScalarExpr& o);
  ScalarExpr& operator-=(const ScalarExpr& o);
  ScalarExpr& operator*=(double s);
  double evaluate(const Vec& p) const;
};

ScalarExpr operator+(ScalarExpr a, const ScalarExpr& b);
ScalarExpr operator-(ScalarExpr a, const ScalarExpr& b);
ScalarExpr operator-(ScalarExpr a);
ScalarExpr operator*(double s, ScalarExpr a);

// Complex affine matrix F0 + sum_k p_k F_k with real parameters p_k.
struct MatExpr {
  int rows = 0;
  int cols = 0;
  CMat constant;
  std::map<int, CMat> terms;

  MatExpr() = default;
  MatExpr(int r, int c) : rows(r), cols(c), constant(CMat::Zero(r, c)) {}
  static MatExpr constant_of(const CMat& m);

  MatExpr& operator+=(const MatExpr& o);
  MatExpr& operator-=(const MatExpr& o);
  MatExpr& operator*=(double s);
  MatExpr& operator+=(const CMat& m);
  MatExpr& operator-=(const CMat& m);

  // Applies a linear map to every coefficient (constant included).
  MatExpr map(const std::function<CMat(const CMat&)>& f) const;
  MatExpr adjoint() const;
  ScalarExpr trace_re() const;
  ScalarExpr entry_re(int i, int j) const;
  ScalarExpr entry_im(int i, int j) const;
  CMat evaluate(const Vec& p) const;
  bool is_real(double tol = 0.0) const;
};

MatExpr operator+(MatExpr a, const MatExpr& b);
MatExpr operator-(MatExpr a, const MatExpr& b);
MatExpr operator*(double s, MatExpr a);
MatExpr operator*(const CMat& a, const MatExpr& m);
MatExpr operator*(const MatExpr& m, const CMat& a);
MatExpr kron(const CMat& a, const MatExpr& m);
MatExpr kron(const MatExpr& m, const CMat& a);
// Re Tr(A M).
ScalarExpr re_trace_product(const CMat& a, const MatExpr& m);

// Drops terms whose coefficient max-norm is below threshold; the constant
// term is always kept.
MatExpr clean(const MatExpr& e, double threshold);

struct Lmi {
  MatExpr expr;
  std::string label;
  int direct_var = -1;  // variable id when the LMI is "var is PSD"
};

struct Equality {
  ScalarExpr expr;  // expr == 0
  std::string label;
};

class Model {
 public:
  VarDecl declare(const std::string& name, int rows, int cols,
                  Structure s = Structure::Full, Field f = Field::Real);
  VarDecl scalar(const std::string& name) { return declare(name, 1, 1); }

  MatExpr expr(const VarDecl& v) const;
  ScalarExpr param(int k) const;
  ScalarExpr value(const VarDecl& scalar_var) const;  // 1x1 real variable

  void add_psd(const MatExpr& e, const std::string& label = {});
  void add_psd(const VarDecl& v, const std::string& label = {});
  void add_nonneg(const ScalarExpr& e, const std::string& label = {});
  void add_equality(const ScalarExpr& e, const std::string& label = {});
  void minimize(const ScalarExpr& e);
  void maximize(const ScalarExpr& e);

  int num_params() const { return num_params_; }
  const std::vector<VarDecl>& vars() const { return vars_; }
  const std::vector<Lmi>& lmis() const { return lmis_; }
  const std::vector<Equality>& equalities() const { return equalities_; }
  const ScalarExpr& objective() const { return objective_; }  // minimized
  bool maximizing() const { return maximize_; }
  const VarDecl& var(const std::string& name) const;

  // Used by deserialization.
  void add_lmi(Lmi l);
  void set_objective(const ScalarExpr& e, bool maximize);

 private:
  void check_expr(const ScalarExpr& e) const;
  void check_expr(const MatExpr& e) const;

  std::vector<VarDecl> vars_;
  std::vector<Lmi> lmis_;
  std::vector<Equality> equalities_;
  ScalarExpr objective_;
  bool maximize_ = false;
  int num_params_ = 0;
};

struct CompileOptions {
  Framing framing = Framing::Dual;
  EqualityMode equalities = EqualityMode::FreeSplit;
  double epsilon = 1e-8;       // two-inequalities slab half-width
  bool real_shortcut = false;  // drop imaginary parts when the model is conjugation invariant
};

// Inverse of compilation: parameters and multipliers from a solver Solution.
class Recovery {
 public:
  Vec params(const Solution& s) const;
  // Model objective (in the user's sense) from the side that carries the
  // parameters and from the opposite side of the canonical pair.
  double objective(const Solution& s) const;
  double bound(const Solution& s) const;
  // Lagrange multipliers of the model equalities (empty when unavailable).
  Vec equality_multipliers(const Solution& s) const;
  // Dual matrix of LMI k (Hermitian, size of the LMI); empty if unavailable.
  CMat lmi_multiplier(const Solution& s, int k) const;

  Framing framing = Framing::Dual;
  EqualityMode mode = EqualityMode::FreeSplit;
  int num_params = 0;
  double obj_constant = 0.0;
  double sense = 1.0;  // -1 when the model maximizes
  bool shortcut_applied = false;
  // dual framing: p = p0 + basis * y
  Vec p0;
  Mat basis;
  // primal framing: p_k = <param_maps[k], x> + param_offset[k]
  std::vector<SymBlockMat> param_maps;
  Vec param_offset;
  std::vector<int> eq_rows;  // primal: constraint row of equality e; dual: free or nonneg slot
  struct LmiSlot {
    int block = -1;     // SDP block, or -1 for a nonneg slot
    int nonneg = -1;
    bool embedded = false;
    bool from_z = false;  // multiplier lives in Z (primal framing) instead of X
  };
  std::vector<LmiSlot> lmi_slots;
};

struct Compiled {
  ConeProblem problem;
  Recovery recovery;
};

Compiled compile(const Model& m, const CompileOptions& opt = {});

struct ModelResult {
  Solution solution;
  IterationLog log;
  Vec params;
  double value = 0.0;  // model objective, user sense
  Compiled compiled;
};

ModelResult solve_model(const Model& m, const CompileOptions& copt = {},
                        const SolverConfig& scfg = {});

}  // namespace qisdp
