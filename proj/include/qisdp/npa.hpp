#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "qisdp/modeling.hpp"

namespace qisdp {

// outcomes[party][setting] = number of outcomes of that measurement.
struct Scenario {
  std::vector<std::vector<int>> outcomes;
  std::vector<std::string> labels;  // party names, optional

  int parties() const { return static_cast<int>(outcomes.size()); }
  int settings(int party) const { return static_cast<int>(outcomes.at(party).size()); }
  void validate() const;

  // n parties, each with the given number of binary settings.
  static Scenario binary(int parties, int settings);
  static Scenario chsh() { return binary(2, 2); }
  // Party 0 prepares (binary flag per preparation), party 1 measures.
  static Scenario prepare_measure(int preparations, int measurements, int outcomes = 2);
};

// Projector E^outcome_setting of a party.
struct Symbol {
  int party = 0;
  int setting = 0;
  int outcome = 0;
  auto operator<=>(const Symbol&) const = default;
};

using Word = std::vector<Symbol>;

// Only the commutation rule: parties are stably sorted, operators of one
// party keep their relative order.
Word commute_parties(const Word& w);
// Commutation, idempotency and orthogonality to a fixpoint; nullopt is the
// zero operator. The empty word is the identity.
std::optional<Word> reduce_word(const Word& w);
Word adjoint(const Word& w);
std::string to_string(const Word& w);

// Independent projectors of a scenario: outcomes 0..o-2 of every setting.
std::vector<Symbol> alphabet(const Scenario& s);

struct NpaLevel {
  int k = 1;
  bool plus_ab = false;  // "1+AB": S_1 plus all products of one A and one B projector

  static NpaLevel parse(const std::string& text);
  std::string str() const;
};

// Canonical nonzero words, ordered by length then lexicographically.
std::vector<Word> generate_words(const Scenario& s, const NpaLevel& level);

class MomentModel {
 public:
  Scenario scenario;
  std::vector<Word> words;                    // index set S
  std::vector<Word> class_words;              // representative per moment class
  std::vector<std::vector<int>> cell_class;   // -1 marks a zero cell
  int identity_class = 0;

  int size() const { return static_cast<int>(words.size()); }
  int num_classes() const { return static_cast<int>(class_words.size()); }
  // Class holding <w>, if that moment appears in the matrix.
  std::optional<int> class_of(const Word& w) const;
  // P(outcomes | settings) as a linear function of the class moments
  // (parameter k = class k). Throws if a needed moment is absent.
  ScalarExpr probability(const std::vector<int>& outcomes, const std::vector<int>& settings) const;
  // Gamma built from class moments.
  Mat gamma(const Vec& moments) const;
  // Basis matrix of class c (0/1 pattern).
  Mat pattern(int c) const;

  std::map<Word, int> class_index;  // class key -> class
};

MomentModel build_moment_model(const Scenario& s, const NpaLevel& level);

// Moment of the canonical class key: min(w, reduce(w^dagger)).
Word class_key(const Word& reduced);

struct BellTerm {
  std::vector<int> outcomes;
  std::vector<int> settings;
  double coef = 0.0;
};

struct BellExpr {
  std::vector<BellTerm> terms;
  double constant = 0.0;

  // Sum_{xy} (-1)^{xy} <A_x B_y> written over probabilities.
  static BellExpr chsh();
};

struct BellConstraint {
  BellExpr expr;
  double value = 0.0;  // expr == value
};

struct NpaOptions {
  CompileOptions compile{Framing::Dual, EqualityMode::Eliminate};
  SolverConfig solver;
};

struct NpaResult {
  Status status = Status::Success;
  double value = 0.0;
  Mat gamma;
  Vec moments;
  ModelResult run;
};

// Moment-matrix model: one parameter per class, Gamma >= 0, <1> = 1.
Model moment_program(const MomentModel& mm);
ScalarExpr bell_objective(const MomentModel& mm, const BellExpr& e);

NpaResult solve_bell(const Scenario& s, const NpaLevel& level, const BellExpr& bell,
                     const std::vector<BellConstraint>& extra = {}, const NpaOptions& opt = {});

// Prepare-and-measure witness term: coef * P(b | x, y).
struct PmTerm {
  int b = 0;
  int x = 0;
  int y = 0;
  double coef = 0.0;
};

// 2->1 random access code: average of P(b = x_y | x, y), x in {0..3} as bits (x_0, x_1).
std::vector<PmTerm> qrac_terms();

// Pins <E^0_x> = 1/d for every preparation x.
void add_mlp_constraints(Model& m, const MomentModel& mm, int d);

NpaResult mlp_solve(const Scenario& pm, const NpaLevel& level, int d,
                    const std::vector<PmTerm>& witness, const NpaOptions& opt = {});

// ---------------------------------------------------------------- NV

struct NvOptions {
  std::uint64_t seed = 1;
  int stall_limit = 5;
  int max_draws = 20000;
  double tol = 1e-9;  // relative to the norm of the drawn matrix
};

using NvSampler = std::function<Mat(std::mt19937_64&)>;

struct NvBasis {
  std::vector<Mat> basis;  // Frobenius-orthonormal
  int draws = 0;
};

NvBasis nv_build_basis(const NvSampler& sample, const NvOptions& opt = {});

// Prepare-and-measure strategy in dimension d: pure states rho_x and rank-r
// projectors P_y (outcome 0 of binary measurements).
struct PmSpec {
  int dim = 2;
  int states = 4;
  int measurements = 2;
  int rank = 1;
  int level = 2;  // maximal monomial degree
};

struct PmSymbol {
  bool state = true;
  int index = 0;
  auto operator<=>(const PmSymbol&) const = default;
};

class PmNv {
 public:
  explicit PmNv(const PmSpec& spec);

  const PmSpec& spec() const { return spec_; }
  const std::vector<std::vector<PmSymbol>>& monomials() const { return monomials_; }
  int size() const { return static_cast<int>(monomials_.size()); }
  // Re Tr(O_i^dagger O_j) / d for a Haar-random strategy.
  Mat sample(std::mt19937_64& rng) const;
  NvSampler sampler() const;
  // Game matrix G with Tr(G Gamma) = sum coef P(b|x,y) on normalized Gamma.
  Mat game(const std::vector<PmTerm>& terms) const;

 private:
  int index_of(const std::vector<PmSymbol>& w) const;
  PmSpec spec_;
  std::vector<std::vector<PmSymbol>> monomials_;
};

// Bell NV sampler: Re <psi| O_i^dagger O_j |psi> with local dimensions per
// party, rank-1 projectors and Haar-random pure states.
NvSampler bell_sampler(const MomentModel& mm, const std::vector<int>& local_dims);
// Game matrix placing each Bell moment on its first cell.
Mat bell_game(const MomentModel& mm, const BellExpr& e, double* constant = nullptr);

// maximize Tr(G Gamma) over Gamma in span(basis), Gamma_00 = 1, Gamma >= 0.
NpaResult nv_solve(const std::vector<Mat>& basis, const Mat& game, double constant = 0.0,
                   const NpaOptions& opt = {});

}  // namespace qisdp
