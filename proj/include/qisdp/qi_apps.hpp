#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "qisdp/modeling.hpp"
#include "qisdp/npa.hpp"

namespace qisdp {

// ---------------------------------------------------------------- graphs

struct Graph {
  int n = 0;
  std::vector<std::pair<int, int>> edges;
  std::vector<double> weights;  // empty means unit weights

  void validate() const;  // no self-loops, indices in range, positive weights
  bool adjacent(int i, int j) const;
  Graph complement() const;

  static Graph cycle(int n);
  static Graph complete(int n);
  static Graph empty(int n);
};

struct ThetaResult {
  Status status = Status::Success;
  double value = 0.0;
  Mat matrix;  // X of the eigenvalue form, B of the weighted form
  ModelResult run;
};

// min lambda s.t. lambda I - X >= 0, X_ij = 1 on the diagonal and non-edges.
ThetaResult lovasz_theta(const Graph& g, const SolverConfig& cfg = {});
// max sum_ij sqrt(w_i w_j) B_ij s.t. B >= 0, Tr B = 1, B_ij = 0 on edges.
ThetaResult weighted_theta(const Graph& g, const SolverConfig& cfg = {});

// An event assigns outcomes to some tests (test id -> outcome).
struct Event {
  std::map<int, int> outcomes;
  std::string label;
};

// Edge iff the events give different outcomes to a shared test.
Graph exclusivity_graph(const std::vector<Event>& events);
// The 8 winning events (a xor b = x y) of CHSH; Alice tests 0,1 and Bob tests 2,3.
std::vector<Event> chsh_events();

// ---------------------------------------------------------------- channels

// J = sum_ij E(|i><j|) (x) |i><j| on output (x) input.
CMat choi_of_map(const std::function<CMat(const CMat&)>& map, int din, int dout);
CMat choi_of_kraus(const std::vector<CMat>& kraus);
// Tr_2[J (I (x) rho^T)]
CMat apply_choi(const CMat& j, const CMat& rho, int din, int dout);

struct ChannelSpec {
  std::vector<int> in_dims;   // one entry, or two (A, B) for bipartite channels
  std::vector<int> out_dims;  // same arity as in_dims
  bool completely_positive = true;
  bool trace_preserving = true;
  bool nonsignaling = false;   // B -> A' (bipartite only)
  bool ppt_preserving = false; // J^{T_{B B'}} >= 0 (bipartite only)

  void validate() const;
  int din() const;
  int dout() const;
};

struct ChannelCheck {
  bool cp = true, tp = true, ns = true, ppt = true;
  bool ok() const { return cp && tp && ns && ppt; }
};

ChannelCheck check_channel(const CMat& j, const ChannelSpec& spec, double tol = 1e-8);

struct ChannelResult {
  Status status = Status::Success;
  double value = 0.0;
  CMat choi;
  ModelResult run;
};

// maximize Re Tr(O J) over Choi matrices with the selected properties.
ChannelResult optimize_channel(const ChannelSpec& spec, const CMat& objective,
                               const SolverConfig& cfg = {});

// ---------------------------------------------------------------- DPS

CMat werner_state(double p);  // p |psi-><psi-| + (1-p) I/4

struct DpsOptions {
  bool ppt = true;
  double feasibility_tol = 1e-6;
  int max_dimension = 64;  // guard on d_A d_B^k
  SolverConfig solver;
};

struct DpsResult {
  bool feasible = false;
  Status status = Status::Success;
  double t = 0.0;  // largest common eigenvalue margin of all blocks
  CMat witness;    // Hermitian on A (x) B with Tr(W rho) = t at optimum
  double witness_value = 0.0;
  int parameters = 0;
  ModelResult run;
};

DpsResult dps_test(const CMat& rho, int da, int db, int k, const DpsOptions& opt = {});

// Tr[W (SWAP(A,A') (x) SWAP(B,B'))] on A B A' B', or SWAP(A,A') (x) I when
// b_side is false.
double swap_probability_extract(const CMat& w, int da, int db, bool b_side = true);

// ---------------------------------------------------------------- SoS

struct Polynomial {
  int nvars = 0;
  std::map<std::vector<int>, double> terms;  // exponent vector -> coefficient

  int degree() const;
  bool homogeneous() const;
  Polynomial& add(const std::vector<int>& exps, double c);
};

std::vector<std::vector<int>> monomials_of_degree(int nvars, int degree);

struct SosCertificate {
  bool feasible = false;
  Status status = Status::Success;
  double margin = 0.0;  // max t with H + sum y_i N_i - t I >= 0 (t <= 1)
  Mat gram;
  std::vector<std::vector<int>> basis;
  std::vector<Polynomial> squares;  // h = sum g_i^2
  double residual = 0.0;           // coefficient mismatch of sum g_i^2 vs h
  int null_dimension = 0;
  ModelResult run;
};

SosCertificate sos_certificate(const Polynomial& h, const SolverConfig& cfg = {}, double tol = 1e-6);

struct TsirelsonSos {
  Status status = Status::Success;
  double q1 = 0.0;
  Mat gram;           // over (A1, A2, B1, B2)
  double residual = 0.0;  // coefficient mismatch of v^T M v vs q1 - CHSH
  ModelResult run;
};

TsirelsonSos tsirelson_sos_chsh(const SolverConfig& cfg = {});
// Coefficients of v^T M v for v = (A1, A2, B1, B2) with A^2 = B^2 = 1:
// [1, A1B1, A1B2, A2B1, A2B2, {A1,A2}, {B1,B2}].
Vec chsh_gram_polynomial(const Mat& m);

// ---------------------------------------------------------------- QSD and see-saw

struct PovmResult {
  Status status = Status::Success;
  double value = 0.0;
  std::vector<CMat> povm;
  ModelResult run;
};

// maximize sum_a Re Tr(O_a M_a) over POVMs {M_a}.
PovmResult optimize_povm(const std::vector<CMat>& objectives, const SolverConfig& cfg = {});
// maximize Re Tr(O rho) over density matrices.
PovmResult optimize_state(const CMat& objective, const SolverConfig& cfg = {});

PovmResult qsd_optimal(const std::vector<CMat>& states, const std::vector<double>& priors,
                       const SolverConfig& cfg = {});
double helstrom_pure(double overlap);  // (1 + sqrt(1 - c^2)) / 2

struct SeesawOptions {
  int restarts = 20;
  std::uint64_t seed = 1;
  int max_iterations = 200;
  double rel_tol = 1e-8;
  bool parallel = true;
  SolverConfig solver;
};

struct SeesawRun {
  double value = 0.0;
  std::vector<double> trajectory;  // value after every accepted step
  std::vector<CMat> states;
  std::vector<std::vector<CMat>> measurements;
  std::uint64_t seed = 0;
};

struct SeesawResult {
  double best = 0.0;
  SeesawRun best_run;
  std::vector<double> restart_values;
};

// Bipartite Bell scenario with a shared state on local dims (dA, dB).
SeesawResult seesaw_bell(const Scenario& s, const BellExpr& e, int da, int db,
                         const SeesawOptions& opt = {});

// Prepare-and-measure: states in dimension d, measurements with the given
// outcome counts. Fixed states, when given, are never updated.
SeesawResult seesaw_pm(int d, int preparations, const std::vector<int>& outcomes,
                       const std::vector<PmTerm>& terms, const SeesawOptions& opt = {},
                       const std::vector<CMat>& fixed_states = {});

}  // namespace qisdp
