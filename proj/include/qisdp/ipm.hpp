#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "qisdp/cone.hpp"

namespace qisdp {

enum class SearchDirection { HKM, NT };

enum class Status : int {
  Success = 0,
  PrimalInfeasible = 1,  // heuristic, from a near-certificate y
  DualInfeasible = 2,    // heuristic, from a near-certificate X
  LackOfProgress = -1,
  IterationLimit = -6,
  NumericalFailure = -7,
};

const char* status_name(Status s);

struct SolverConfig {
  double tol_gap = 1e-7;
  double tol_primal = 1e-7;
  double tol_dual = 1e-7;
  int max_iterations = 100;
  double gamma_step = 0.98;
  double expon = 3.0;
  SearchDirection direction = SearchDirection::HKM;
  bool perturbation_enabled = false;
  std::uint64_t seed = 0;
  double infeasibility_tol = 1e-8;
  int stall_window = 5;
  double stall_ratio = 1e-2;
  double schur_rcond_min = 1e-12;

  void validate() const;
};

struct Iterate {
  SymBlockMat x;
  Vec y;
  SymBlockMat z;
  double nu = 0.0;
  int iteration = 0;
};

struct IterationRecord {
  int it = 0;
  double pstep = 0.0;
  double dstep = 0.0;
  double p_inf = 0.0;
  double d_inf = 0.0;
  double gap = 0.0;  // Tr(XZ)
  double primal_obj = 0.0;
  double dual_obj = 0.0;
  double mean_obj = 0.0;
  double time = 0.0;  // seconds since start
};

struct IterationLog {
  IterationRecord initial;
  std::vector<IterationRecord> records;
  std::string table() const;
};

struct SolveStats {
  int iterations = 0;
  double p_inf = 0.0;
  double d_inf = 0.0;
  double gap = 0.0;
  double time = 0.0;
  int schur_fallbacks = 0;
};

struct Solution {
  SymBlockMat x;
  Vec y;
  SymBlockMat z;
  double primal_value = 0.0;
  double dual_value = 0.0;
  Status status = Status::NumericalFailure;
  SolveStats stats;
  bool success() const { return status == Status::Success; }
};

struct SolveResult {
  Solution solution;
  IterationLog log;
};

struct Residuals {
  Vec rp;           // b - A(X)
  SymBlockMat rd;   // C - sum y_i A_i - Z
  double p_inf = 0; // |rp| / (1 + |b|)
  double d_inf = 0; // |rd|_F / (1 + |C|_F)
};

struct NewtonStep {
  SymBlockMat dx;
  Vec dy;
  SymBlockMat dz;
};

// Problem operators.
Vec apply_a(const ConeProblem& p, const SymBlockMat& x);        // (<A_i, X>)_i
SymBlockMat apply_at(const ConeProblem& p, const Vec& y);       // sum y_i A_i

// Free coordinates are not supported by the routines below other than
// solve(), which splits them into pairs of nonnegative coordinates.
Iterate cold_start(const ConeProblem& p);
Residuals residuals(const ConeProblem& p, const Iterate& it);
NewtonStep newton_direction(const ConeProblem& p, const Iterate& it, double target_nu,
                            SearchDirection dir);

// Largest t <= 1 with m + t dm PSD. Throws if m is not PD.
double step_length(const Mat& m, const Mat& dm);
// Uncapped version over the whole cone (infinity when dm keeps m interior).
double max_step(const SymBlockMat& m, const SymBlockMat& dm);

// Trace(XZ)/n times the predicted reduction ratio raised to `exponent`.
double corrector_nu(const Iterate& it, const NewtonStep& pred, double alpha_p, double beta_p,
                    double exponent);
double corrector_exponent(double gap, const SolverConfig& cfg);

Iterate perturb(Iterate it, double gap, double eps_p, double eps_d, double trace_scale);

using IterateObserver = std::function<void(const Iterate&, const IterationRecord&)>;

SolveResult solve(const ConeProblem& p, const SolverConfig& cfg = {},
                  const IterateObserver& observer = nullptr);

// Equivalent problem in which every free coordinate x_f is replaced by
// x_f+ - x_f-; the new nonneg part is [nonneg, free+, free-].
ConeProblem split_free(const ConeProblem& p);

}  // namespace qisdp
