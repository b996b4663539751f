#pragma once

#include <map>
#include <span>
#include <vector>

#include "pubproj/instance.hpp"
#include "pubproj/lottery.hpp"

namespace pubproj {

enum class RoundingScheme { kRk, kRkPlus };

// Concave objective over P = {0 <= x_j <= 1, Σ x_j <= cardinality_bound}.
class Objective {
 public:
  virtual ~Objective() = default;
  virtual int dimension() const = 0;
  virtual int cardinality_bound() const = 0;
  // Scale for relative tolerances (Σ_i v_i([m]) for welfare objectives).
  virtual double upper_bound() const = 0;
  virtual double value(std::span<const double> x) const = 0;
  virtual void gradient(std::span<const double> x, std::span<double> out) const = 0;
};

// Expected-welfare objective f(x) = E_{S ~ rounding(x)}[Σ_i v_i(S)]. With the
// noise-augmented scheme the cancellation branch adds
// (μ/m²)·(Σ_{j,i} v_i({j}))·Σ_j (1−(1−x_j/k)^k), which makes f strongly
// concave with constant curvature_lambda() when k >= 2.
class ConvexProgram : public Objective {
 public:
  ConvexProgram(Instance inst, RoundingScheme scheme, int enum_cap = kDefaultEnumCap);

  int dimension() const override { return inst_.m; }
  int cardinality_bound() const override { return inst_.k; }
  double upper_bound() const override { return f_upper_; }
  double value(std::span<const double> x) const override;
  void gradient(std::span<const double> x, std::span<double> out) const override;

  const Instance& instance() const { return inst_; }
  RoundingScheme scheme() const { return scheme_; }
  int enum_cap() const { return enum_cap_; }
  double noise_weight_mu() const { return mu_; }
  // Strong-concavity constant (μ/m²)·(Σ_i v_i([m]))·e^{−1}; 0 if unavailable
  // (plain scheme, k = 1 where the noise term is linear, or μ underflow).
  double curvature_lambda() const { return lambda_; }

 private:
  Instance inst_;
  RoundingScheme scheme_ = RoundingScheme::kRk;
  int enum_cap_ = kDefaultEnumCap;
  double f_upper_ = 0.0;
  double mu_ = 0.0;
  double noise_coeff_ = 0.0;  // (μ/m²)·Σ_{j,i} v_i({j})
  double lambda_ = 0.0;
};

struct SolverOptions {
  double tol = 1e-6;  // relative: terminate at gap <= tol·upper_bound
  int max_iters = 5000;
  double backtrack_shrink = 0.5;
  double sufficient_increase = 1e-4;
};

struct SolveReport {
  std::vector<double> x_star;
  double objective_value = 0.0;
  double duality_gap = 0.0;
  int iterations = 0;
  double tolerance_achieved = 0.0;  // duality_gap / upper_bound
  int objective_evals = 0;
  int gradient_evals = 0;
  bool stalled = false;  // line search hit floating-point resolution early
};

// Pairwise conditional-gradient ascent over P. Linear maximization is
// closed-form (the top-min(k,m) positive gradient coordinates, ties to the
// lowest index); each step moves weight from the worst active vertex to the
// best one, with backtracking line search plus a quadratic-interpolation
// refinement. The Frank-Wolfe gap certifies f(x*) >= max f − gap by
// concavity. Instances stay warm: refine() may be called repeatedly with
// decreasing targets and continues from the current iterate.
class FrankWolfeSolver {
 public:
  FrankWolfeSolver(const Objective& obj, SolverOptions opts = {});

  // Iterate until the absolute gap drops to `abs_gap_target` or max_iters
  // additional iterations pass. Returns the updated report.
  const SolveReport& refine(double abs_gap_target);
  const SolveReport& report() const { return report_; }

 private:
  double dot_x(std::span<const double> g) const;
  void rebuild_x();

  const Objective* obj_;
  SolverOptions opts_;
  std::map<SetMask, double> active_;  // vertex -> convex weight
  std::vector<double> x_;
  double f_val_ = 0.0;
  SolveReport report_;
};

SolveReport solve(const Objective& obj, const SolverOptions& opts = {});

// δ-estimation bookkeeping: solving to relative tolerance ε = δ²λ/(2·f_upper)
// pins the iterate within δ of the optimum by strong concavity,
// f(x*) − f(x) >= (λ/2)·‖x − x*‖².
struct ConditioningParams {
  double lambda = 0.0;
  double delta = 0.0;
  double epsilon = 0.0;

  static ConditioningParams from_delta(double delta, double lambda, double f_upper);
};

struct EstimateResult {
  std::vector<double> x;
  ConditioningParams params;
  SolveReport report;
};

// ‖x̃ − x*‖∞ <= delta, via the conditioning bound. The program must expose a
// positive curvature_lambda() (noise-augmented objective, k >= 2).
EstimateResult estimate_solution(const ConvexProgram& program, double delta,
                                 const SolverOptions& opts = {});
// Same bound for any objective whose strong-concavity constant the caller
// supplies (synthetic objectives in tests).
EstimateResult estimate_solution(const Objective& obj, double delta, double lambda,
                                 const SolverOptions& opts = {});

// Central finite differences of obj.value (validation path for the
// production gradient). Falls back to one-sided differences at the
// boundary of P.
std::vector<double> gradient_fd(const Objective& obj, std::span<const double> x,
                                double h = 1e-5);

}  // namespace pubproj
