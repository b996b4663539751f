#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "pubproj/instance.hpp"
#include "pubproj/lottery.hpp"
#include "pubproj/solver.hpp"

namespace pubproj {

struct MechanismOptions {
  RoundingScheme rounding = RoundingScheme::kRk;
  double tol = 1e-6;
  int max_iters = 5000;
  std::uint64_t seed = 0;
  int enum_cap = kDefaultEnumCap;
  int bf_cap = kDefaultBruteForceCap;
};

// Substream ids hung off the master seed. Solves consume no randomness;
// stream 0 drives the allocation rounding, stream 1+i the pivot sample for
// player i's realized payment, and the composition stream the rare-branch
// coin of the composed mechanism.
inline constexpr std::uint64_t kRoundingStream = 0;
inline constexpr std::uint64_t kPivotStreamBase = 1;
inline constexpr std::uint64_t kCompositionStream = 1u << 30;

struct RngTraceInfo {
  std::uint64_t master_seed = 0;
  RoundingTrace rounding;
  bool composed_exact_branch = false;
  // Set when the composed mechanism cannot afford the brute-force terms of
  // the exact payment mixture (m above bf_cap, branch weight > 0 but below
  // ~2^-2nm); payments then omit a term bounded by that weight times f_upper.
  bool composed_payments_truncated = false;
};

struct MechanismOutcome {
  SetMask chosen = 0;
  std::vector<double> payments;           // realized single-sample estimates
  std::vector<double> expected_payments;  // exact, via the lottery oracles
  double expected_welfare = 0.0;          // exact E[Σ_i v_i] at x_star
  SolveReport solve_report;
  std::vector<SolveReport> pivot_reports;
  RoundingScheme scheme = RoundingScheme::kRk;
  RngTraceInfo rng_trace;
};

// E_{S ~ rounding(x)}[v(S)] for one player, exact. player_count fixes the
// cancellation weight 2^(-2nm) of the noise-augmented scheme.
double expected_rounded_value(const MrsValuation& v, std::span<const double> x, int k,
                              RoundingScheme scheme, int player_count,
                              int enum_cap = kDefaultEnumCap);

// Allocation + payments: solve the program, sample the rounding at x*, charge
// each player the exact externality difference against their pivot solve
// (zero report), plus a one-sample realized estimate of the same quantity.
MechanismOutcome run_midr(const Instance& inst, const MechanismOptions& opts = {});

struct Payments {
  std::vector<double> realized;
  std::vector<double> expected;
};
Payments compute_payments(const Instance& inst, const MechanismOptions& opts = {});

struct AdaptiveStats {
  int rounds = 0;       // estimate rounds total, counting the initial one
  int refinements = 0;  // δ-halvings after the initial estimate (= rounds - 1)
  double final_delta = 0.0;
};

// Samples the rounding at the (never fully computed) optimum by refining
// δ-estimates until no draw sits within δm/k of an interval boundary.
// Requires the noise-augmented objective (k >= 2) for its conditioning
// bound. δ-levels are solved once and shared across sample() calls.
class AdaptiveSampler {
 public:
  explicit AdaptiveSampler(const Instance& inst, const MechanismOptions& opts = {});

  SetMask sample(Rng& rng, AdaptiveStats* stats = nullptr);
  const ConvexProgram& program() const { return prog_; }
  // The δ-estimate for refinement level t (δ_t = 2^-t / (2m²)).
  const std::vector<double>& estimate_at_level(int t);

 private:
  ConvexProgram prog_;
  FrankWolfeSolver solver_;
  double lambda_ = 0.0;
  std::vector<std::vector<double>> levels_;
  static constexpr int kRoundCap = 60;
};

SetMask sample_adaptive(const Instance& inst, std::uint64_t seed,
                        AdaptiveStats* stats = nullptr,
                        const MechanismOptions& opts = {});

// With probability e·2^(-2nm) the instance is solved exactly by brute force;
// otherwise the noise-augmented mechanism runs. Payments price the composed
// allocation rule, so truthfulness is preserved across the mixture.
MechanismOutcome run_composed(const Instance& inst, const MechanismOptions& opts = {});

}  // namespace pubproj
