#pragma once

#include <span>
#include <vector>

#include "pubproj/rng.hpp"
#include "pubproj/types.hpp"

namespace pubproj {

// Point of the polytope P = {0 <= x_j <= 1, Σ x_j <= k}. k = 0 is allowed
// (forces x = 0) so that rescaled sub-lotteries like the (k−2)-draw law can
// reuse the type.
struct FractionalSolution {
  std::vector<double> x;
  int k = 1;

  FractionalSolution(std::vector<double> x_in, int k_in);
  int project_count() const { return static_cast<int>(x.size()); }
};

struct RoundingTrace {
  std::vector<double> p;       // the k interval draws
  // Cancellation branch of the noise-augmented scheme. The branch event has
  // probability 2^(-2nm), sampled exactly from random bits, so no finite q_1
  // value is recorded; `cancel_branch` is the comparison outcome.
  bool cancel_branch = false;
  SetMask pre_cancel = 0;      // set chosen before cancellation
  double q2 = -1.0;            // singleton test draw, valid iff cancel_branch
  int jstar = -1;              // replacement project, valid iff a singleton was kept
};

struct RoundingOutcome {
  SetMask chosen = 0;
  RoundingTrace trace;
};

// Splits [0,1] into consecutive intervals of length x_j/k in ascending
// project order, draws k uniforms, returns every project whose interval is
// hit. |chosen| <= k by construction.
RoundingOutcome round_k(const FractionalSolution& x, Rng& rng);

// round_k, then with probability 2^(-2·players·m) the choice is cancelled:
// with probability |S|/m (S = the pre-cancellation set) a uniformly random
// singleton is output, otherwise the empty set.
RoundingOutcome round_k_plus(const FractionalSolution& x, int player_count, Rng& rng);

// Law of the union of `draws` i.i.d. picks (per-pick project probabilities
// `per_draw`, remaining mass picks nothing), as a dense vector over subsets:
// Pr[U=S] = (−1)^{|S|} Σ_{R⊆S} (−1)^{|R|} (1−z_{R̄})^draws, Kahan-summed.
std::vector<double> union_distribution(std::span<const double> per_draw, int draws);

class ExactDistribution {
 public:
  // Applies the clamp guards: entries in [−1e−12, 0) clamp to 0, more
  // negative is a numeric error; the total must be within 1e−9 of 1; mass on
  // |S| > k (zero in exact arithmetic) is forced to 0.
  ExactDistribution(int m, int k, std::vector<double> probs);

  int project_count() const { return m_; }
  int draw_bound() const { return k_; }
  double prob(SetMask s) const { return p_[s]; }
  const std::vector<double>& probs() const { return p_; }
  double marginal(int j) const;

  template <typename F>
  double expectation(F&& f) const {
    KahanSum acc;
    for (SetMask s = 0; s < p_.size(); ++s)
      if (p_[s] != 0.0) acc.add(p_[s] * f(s));
    return acc.get();
  }

 private:
  int m_ = 0;
  int k_ = 0;
  std::vector<double> p_;
};

// Exact output law of round_k at x.
ExactDistribution exact_distribution(const FractionalSolution& x,
                                     int enum_cap = kDefaultEnumCap);

// Exact output law of round_k_plus at x with `player_count` players: the
// round_k law mixed with the cancellation branch at weight 2^(-2nm). For nm
// large enough that 2^(-2nm) underflows, this equals the round_k law.
ExactDistribution exact_distribution_plus(const FractionalSolution& x, int player_count,
                                          int enum_cap = kDefaultEnumCap);

// Pr[j ∈ round_k(x)] = 1 − (1 − x_j/k)^k.
double inclusion_probability(const FractionalSolution& x, int j);

}  // namespace pubproj
