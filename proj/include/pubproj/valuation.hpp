#pragma once

#include <cstdint>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include "pubproj/matroid.hpp"
#include "pubproj/types.hpp"

namespace pubproj {

// One weighted point of a coverage valuation: contributes `weight` whenever
// the chosen set intersects `covered_by`.
struct CoveragePoint {
  std::string id;
  double weight = 0.0;
  SetMask covered_by = 0;
};

struct MrsTerm {
  double weight = 0.0;
  Matroid matroid;
};

// Matroid-rank-sum valuation v(S) = Σ_t w_t · rank_t(S), kept either as an
// explicit term list or as a weighted coverage system (which is the partition
// special case with per-point blocks). Immutable; value queries are pure.
class MrsValuation {
 public:
  enum class Rep { kTerms, kCoverage };

  static MrsValuation from_terms(int project_count, std::vector<MrsTerm> terms);
  static MrsValuation from_coverage(int project_count, std::vector<CoveragePoint> points);
  static MrsValuation zero(int project_count);

  Rep rep() const { return rep_; }
  int project_count() const { return m_; }
  const std::vector<MrsTerm>& terms() const { return terms_; }
  const std::vector<CoveragePoint>& coverage_points() const { return points_; }

  double value(SetMask s) const;
  double total_value() const;    // v([m])
  double singleton_sum() const;  // Σ_j v({j})

  // Alternating superset transform w(R) = Σ_{S⊇R} (−1)^{|S\R|} v(S) over the
  // full ground set, built once on first use and shared across copies. Lottery
  // expectations collapse to Σ_R w(R)·(1−z_{R̄})^draws against this table.
  const std::vector<double>& mobius_table(int enum_cap) const;

 private:
  MrsValuation() = default;

  Rep rep_ = Rep::kTerms;
  int m_ = 0;
  std::vector<MrsTerm> terms_;
  std::vector<CoveragePoint> points_;

  struct Cache {
    std::once_flag once;
    std::vector<double> mobius;
  };
  std::shared_ptr<Cache> cache_ = std::make_shared<Cache>();
};

struct McEstimate {
  double estimate = 0.0;
  double std_error = 0.0;
};

// Exact E[v(S)] for S = promise ∪ (union of `draws` i.i.d. picks), where each
// pick lands on project j with probability marginals[j] and on "no project"
// with the remaining mass. draws = 0 is the empty lottery: E = v(promise).
double lottery_value(const MrsValuation& v, std::span<const double> marginals,
                     int draws, SetMask promise, int enum_cap = kDefaultEnumCap);

// Monte Carlo estimate of the same expectation; samples >= 2.
McEstimate lottery_value_mc(const MrsValuation& v, std::span<const double> marginals,
                            int draws, SetMask promise, int samples,
                            std::uint64_t seed);

// All m partial derivatives ∂/∂x_j E[v over k draws at per-draw marginals
// x/k]. Equals the promise/no-promise difference of (k−1)-draw lottery values
// with the same per-draw marginals; computed in one pass over the cached
// transform (terms) or the point list (coverage).
std::vector<double> lottery_gradient(const MrsValuation& v, std::span<const double> x,
                                     int k, int enum_cap = kDefaultEnumCap);

// marginals cleaned per the tolerance contract: entries in [−1e−9,0) clamp to
// 0, a total in (1, 1+1e−9] rescales to 1; anything worse is an input error.
std::vector<double> normalize_marginals(std::span<const double> marginals);

// x^e for small non-negative integer e, deterministic across platforms.
double ipow(double base, int e);

}  // namespace pubproj
