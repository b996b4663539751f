#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pubproj/mechanism.hpp"
#include "pubproj/verify.hpp"

namespace pubproj {

struct AuditCheck {
  std::string name;
  bool passed = false;
  double margin = 0.0;  // raw audited margin; its threshold is in details
  std::string details;
};

struct AuditReport {
  std::string suite;
  std::uint64_t seed = 0;
  std::vector<AuditCheck> checks;

  bool all_passed() const;
  double min_margin() const;
  void append(const AuditReport& other, const std::string& prefix);
};

// Seeded generator for desk-scale instances mixing coverage and explicit
// matroid-term valuations over the full catalog.
struct InstanceParams {
  int min_m = 2, max_m = 8;
  int max_n = 3;
  int max_k = 4;
  bool coverage_only = false;
  int min_k = 1;
};
Instance random_instance(Rng& rng, const InstanceParams& params = {});

// One misreport from the fixed menu, cycled by `kind`: weight jitter (±50%),
// term/point deletion, rank (or cover-set) perturbation, zero report.
MrsValuation perturb_valuation(const MrsValuation& v, int kind, Rng& rng);
inline constexpr int kMisreportKinds = 4;

// Exact truth-vs-lie utility margins for every player over a seeded misreport
// menu; each margin must be >= −1e−4·f_upper.
AuditReport audit_truthfulness(const Instance& inst, int misreports_per_player,
                               std::uint64_t seed, const MechanismOptions& opts = {});

// Expected welfare at x* against the brute-force optimum; the threshold
// (1−1/e) is relaxed only by the certified solver gap and, for the
// noise-augmented scheme, the cancellation weight.
AuditReport audit_approximation(const Instance& inst, const MechanismOptions& opts = {});

// Individual rationality and nonnegativity of exact expected payments,
// margins against −1e−6·f_upper.
AuditReport audit_payment_properties(const Instance& inst,
                                     const MechanismOptions& opts = {});

// Composed-mechanism guarantee (1−ρ)(1−1/e−μ) + ρ >= 1−1/e with ρ = e·μ,
// μ = 2^(-2nm): the algebraic margin is e·μ², checked together with the
// directly evaluated expression.
AuditCheck composition_bound_check(int n, int m);

// Release-gate bundle: distribution sanity, Hessian decomposition spots,
// approximation, payments, a small truthfulness menu, composition bounds.
AuditReport run_smoke_suite(std::uint64_t seed);

// Approximation + payment audits over `count` generated instances.
AuditReport run_random_suite(int count, std::uint64_t seed,
                             const MechanismOptions& opts = {});

}  // namespace pubproj
