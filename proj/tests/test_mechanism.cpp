#include <doctest.h>

#include <cmath>
#include <vector>

#include "pubproj/mechanism.hpp"
#include "pubproj/verify.hpp"

using namespace pubproj;

namespace {

MrsValuation unit_project(int m, int j, double w = 1.0) {
  return MrsValuation::from_coverage(m, {{"pt", w, SetMask{1} << j}});
}

double tv_distance(const std::vector<double>& a, const std::vector<double>& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += std::abs(a[i] - b[i]);
  return 0.5 * acc;
}

}  // namespace

TEST_CASE("single player, single project: chosen surely, zero payment") {
  Instance inst(1, {unit_project(1, 0)});
  MechanismOutcome out = run_midr(inst);
  CHECK(out.chosen == 0b1);
  CHECK(out.expected_payments[0] == 0.0);
  CHECK(out.payments[0] == 0.0);
  CHECK(out.expected_welfare == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("identical players split no externality") {
  Instance inst(1, {unit_project(1, 0), unit_project(1, 0)});
  MechanismOutcome out = run_midr(inst);
  CHECK(out.chosen == 0b1);
  for (int i = 0; i < 2; ++i)
    CHECK(out.expected_payments[i] == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("unanimous preference selects the preferred project") {
  Instance inst(1, {unit_project(2, 1), unit_project(2, 1, 0.5)});
  MechanismOutcome out = run_midr(inst);
  CHECK(out.solve_report.x_star[0] == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(out.solve_report.x_star[1] == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(out.chosen == 0b10);
}

TEST_CASE("mechanism runs are deterministic given the seed") {
  Instance inst(2, {unit_project(3, 0, 2.0),
                    MrsValuation::from_terms(3, {{1.0, Matroid::uniform(3, 2)}})});
  MechanismOptions opts;
  opts.seed = 41;
  opts.rounding = RoundingScheme::kRkPlus;
  MechanismOutcome a = run_midr(inst, opts);
  MechanismOutcome b = run_midr(inst, opts);
  CHECK(a.chosen == b.chosen);
  CHECK(a.expected_welfare == b.expected_welfare);
  CHECK(a.payments == b.payments);
  CHECK(a.expected_payments == b.expected_payments);
  CHECK(a.solve_report.x_star == b.solve_report.x_star);

  MechanismOptions other = opts;
  other.seed = 42;
  MechanismOutcome c = run_midr(inst, other);
  CHECK(a.expected_payments == c.expected_payments);  // seed moves samples only
  CHECK(a.solve_report.x_star == c.solve_report.x_star);
}

TEST_CASE("expected value under the noise-augmented scheme matches the exact law") {
  MrsValuation v = MrsValuation::from_terms(
      3, {{1.0, Matroid::uniform(3, 2)}, {0.4, Matroid::uniform(3, 1)}});
  std::vector<double> x = {0.8, 0.5, 0.4};
  int k = 2, n = 1;  // mu = 2^-6, exactly representable
  double via_oracle = expected_rounded_value(v, x, k, RoundingScheme::kRkPlus, n);
  ExactDistribution law = exact_distribution_plus(FractionalSolution(x, k), n);
  double via_law = law.expectation([&](SetMask s) { return v.value(s); });
  CHECK(via_oracle == doctest::Approx(via_law).epsilon(1e-12));

  double plain = expected_rounded_value(v, x, k, RoundingScheme::kRk, n);
  ExactDistribution plain_law = exact_distribution(FractionalSolution(x, k));
  CHECK(plain ==
        doctest::Approx(plain_law.expectation([&](SetMask s) { return v.value(s); }))
            .epsilon(1e-12));
}

TEST_CASE("realized payments are unbiased for the exact expected payments") {
  Instance inst(1, {MrsValuation::from_coverage(2, {{"a", 1.0, 0b01}, {"b", 0.8, 0b10}}),
                    MrsValuation::from_coverage(2, {{"c", 0.9, 0b10}})});
  MechanismOptions opts;
  opts.tol = 1e-8;
  MechanismOutcome base = run_midr(inst, opts);

  // Re-run the single-sample estimator many times with fresh streams; its
  // mean must approach the exact expected payment.
  FractionalSolution x_star(base.solve_report.x_star, inst.k);
  int i = 0;  // audit player 1
  FractionalSolution pivot_x(base.pivot_reports[i].x_star, inst.k);
  auto others = [&](SetMask s) {
    double acc = 0.0;
    for (int p = 0; p < inst.n; ++p)
      if (p != i) acc += inst.valuations[p].value(s);
    return acc;
  };
  const int reps = 40000;
  double mean = 0.0, m2 = 0.0;
  Rng rng(Rng::derive(123, 50));
  for (int r = 1; r <= reps; ++r) {
    double est = others(round_k(pivot_x, rng).chosen) - others(round_k(x_star, rng).chosen);
    double delta = est - mean;
    mean += delta / r;
    m2 += delta * (est - mean);
  }
  double se = std::sqrt(m2 / (reps - 1) / reps);
  CHECK(std::abs(mean - base.expected_payments[i]) <= 4.0 * se + 1e-12);
}

TEST_CASE("adaptive sampler reproduces the plain rounding law at the optimum") {
  Instance inst(2, {MrsValuation::from_coverage(2, {{"a", 1.0, 0b01}, {"b", 0.6, 0b10}})});
  AdaptiveSampler sampler(inst);
  const std::vector<double>& x_fine = sampler.estimate_at_level(8);
  ExactDistribution law = exact_distribution(FractionalSolution(x_fine, inst.k));

  std::vector<double> freq(4, 0.0);
  const int samples = 20000;
  double refinements_total = 0.0;
  for (int s = 0; s < samples; ++s) {
    Rng rng = Rng::derive(777, 100 + s);
    AdaptiveStats stats;
    freq[sampler.sample(rng, &stats)] += 1.0;
    refinements_total += stats.refinements;
    CHECK(stats.rounds == stats.refinements + 1);
    CHECK(stats.final_delta > 0.0);
  }
  for (double& f : freq) f /= samples;
  CHECK(tv_distance(freq, law.probs()) < 0.03);
  // P(>= t refinements) <= 2^(1-t), so the mean refinement count is <= 2.
  CHECK(refinements_total / samples <= 2.0);

  // deterministic given the stream
  Rng r1 = Rng::derive(5, 0), r2 = Rng::derive(5, 0);
  CHECK(sampler.sample(r1) == sampler.sample(r2));
}

TEST_CASE("adaptive sampler rejects unconditioned programs") {
  Instance inst(1, {unit_project(2, 0)});  // k = 1: noise term is linear
  CHECK_THROWS_AS(AdaptiveSampler{inst}, InputError);
  CHECK_THROWS_AS(sample_adaptive(inst, 1), InputError);
}

TEST_CASE("composed mechanism: branch frequency and welfare mixture") {
  Instance inst(1, {unit_project(2, 0, 1.0), unit_project(2, 1, 0.7)});
  // n=2, m=2: branch probability e/256, mixture weight the same
  MechanismOptions opts;
  int branch = 0;
  MechanismOutcome last_plain = run_midr(inst, [&] {
    MechanismOptions o = opts;
    o.rounding = RoundingScheme::kRkPlus;
    return o;
  }());
  double rho = std::exp(1.0) * std::exp2(-8.0);
  for (std::uint64_t seed = 0; seed < 400; ++seed) {
    opts.seed = seed;
    MechanismOutcome out = run_composed(inst, opts);
    if (out.rng_trace.composed_exact_branch) {
      ++branch;
      CHECK(out.chosen == brute_force_opt(inst).best);
    }
    CHECK(out.expected_welfare ==
          doctest::Approx(rho * brute_force_opt(inst).welfare +
                          (1 - rho) * last_plain.expected_welfare)
              .epsilon(1e-9));
    CHECK_FALSE(out.rng_trace.composed_payments_truncated);
  }
  // 400 draws at p ~ 1.06e-2: expect ~4, allow a wide window
  CHECK(branch >= 1);
  CHECK(branch <= 20);
}

TEST_CASE("composed mechanism prices the mixture") {
  Instance inst(1, {MrsValuation::from_coverage(2, {{"a", 1.0, 0b01}}),
                    MrsValuation::from_coverage(2, {{"b", 0.5, 0b10}})});
  MechanismOptions opts;
  opts.seed = 3;
  MechanismOutcome composed = run_composed(inst, opts);
  MechanismOptions plus = opts;
  plus.rounding = RoundingScheme::kRkPlus;
  MechanismOutcome midr = run_midr(inst, plus);

  double rho = std::exp(1.0) * std::exp2(-8.0);
  for (int i = 0; i < 2; ++i) {
    SetMask bf = brute_force_opt(inst).best;
    SetMask bf_pivot = brute_force_opt(inst.with_player_zeroed(i)).best;
    double others_bf = 0.0, others_bfp = 0.0;
    for (int p = 0; p < 2; ++p)
      if (p != i) {
        others_bf += inst.valuations[p].value(bf);
        others_bfp += inst.valuations[p].value(bf_pivot);
      }
    double want = rho * (others_bfp - others_bf) + (1 - rho) * midr.expected_payments[i];
    CHECK(composed.expected_payments[i] == doctest::Approx(want).epsilon(1e-12));
  }
}

TEST_CASE("payments wrapper matches the full mechanism run") {
  Instance inst(1, {unit_project(2, 0), unit_project(2, 1, 0.4)});
  MechanismOptions opts;
  opts.seed = 9;
  Payments pay = compute_payments(inst, opts);
  MechanismOutcome out = run_midr(inst, opts);
  CHECK(pay.expected == out.expected_payments);
  CHECK(pay.realized == out.payments);
}
