#include "pubproj/mechanism.hpp"

#include <algorithm>
#include <cmath>

#include "pubproj/verify.hpp"

namespace pubproj {

double expected_rounded_value(const MrsValuation& v, std::span<const double> x, int k,
                              RoundingScheme scheme, int player_count, int enum_cap) {
  int m = v.project_count();
  if (static_cast<int>(x.size()) != m)
    throw InputError("point length does not match project count");
  std::vector<double> z(m);
  for (int j = 0; j < m; ++j) z[j] = x[j] / k;
  double base = lottery_value(v, z, k, 0, enum_cap);
  if (scheme == RoundingScheme::kRk) return base;
  double mu = std::exp2(-2.0 * player_count * m);
  KahanSum incl;
  for (int j = 0; j < m; ++j)
    incl.add(1.0 - ipow(std::max(0.0, 1.0 - z[j]), k));
  return (1.0 - mu) * base +
         mu / (static_cast<double>(m) * m) * v.singleton_sum() * incl.get();
}

namespace {

SolverOptions solver_options(const MechanismOptions& opts) {
  return {.tol = opts.tol, .max_iters = opts.max_iters};
}

// Σ_{i'≠skip} E_{S ~ rounding(x)}[v_{i'}(S)], the externality side of the
// payment formula.
double others_expected(const Instance& inst, int skip, std::span<const double> x,
                       RoundingScheme scheme, int enum_cap) {
  KahanSum acc;
  for (int i = 0; i < inst.n; ++i)
    if (i != skip)
      acc.add(expected_rounded_value(inst.valuations[i], x, inst.k, scheme, inst.n,
                                     enum_cap));
  return acc.get();
}

double others_realized(const Instance& inst, int skip, SetMask s) {
  KahanSum acc;
  for (int i = 0; i < inst.n; ++i)
    if (i != skip) acc.add(inst.valuations[i].value(s));
  return acc.get();
}

RoundingOutcome sample_rounding(const FractionalSolution& x, RoundingScheme scheme,
                                int player_count, Rng& rng) {
  return scheme == RoundingScheme::kRk ? round_k(x, rng)
                                       : round_k_plus(x, player_count, rng);
}

}  // namespace

MechanismOutcome run_midr(const Instance& inst, const MechanismOptions& opts) {
  MechanismOutcome out;
  out.scheme = opts.rounding;
  out.rng_trace.master_seed = opts.seed;

  ConvexProgram prog(inst, opts.rounding, opts.enum_cap);
  out.solve_report = solve(prog, solver_options(opts));
  FractionalSolution x_star(out.solve_report.x_star, inst.k);

  Rng rounding_rng = Rng::derive(opts.seed, kRoundingStream);
  RoundingOutcome ro = sample_rounding(x_star, opts.rounding, inst.n, rounding_rng);
  out.chosen = ro.chosen;
  out.rng_trace.rounding = ro.trace;

  KahanSum welfare;
  for (int i = 0; i < inst.n; ++i)
    welfare.add(expected_rounded_value(inst.valuations[i], x_star.x, inst.k,
                                       opts.rounding, inst.n, opts.enum_cap));
  out.expected_welfare = welfare.get();

  out.payments.resize(inst.n);
  out.expected_payments.resize(inst.n);
  out.pivot_reports.reserve(inst.n);
  for (int i = 0; i < inst.n; ++i) {
    Instance pivot = inst.with_player_zeroed(i);
    ConvexProgram pivot_prog(pivot, opts.rounding, opts.enum_cap);
    SolveReport pivot_rep = solve(pivot_prog, solver_options(opts));
    FractionalSolution y(pivot_rep.x_star, inst.k);

    double pivot_term = others_expected(inst, i, y.x, opts.rounding, opts.enum_cap);
    double base_term = others_expected(inst, i, x_star.x, opts.rounding, opts.enum_cap);
    out.expected_payments[i] = pivot_term - base_term;

    Rng pivot_rng = Rng::derive(opts.seed, kPivotStreamBase + i);
    RoundingOutcome ti = sample_rounding(y, opts.rounding, inst.n, pivot_rng);
    out.payments[i] =
        others_realized(inst, i, ti.chosen) - others_realized(inst, i, out.chosen);

    out.pivot_reports.push_back(std::move(pivot_rep));
  }
  return out;
}

Payments compute_payments(const Instance& inst, const MechanismOptions& opts) {
  MechanismOutcome out = run_midr(inst, opts);
  return {std::move(out.payments), std::move(out.expected_payments)};
}

AdaptiveSampler::AdaptiveSampler(const Instance& inst, const MechanismOptions& opts)
    : prog_(inst, RoundingScheme::kRkPlus, opts.enum_cap),
      solver_(prog_, solver_options(opts)) {
  lambda_ = prog_.curvature_lambda();
  if (!(lambda_ > 0.0))
    throw InputError(
        "adaptive sampling needs the noise-augmented objective's curvature "
        "bound (k >= 2 and representable cancellation weight)");
}

const std::vector<double>& AdaptiveSampler::estimate_at_level(int t) {
  int m = prog_.dimension();
  double delta0 = 1.0 / (2.0 * m * m);
  while (static_cast<int>(levels_.size()) <= t) {
    double delta = delta0 * std::exp2(-static_cast<double>(levels_.size()));
    ConditioningParams params =
        ConditioningParams::from_delta(delta, lambda_, prog_.upper_bound());
    const SolveReport& rep = solver_.refine(params.epsilon * prog_.upper_bound());
    levels_.push_back(rep.x_star);
  }
  return levels_[t];
}

SetMask AdaptiveSampler::sample(Rng& rng, AdaptiveStats* stats) {
  int m = prog_.dimension();
  int k = prog_.cardinality_bound();
  double delta0 = 1.0 / (2.0 * m * m);
  std::vector<double> p(k);
  for (double& u : p) u = rng.next_unit();

  for (int t = 0; t <= kRoundCap; ++t) {
    const std::vector<double>& x = estimate_at_level(t);
    double delta = delta0 * std::exp2(-t);
    double zone = delta * m / k;
    std::vector<double> c(m + 1, 0.0);
    for (int j = 0; j < m; ++j) c[j + 1] = c[j] + x[j] / k;
    bool uncertain = false;
    for (double u : p) {
      for (int j = 1; j <= m && !uncertain; ++j)
        if (std::abs(u - c[j]) <= zone) uncertain = true;
      if (uncertain) break;
    }
    if (uncertain) continue;

    SetMask chosen = 0;
    for (double u : p) {
      auto it = std::upper_bound(c.begin(), c.end(), u);
      int idx = static_cast<int>(it - c.begin()) - 1;
      if (idx < m) chosen |= SetMask{1} << idx;
    }
    if (stats) {
      stats->rounds = t + 1;
      stats->refinements = t;
      stats->final_delta = delta;
    }
    return chosen;
  }
  throw NumericError("adaptive sampling exhausted its refinement rounds");
}

SetMask sample_adaptive(const Instance& inst, std::uint64_t seed, AdaptiveStats* stats,
                        const MechanismOptions& opts) {
  AdaptiveSampler sampler(inst, opts);
  Rng rng = Rng::derive(seed, kRoundingStream);
  return sampler.sample(rng, stats);
}

MechanismOutcome run_composed(const Instance& inst, const MechanismOptions& opts) {
  MechanismOptions midr_opts = opts;
  midr_opts.rounding = RoundingScheme::kRkPlus;

  // Branch weight e·2^(-2nm) = (e/4)·2^(-(2nm-2)), taken exactly: the power
  // of two from raw bits, the e/4 factor from one uniform.
  std::uint64_t e2nm = 2ull * static_cast<std::uint64_t>(inst.n) *
                       static_cast<std::uint64_t>(inst.m);
  Rng branch_rng = Rng::derive(opts.seed, kCompositionStream);
  bool exact_branch =
      branch_rng.bernoulli_pow2(e2nm - 2) && branch_rng.next_unit() < std::exp(1.0) / 4.0;

  MechanismOutcome out = run_midr(inst, midr_opts);
  out.rng_trace.composed_exact_branch = exact_branch;

  double rho = std::exp(1.0) * std::exp2(-static_cast<double>(e2nm));
  if (exact_branch) {
    BruteForceResult bf = brute_force_opt(inst, opts.bf_cap);  // cap -> capacity error
    out.chosen = bf.best;
  }

  // Exact expectations over the composed rule mix the brute-force terms in at
  // weight rho. When rho underflows the mixture equals the plain terms; when
  // m is above the brute-force cap the correction (bounded by rho·f_upper <
  // e·2^-2nm·f_upper) is dropped and flagged.
  bool mix = rho > 0.0 && inst.m <= opts.bf_cap;
  if (rho > 0.0 && inst.m > opts.bf_cap)
    out.rng_trace.composed_payments_truncated = true;
  BruteForceResult bf_full;
  if (mix) {
    bf_full = brute_force_opt(inst, opts.bf_cap);
    out.expected_welfare = rho * bf_full.welfare + (1.0 - rho) * out.expected_welfare;
  }

  for (int i = 0; i < inst.n; ++i) {
    // Realized estimate against a composed pivot sample (fresh branch coin).
    Rng pivot_rng = Rng::derive(opts.seed, kCompositionStream + 1 + i);
    bool pivot_exact = pivot_rng.bernoulli_pow2(e2nm - 2) &&
                       pivot_rng.next_unit() < std::exp(1.0) / 4.0;
    SetMask t_i;
    if (pivot_exact) {
      t_i = brute_force_opt(inst.with_player_zeroed(i), opts.bf_cap).best;
    } else {
      FractionalSolution y(out.pivot_reports[i].x_star, inst.k);
      t_i = round_k_plus(y, inst.n, pivot_rng).chosen;
    }
    out.payments[i] =
        others_realized(inst, i, t_i) - others_realized(inst, i, out.chosen);
    if (mix) {
      BruteForceResult bf_pivot =
          brute_force_opt(inst.with_player_zeroed(i), opts.bf_cap);
      out.expected_payments[i] = rho * (others_realized(inst, i, bf_pivot.best) -
                                        others_realized(inst, i, bf_full.best)) +
                                 (1.0 - rho) * out.expected_payments[i];
    }
  }
  return out;
}

}  // namespace pubproj
