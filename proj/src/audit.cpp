#include "pubproj/audit.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace pubproj {

bool AuditReport::all_passed() const {
  return std::all_of(checks.begin(), checks.end(),
                     [](const AuditCheck& c) { return c.passed; });
}

double AuditReport::min_margin() const {
  double out = std::numeric_limits<double>::infinity();
  for (const auto& c : checks) out = std::min(out, c.margin);
  return out;
}

void AuditReport::append(const AuditReport& other, const std::string& prefix) {
  for (AuditCheck c : other.checks) {
    c.name = prefix + c.name;
    checks.push_back(std::move(c));
  }
}

namespace {

SolverOptions solver_options(const MechanismOptions& opts) {
  return {.tol = opts.tol, .max_iters = opts.max_iters};
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

std::vector<int> random_permutation(Rng& rng, int m) {
  std::vector<int> perm(m);
  std::iota(perm.begin(), perm.end(), 0);
  for (int i = m - 1; i > 0; --i)
    std::swap(perm[i], perm[static_cast<int>(rng.next_below(i + 1))]);
  return perm;
}

MrsValuation random_coverage_valuation(Rng& rng, int m) {
  int points = 2 + static_cast<int>(rng.next_below(5));
  std::vector<CoveragePoint> universe;
  universe.reserve(points);
  SetMask all = full_mask(m);
  for (int p = 0; p < points; ++p) {
    CoveragePoint pt;
    pt.id = "u" + std::to_string(p);
    pt.weight = 0.1 + 2.9 * rng.next_unit();
    pt.covered_by = 1 + rng.next_below(all);  // nonempty subset
    universe.push_back(std::move(pt));
  }
  return MrsValuation::from_coverage(m, std::move(universe));
}

MrsValuation random_terms_valuation(Rng& rng, int m) {
  int count = 1 + static_cast<int>(rng.next_below(3));
  std::vector<MrsTerm> terms;
  terms.reserve(count);
  for (int t = 0; t < count; ++t) {
    double weight = 0.1 + 1.9 * rng.next_unit();
    switch (rng.next_below(3)) {
      case 0:
        terms.push_back({weight, Matroid::uniform(m, static_cast<int>(rng.next_below(m + 1)))});
        break;
      case 1: {
        std::vector<int> perm = random_permutation(rng, m);
        int block_count = 1 + static_cast<int>(rng.next_below(m));
        std::vector<std::vector<int>> blocks(block_count);
        for (int j = 0; j < m; ++j)
          blocks[rng.next_below(block_count)].push_back(perm[j]);
        std::vector<int> caps(block_count);
        for (int& c : caps) c = static_cast<int>(rng.next_below(3));
        terms.push_back({weight, Matroid::partition(m, std::move(blocks), std::move(caps))});
        break;
      }
      default: {
        int vertices = 2 + static_cast<int>(rng.next_below(m));
        std::vector<std::pair<int, int>> edges(m);
        for (auto& [u, w] : edges) {
          u = static_cast<int>(rng.next_below(vertices));
          w = static_cast<int>(rng.next_below(vertices));
        }
        terms.push_back({weight, Matroid::graphic(std::move(edges))});
        break;
      }
    }
  }
  return MrsValuation::from_terms(m, std::move(terms));
}

}  // namespace

Instance random_instance(Rng& rng, const InstanceParams& params) {
  for (;;) {
    int m = params.min_m + static_cast<int>(rng.next_below(params.max_m - params.min_m + 1));
    int n = 1 + static_cast<int>(rng.next_below(params.max_n));
    int k_hi = std::min(params.max_k, m);
    int k_lo = std::min(params.min_k, k_hi);
    int k = k_lo + static_cast<int>(rng.next_below(k_hi - k_lo + 1));
    std::vector<MrsValuation> vals;
    vals.reserve(n);
    for (int i = 0; i < n; ++i) {
      bool coverage = params.coverage_only || rng.next_below(2) == 0;
      vals.push_back(coverage ? random_coverage_valuation(rng, m)
                              : random_terms_valuation(rng, m));
    }
    Instance inst(k, std::move(vals));
    if (inst.f_upper() > 0.1) return inst;
  }
}

MrsValuation perturb_valuation(const MrsValuation& v, int kind, Rng& rng) {
  int m = v.project_count();
  kind %= kMisreportKinds;
  if (kind == 3) return MrsValuation::zero(m);
  if (v.rep() == MrsValuation::Rep::kCoverage) {
    std::vector<CoveragePoint> points = v.coverage_points();
    if (points.empty()) return MrsValuation::zero(m);
    switch (kind) {
      case 0:
        for (auto& p : points) p.weight *= 0.5 + rng.next_unit();
        break;
      case 1:
        points.erase(points.begin() + rng.next_below(points.size()));
        break;
      default:
        points[rng.next_below(points.size())].covered_by =
            1 + rng.next_below(full_mask(m));
        break;
    }
    return MrsValuation::from_coverage(m, std::move(points));
  }
  std::vector<MrsTerm> terms = v.terms();
  if (terms.empty()) return MrsValuation::zero(m);
  switch (kind) {
    case 0:
      for (auto& t : terms) t.weight *= 0.5 + rng.next_unit();
      break;
    case 1:
      terms.erase(terms.begin() + rng.next_below(terms.size()));
      break;
    default: {
      MrsTerm& t = terms[rng.next_below(terms.size())];
      int shift = rng.next_below(2) == 0 ? 1 : -1;
      switch (t.matroid.kind()) {
        case Matroid::Kind::kUniform:
          t.matroid = Matroid::uniform(
              m, std::clamp(t.matroid.uniform_rank() + shift, 0, m));
          break;
        case Matroid::Kind::kPartition: {
          auto blocks = t.matroid.blocks();
          auto caps = t.matroid.caps();
          int b = static_cast<int>(rng.next_below(caps.size()));
          caps[b] = std::max(0, caps[b] + shift);
          t.matroid = Matroid::partition(m, std::move(blocks), std::move(caps));
          break;
        }
        case Matroid::Kind::kGraphic:
          t.matroid = Matroid::uniform(
              m, std::clamp(t.matroid.rank() + shift, 0, m));
          break;
      }
      break;
    }
  }
  return MrsValuation::from_terms(m, std::move(terms));
}

namespace {

double others_value_at(const Instance& inst, int skip, std::span<const double> x,
                       RoundingScheme scheme, int enum_cap) {
  KahanSum acc;
  for (int i = 0; i < inst.n; ++i)
    if (i != skip)
      acc.add(expected_rounded_value(inst.valuations[i], x, inst.k, scheme, inst.n,
                                     enum_cap));
  return acc.get();
}

}  // namespace

AuditReport audit_truthfulness(const Instance& inst, int misreports_per_player,
                               std::uint64_t seed, const MechanismOptions& opts) {
  AuditReport rep{"truthfulness", seed, {}};
  double fu = inst.f_upper();
  double thresh = -1e-4 * fu;

  ConvexProgram prog(inst, opts.rounding, opts.enum_cap);
  SolveReport truth = solve(prog, solver_options(opts));

  std::vector<double> pivot_term(inst.n);
  for (int i = 0; i < inst.n; ++i) {
    ConvexProgram pivot_prog(inst.with_player_zeroed(i), opts.rounding, opts.enum_cap);
    SolveReport pivot = solve(pivot_prog, solver_options(opts));
    pivot_term[i] =
        others_value_at(inst, i, pivot.x_star, opts.rounding, opts.enum_cap);
  }

  static constexpr const char* kKindName[kMisreportKinds] = {
      "weight jitter", "deletion", "rank perturbation", "zero report"};
  for (int i = 0; i < inst.n; ++i) {
    double truth_utility =
        expected_rounded_value(inst.valuations[i], truth.x_star, inst.k, opts.rounding,
                               inst.n, opts.enum_cap) +
        others_value_at(inst, i, truth.x_star, opts.rounding, opts.enum_cap) -
        pivot_term[i];
    Rng rng = Rng::derive(seed, 7001 + static_cast<std::uint64_t>(i));
    for (int t = 0; t < misreports_per_player; ++t) {
      MrsValuation lie = perturb_valuation(inst.valuations[i], t, rng);
      Instance lied = inst.with_valuation(i, lie);
      ConvexProgram lie_prog(lied, opts.rounding, opts.enum_cap);
      SolveReport lie_solve = solve(lie_prog, solver_options(opts));
      double lie_utility =
          expected_rounded_value(inst.valuations[i], lie_solve.x_star, inst.k,
                                 opts.rounding, inst.n, opts.enum_cap) +
          others_value_at(inst, i, lie_solve.x_star, opts.rounding, opts.enum_cap) -
          pivot_term[i];
      double margin = truth_utility - lie_utility;
      AuditCheck check;
      check.name = "player " + std::to_string(i + 1) + " misreport " +
                   std::to_string(t + 1) + " (" + kKindName[t % kMisreportKinds] + ")";
      check.margin = margin;
      check.passed = margin >= thresh;
      check.details = "threshold " + fmt(thresh);
      rep.checks.push_back(std::move(check));
    }
  }
  return rep;
}

AuditReport audit_approximation(const Instance& inst, const MechanismOptions& opts) {
  AuditReport rep{"approximation", opts.seed, {}};
  ConvexProgram prog(inst, opts.rounding, opts.enum_cap);
  SolveReport solve_rep = solve(prog, solver_options(opts));
  BruteForceResult bf = brute_force_opt(inst, opts.bf_cap);

  AuditCheck check;
  check.name = "approximation ratio";
  if (bf.welfare <= 0.0) {
    check.passed = true;
    check.margin = 0.0;
    check.details = "optimum is 0; nothing to lose";
  } else {
    double ratio = solve_rep.objective_value / bf.welfare;
    double threshold = (1.0 - std::exp(-1.0)) - solve_rep.duality_gap / bf.welfare -
                       prog.noise_weight_mu();
    check.margin = ratio - threshold;
    check.passed = check.margin >= -1e-12;
    check.details = "ratio " + fmt(ratio) + " vs threshold " + fmt(threshold) +
                    ", opt " + fmt(bf.welfare);
  }
  rep.checks.push_back(std::move(check));
  return rep;
}

AuditReport audit_payment_properties(const Instance& inst,
                                     const MechanismOptions& opts) {
  AuditReport rep{"payments", opts.seed, {}};
  double thresh = -1e-6 * inst.f_upper();
  MechanismOutcome out = run_midr(inst, opts);
  for (int i = 0; i < inst.n; ++i) {
    double ev = expected_rounded_value(inst.valuations[i], out.solve_report.x_star,
                                       inst.k, opts.rounding, inst.n, opts.enum_cap);
    AuditCheck ir;
    ir.name = "player " + std::to_string(i + 1) + " individual rationality";
    ir.margin = ev - out.expected_payments[i];
    ir.passed = ir.margin >= thresh;
    ir.details = "threshold " + fmt(thresh);
    rep.checks.push_back(std::move(ir));

    AuditCheck nonneg;
    nonneg.name = "player " + std::to_string(i + 1) + " nonnegative payment";
    nonneg.margin = out.expected_payments[i];
    nonneg.passed = nonneg.margin >= thresh;
    nonneg.details = "threshold " + fmt(thresh);
    rep.checks.push_back(std::move(nonneg));
  }
  return rep;
}

AuditCheck composition_bound_check(int n, int m) {
  double mu = std::exp2(-2.0 * n * m);
  double rho = std::exp(1.0) * mu;
  double expr = (1.0 - rho) * (1.0 - std::exp(-1.0) - mu) + rho;
  double algebraic = std::exp(1.0) * mu * mu;  // expr − (1−1/e), simplified
  double direct = expr - (1.0 - std::exp(-1.0));
  AuditCheck check;
  check.name = "composition bound n=" + std::to_string(n) + " m=" + std::to_string(m);
  check.margin = algebraic;
  check.passed = algebraic >= 0.0 && direct >= -1e-15;
  check.details = "direct margin " + fmt(direct);
  return check;
}

AuditReport run_smoke_suite(std::uint64_t seed) {
  AuditReport rep{"smoke", seed, {}};
  MechanismOptions opts;
  opts.seed = seed;

  for (int c = 0; c < 3; ++c) {
    Rng rng = Rng::derive(seed, 100 + c);
    InstanceParams params;
    params.max_m = 6;
    params.max_n = 2;
    params.max_k = 3;
    Instance inst = random_instance(rng, params);
    std::string prefix = "instance " + std::to_string(c + 1) + ": ";
    rep.append(audit_approximation(inst, opts), prefix);
    rep.append(audit_payment_properties(inst, opts), prefix);
    if (c == 0) rep.append(audit_truthfulness(inst, 2, seed, opts), prefix);
  }

  {
    // Curvature decomposition spot check on a k >= 2 instance.
    Rng rng = Rng::derive(seed, 200);
    InstanceParams params;
    params.max_m = 5;
    params.max_n = 1;
    params.min_k = 2;
    params.max_k = 3;
    Instance inst = random_instance(rng, params);
    std::vector<double> x(inst.m);
    double total = 0.0;
    for (double& xj : x) {
      xj = 0.05 + 0.9 * rng.next_unit();
      total += xj;
    }
    if (total > inst.k - 0.05)
      for (double& xj : x) xj *= (inst.k - 0.05) / total;
    HessianCheckReport hess = check_hessian_decomposition(
        inst.valuations[0], FractionalSolution(x, inst.k));
    AuditCheck check;
    check.name = "curvature decomposition";
    check.passed = hess.passed;
    check.margin = hess.entry_tol - hess.max_entry_diff;
    check.details = "max entry diff " + fmt(hess.max_entry_diff) + ", max eig " +
                    fmt(hess.max_eig_numerical) +
                    (hess.note.empty() ? "" : "; " + hess.note);
    rep.checks.push_back(std::move(check));
  }

  {
    // Distribution sanity: marginals match the closed-form inclusion
    // probability and the masses sum to 1.
    Rng rng = Rng::derive(seed, 300);
    int m = 5, k = 3;
    std::vector<double> x(m);
    double total = 0.0;
    for (double& xj : x) {
      xj = rng.next_unit();
      total += xj;
    }
    if (total > k)
      for (double& xj : x) xj *= k / total;
    FractionalSolution fx(x, k);
    ExactDistribution dist = exact_distribution(fx);
    double worst = 0.0;
    for (int j = 0; j < m; ++j)
      worst = std::max(worst,
                       std::abs(dist.marginal(j) - inclusion_probability(fx, j)));
    KahanSum mass;
    for (double p : dist.probs()) mass.add(p);
    AuditCheck check;
    check.name = "distribution marginals";
    check.margin = 1e-9 - worst;
    check.passed = worst <= 1e-9 && std::abs(mass.get() - 1.0) <= 1e-9;
    check.details = "worst marginal gap " + fmt(worst);
    rep.checks.push_back(std::move(check));
  }

  for (int n : {1, 2, 3})
    for (int m : {1, 4, 8}) rep.checks.push_back(composition_bound_check(n, m));
  return rep;
}

AuditReport run_random_suite(int count, std::uint64_t seed,
                             const MechanismOptions& opts) {
  AuditReport rep{"random", seed, {}};
  for (int c = 0; c < count; ++c) {
    Rng rng = Rng::derive(seed, 1000 + c);
    Instance inst = random_instance(rng);
    MechanismOptions inst_opts = opts;
    inst_opts.seed = seed + c;
    std::string prefix = "instance " + std::to_string(c + 1) + ": ";
    rep.append(audit_approximation(inst, inst_opts), prefix);
    rep.append(audit_payment_properties(inst, inst_opts), prefix);
  }
  return rep;
}

}  // namespace pubproj
