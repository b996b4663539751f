// Command-line front end: load instances, run the solver/mechanism/audits,
// emit tables and reproducible JSON artifacts.
#include <cctype>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pubproj/audit.hpp"
#include "pubproj/json_io.hpp"
#include "pubproj/mechanism.hpp"
#include "pubproj/verify.hpp"

namespace {

using namespace pubproj;

struct RunConfig {
  std::string instance_path;
  int k_override = 0;  // 0: take k from the instance file
  double tol = 1e-6;
  int max_iters = 5000;
  std::uint64_t seed = 0;
  std::string rounding = "rk";
  std::string format = "json";
  std::string out_path;
  int enum_cap = kDefaultEnumCap;
  int bf_cap = kDefaultBruteForceCap;
  // audit
  std::string suite = "smoke";
  int count = 20;
  int misreports = 10;
  // distribution
  std::string x_csv;
  std::string from_solve;
  long long mc_samples = 0;
};

RoundingScheme scheme_of(const RunConfig& cfg) {
  return cfg.rounding == "rkplus" ? RoundingScheme::kRkPlus : RoundingScheme::kRk;
}

MechanismOptions mech_opts(const RunConfig& cfg) {
  MechanismOptions o;
  o.rounding = scheme_of(cfg);
  o.tol = cfg.tol;
  o.max_iters = cfg.max_iters;
  o.seed = cfg.seed;
  o.enum_cap = cfg.enum_cap;
  o.bf_cap = cfg.bf_cap;
  return o;
}

Instance load_with_k(const RunConfig& cfg) {
  if (cfg.instance_path.empty()) throw InputError("--instance is required");
  Instance inst = load_instance_file(cfg.instance_path);
  if (cfg.k_override > 0 && cfg.k_override != inst.k)
    return Instance(cfg.k_override, inst.valuations);
  return inst;
}

void emit(const RunConfig& cfg, const std::string& payload) {
  if (cfg.out_path.empty()) {
    std::cout << payload;
    return;
  }
  std::ofstream out(cfg.out_path, std::ios::binary);
  if (!out) throw InputError("cannot open output file: " + cfg.out_path);
  out << payload;
}

std::string fmt(const char* format, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, format, v);
  return buf;
}

std::string braced(SetMask s) { return "{" + set_to_string(s) + "}"; }

Json instance_summary(const Instance& inst) {
  return Json{{"n", inst.n}, {"m", inst.m}, {"k", inst.k}};
}

int cmd_solve(const RunConfig& cfg) {
  Instance inst = load_with_k(cfg);
  ConvexProgram prog(inst, scheme_of(cfg), cfg.enum_cap);
  SolverOptions opts;
  opts.tol = cfg.tol;
  opts.max_iters = cfg.max_iters;
  SolveReport rep = solve(prog, opts);

  Json j;
  j["command"] = "solve";
  j["instance"] = instance_summary(inst);
  j["rounding"] = cfg.rounding;
  j["x_star"] = rep.x_star;
  j["solver"] = solve_report_to_json(rep);
  if (cfg.format == "table") {
    std::ostringstream t;
    t << "solve: n=" << inst.n << " m=" << inst.m << " k=" << inst.k
      << " rounding=" << cfg.rounding << "\n";
    for (int p = 0; p < inst.m; ++p)
      t << "  x[" << (p + 1) << "] = " << fmt("%.12g", rep.x_star[p]) << "\n";
    t << "  objective    = " << fmt("%.12g", rep.objective_value) << "\n"
      << "  duality gap  = " << fmt("%.6g", rep.duality_gap) << "\n"
      << "  iterations   = " << rep.iterations << "\n";
    emit(cfg, t.str());
  } else {
    emit(cfg, canonical_dump(j));
  }
  return 0;
}

int cmd_allocate(const RunConfig& cfg) {
  Instance inst = load_with_k(cfg);
  MechanismOutcome out = run_midr(inst, mech_opts(cfg));

  Json j;
  j["command"] = "allocate";
  j["instance"] = instance_summary(inst);
  Json oj = outcome_to_json(out);
  for (auto& [key, val] : oj.items()) j[key] = val;
  double opt = -1.0, ratio = -1.0;
  if (inst.m <= cfg.bf_cap) {
    opt = brute_force_opt(inst, cfg.bf_cap).welfare;
    ratio = opt > 0 ? out.expected_welfare / opt : 1.0;
    j["brute_force_opt"] = opt;
    j["ratio"] = ratio;
  }
  if (cfg.format == "table") {
    std::ostringstream t;
    t << "allocate: n=" << inst.n << " m=" << inst.m << " k=" << inst.k
      << " rounding=" << cfg.rounding << " seed=" << cfg.seed << "\n"
      << "  chosen set        = " << braced(out.chosen) << "\n"
      << "  expected welfare  = " << fmt("%.12g", out.expected_welfare) << "\n";
    if (opt >= 0)
      t << "  brute-force OPT   = " << fmt("%.12g", opt) << "  (ratio "
        << fmt("%.9f", ratio) << ")\n";
    for (int i = 0; i < inst.n; ++i)
      t << "  player " << (i + 1)
        << ": expected payment = " << fmt("%.12g", out.expected_payments[i])
        << ", realized = " << fmt("%.12g", out.payments[i]) << "\n";
    emit(cfg, t.str());
  } else {
    emit(cfg, canonical_dump(j));
  }
  return 0;
}

int cmd_payments(const RunConfig& cfg) {
  Instance inst = load_with_k(cfg);
  Payments pay = compute_payments(inst, mech_opts(cfg));

  Json j;
  j["command"] = "payments";
  j["instance"] = instance_summary(inst);
  j["expected"] = pay.expected;
  j["realized"] = pay.realized;
  if (cfg.format == "table") {
    std::ostringstream t;
    t << "payments: n=" << inst.n << " m=" << inst.m << " k=" << inst.k << "\n";
    for (int i = 0; i < inst.n; ++i)
      t << "  player " << (i + 1) << ": expected = " << fmt("%.12g", pay.expected[i])
        << ", realized = " << fmt("%.12g", pay.realized[i]) << "\n";
    emit(cfg, t.str());
  } else {
    emit(cfg, canonical_dump(j));
  }
  return 0;
}

int cmd_audit(const RunConfig& cfg) {
  AuditReport report;
  if (!cfg.instance_path.empty()) {
    Instance inst = load_with_k(cfg);
    MechanismOptions o = mech_opts(cfg);
    report.suite = "instance";
    report.seed = cfg.seed;
    report.append(audit_approximation(inst, o), "approx/");
    report.append(audit_payment_properties(inst, o), "payments/");
    report.append(audit_truthfulness(inst, cfg.misreports, cfg.seed, o), "truthful/");
  } else if (cfg.suite == "random") {
    report = run_random_suite(cfg.count, cfg.seed, mech_opts(cfg));
  } else {
    report = run_smoke_suite(cfg.seed);
  }

  if (cfg.format == "table") {
    std::ostringstream t;
    t << "audit suite=" << report.suite << " seed=" << report.seed << "\n";
    for (const auto& c : report.checks) {
      t << "  " << (c.passed ? "[ok]  " : "[FAIL]") << " " << c.name
        << "  margin=" << fmt("%.6g", c.margin);
      if (!c.details.empty()) t << "  (" << c.details << ")";
      t << "\n";
    }
    t << (report.all_passed() ? "all checks passed" : "CHECKS FAILED") << " ("
      << report.checks.size() << " checks, min margin "
      << fmt("%.6g", report.min_margin()) << ")\n";
    emit(cfg, t.str());
  } else {
    Json j = audit_to_json(report);
    Json wrapped;
    wrapped["command"] = "audit";
    for (auto& [key, val] : j.items()) wrapped[key] = val;
    emit(cfg, canonical_dump(wrapped));
  }
  return report.all_passed() ? 0 : 1;
}

std::vector<double> parse_csv_doubles(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t pos = 0;
      out.push_back(std::stod(item, &pos));
      while (pos < item.size() && std::isspace(static_cast<unsigned char>(item[pos]))) ++pos;
      if (pos != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw InputError("--x: cannot parse \"" + item + "\" as a number");
    }
  }
  if (out.empty()) throw InputError("--x: no coordinates given");
  return out;
}

int cmd_distribution(const RunConfig& cfg) {
  std::vector<double> x;
  int k = 0;
  if (!cfg.from_solve.empty()) {
    std::ifstream in(cfg.from_solve, std::ios::binary);
    if (!in) throw InputError("cannot open solve artifact: " + cfg.from_solve);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
      throw InputError(cfg.from_solve + ": " + e.what());
    }
    if (!j.contains("x_star") || !j["x_star"].is_array())
      throw InputError(cfg.from_solve + ": artifact has no \"x_star\" array");
    x = j["x_star"].get<std::vector<double>>();
    if (j.contains("instance") && j["instance"].contains("k"))
      k = j["instance"]["k"].get<int>();
  } else if (!cfg.x_csv.empty()) {
    x = parse_csv_doubles(cfg.x_csv);
  } else {
    throw InputError("distribution needs --x or --from-solve");
  }
  if (cfg.k_override > 0) k = cfg.k_override;
  if (k <= 0) throw InputError("distribution needs --k > 0");

  FractionalSolution fs(std::move(x), k);
  ExactDistribution dist = exact_distribution(fs, cfg.enum_cap);

  std::vector<double> empirical;
  double tv = 0.0;
  if (cfg.mc_samples > 0) {
    empirical.assign(dist.probs().size(), 0.0);
    Rng rng(Rng::derive(cfg.seed, kRoundingStream));
    for (long long s = 0; s < cfg.mc_samples; ++s)
      empirical[round_k(fs, rng).chosen] += 1.0;
    KahanSum acc;
    for (SetMask s = 0; s < dist.probs().size(); ++s) {
      empirical[s] /= static_cast<double>(cfg.mc_samples);
      acc.add(std::abs(empirical[s] - dist.prob(s)));
    }
    tv = 0.5 * acc.get();
  }

  if (cfg.format == "table") {
    std::ostringstream t;
    t << "distribution: m=" << dist.project_count() << " k=" << dist.draw_bound() << "\n";
    KahanSum total;
    for (SetMask s = 0; s < dist.probs().size(); ++s) {
      if (dist.prob(s) == 0.0 && (empirical.empty() || empirical[s] == 0.0)) continue;
      total.add(dist.prob(s));
      t << "  " << braced(s) << ": " << fmt("%.9f", dist.prob(s));
      if (!empirical.empty()) t << "  mc " << fmt("%.9f", empirical[s]);
      t << "\n";
    }
    t << "  sum = " << fmt("%.9f", total.get()) << "\n";
    if (!empirical.empty())
      t << "  tv distance (" << cfg.mc_samples << " samples) = " << fmt("%.6g", tv) << "\n";
    emit(cfg, t.str());
  } else {
    Json j;
    j["command"] = "distribution";
    Json dj = distribution_to_json(dist);
    for (auto& [key, val] : dj.items()) j[key] = val;
    if (!empirical.empty()) {
      j["mc_samples"] = cfg.mc_samples;
      j["mc_seed"] = cfg.seed;
      Json emp = Json::object();
      for (SetMask s = 0; s < dist.probs().size(); ++s)
        if (empirical[s] != 0.0) emp[set_to_string(s)] = empirical[s];
      j["mc_empirical"] = std::move(emp);
      j["mc_tv_distance"] = tv;
    }
    emit(cfg, canonical_dump(j));
  }
  return 0;
}

int cmd_bench(const RunConfig& cfg) {
  struct Case {
    int n, m, k;
  };
  const std::vector<Case> cases = {{1, 4, 2}, {2, 6, 3}, {3, 8, 4}, {2, 10, 3}};
  Json results = Json::array();
  for (std::size_t c = 0; c < cases.size(); ++c) {
    InstanceParams params;
    params.min_m = params.max_m = cases[c].m;
    params.max_n = cases[c].n;
    params.min_k = params.max_k = cases[c].k;
    Rng rng(Rng::derive(cfg.seed, 9000 + c));
    Instance inst = random_instance(rng, params);

    for (RoundingScheme scheme : {RoundingScheme::kRk, RoundingScheme::kRkPlus}) {
      ConvexProgram prog(inst, scheme, cfg.enum_cap);
      SolverOptions opts;
      opts.tol = cfg.tol;
      opts.max_iters = cfg.max_iters;
      auto t0 = std::chrono::steady_clock::now();
      SolveReport rep = solve(prog, opts);
      auto t1 = std::chrono::steady_clock::now();
      double ms = std::chrono::duration<double, std::milli>(t1 - t0).count();

      Json r;
      r["n"] = inst.n;
      r["m"] = inst.m;
      r["k"] = inst.k;
      r["rounding"] = scheme == RoundingScheme::kRkPlus ? "rkplus" : "rk";
      r["objective"] = rep.objective_value;
      r["iterations"] = rep.iterations;
      r["gradient_evals"] = rep.gradient_evals;
      results.push_back(std::move(r));
      std::cerr << "bench n=" << inst.n << " m=" << inst.m << " k=" << inst.k
                << " rounding=" << (scheme == RoundingScheme::kRkPlus ? "rkplus" : "rk")
                << ": " << fmt("%.1f", ms) << " ms, " << rep.iterations
                << " iterations\n";
    }
  }
  Json j;
  j["command"] = "bench";
  j["seed"] = cfg.seed;
  j["results"] = std::move(results);
  emit(cfg, canonical_dump(j));
  return 0;
}

void add_common(CLI::App* cmd, RunConfig& cfg, bool with_instance = true) {
  if (with_instance) cmd->add_option("--instance", cfg.instance_path, "instance JSON file");
  cmd->add_option("--k", cfg.k_override, "override the instance cardinality bound");
  cmd->add_option("--tol", cfg.tol, "relative solver tolerance")->check(CLI::PositiveNumber);
  cmd->add_option("--max-iters", cfg.max_iters, "solver iteration cap")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--seed", cfg.seed, "master seed (all commands deterministic given it)");
  cmd->add_option("--rounding", cfg.rounding, "rounding scheme")
      ->check(CLI::IsMember({"rk", "rkplus"}));
  cmd->add_option("--format", cfg.format, "output format")
      ->check(CLI::IsMember({"json", "table"}));
  cmd->add_option("--out", cfg.out_path, "write the artifact to this path");
  cmd->add_option("--enum-cap", cfg.enum_cap, "max m for exact enumeration")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--bf-cap", cfg.bf_cap, "max m for brute-force comparisons")
      ->check(CLI::PositiveNumber);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"truthful (1-1/e)-approximation mechanism for combinatorial public projects"};
  app.require_subcommand(1);
  RunConfig cfg;

  CLI::App* solve_cmd = app.add_subcommand("solve", "solve the expected-welfare relaxation");
  add_common(solve_cmd, cfg);

  CLI::App* alloc_cmd = app.add_subcommand("allocate", "run the mechanism: solve, round, price");
  add_common(alloc_cmd, cfg);

  CLI::App* pay_cmd = app.add_subcommand("payments", "externality payments only");
  add_common(pay_cmd, cfg);

  CLI::App* audit_cmd = app.add_subcommand("audit", "run property audits");
  add_common(audit_cmd, cfg);
  audit_cmd->add_option("--suite", cfg.suite, "audit suite when no instance is given")
      ->check(CLI::IsMember({"smoke", "random"}));
  audit_cmd->add_option("--count", cfg.count, "instances in the random suite")
      ->check(CLI::PositiveNumber);
  audit_cmd->add_option("--misreports", cfg.misreports, "misreports per player")
      ->check(CLI::PositiveNumber);

  CLI::App* dist_cmd = app.add_subcommand("distribution", "exact rounding distribution at x");
  add_common(dist_cmd, cfg, /*with_instance=*/false);
  dist_cmd->add_option("--x", cfg.x_csv, "marginals, comma separated (e.g. 0.3,0.5)");
  dist_cmd->add_option("--from-solve", cfg.from_solve, "read x* from a solve artifact");
  dist_cmd->add_option("--mc-samples", cfg.mc_samples, "Monte Carlo comparison sample count")
      ->check(CLI::PositiveNumber);

  CLI::App* bench_cmd = app.add_subcommand("bench", "solver benchmark battery");
  add_common(bench_cmd, cfg, /*with_instance=*/false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (solve_cmd->parsed()) return cmd_solve(cfg);
    if (alloc_cmd->parsed()) return cmd_allocate(cfg);
    if (pay_cmd->parsed()) return cmd_payments(cfg);
    if (audit_cmd->parsed()) return cmd_audit(cfg);
    if (dist_cmd->parsed()) return cmd_distribution(cfg);
    if (bench_cmd->parsed()) return cmd_bench(cfg);
  } catch (const InputError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 2;
  } catch (const CapacityError& e) {
    std::cerr << "capacity error: " << e.what() << "\n";
    return 3;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 4;
  }
  return 0;
}
