#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "pubproj/rng.hpp"
#include "pubproj/solver.hpp"

using namespace pubproj;

namespace {

// Strongly concave synthetic objective f(x) = C − ‖x−c‖² with a known
// optimum; its curvature constant is exactly 2.
class QuadObjective : public Objective {
 public:
  QuadObjective(std::vector<double> c, int k, double upper)
      : c_(std::move(c)), k_(k), upper_(upper) {}

  int dimension() const override { return static_cast<int>(c_.size()); }
  int cardinality_bound() const override { return k_; }
  double upper_bound() const override { return upper_; }
  double value(std::span<const double> x) const override {
    double d2 = 0.0;
    for (std::size_t j = 0; j < c_.size(); ++j) d2 += (x[j] - c_[j]) * (x[j] - c_[j]);
    return upper_ - d2;
  }
  void gradient(std::span<const double> x, std::span<double> out) const override {
    for (std::size_t j = 0; j < c_.size(); ++j) out[j] = -2.0 * (x[j] - c_[j]);
  }

 private:
  std::vector<double> c_;
  int k_;
  double upper_;
};

Instance additive_pair() {
  // one player, f(x) = x_1 + 2 x_2 over P(k=1)
  return Instance(1, {MrsValuation::from_coverage(
                         2, {{"a", 1.0, 0b01}, {"b", 2.0, 0b10}})});
}

std::vector<double> random_point(Rng& rng, int m, int k, double shrink = 1.0) {
  std::vector<double> x(m);
  double budget = k * shrink;
  for (double& xj : x) {
    xj = std::min(shrink, budget * rng.next_unit());
    budget -= xj;
  }
  return x;
}

Instance random_instance_local(Rng& rng, int m, int n, int k) {
  std::vector<MrsValuation> vals;
  for (int i = 0; i < n; ++i) {
    if (rng.next_below(2) == 0) {
      std::vector<CoveragePoint> pts;
      int cnt = 2 + static_cast<int>(rng.next_below(3));
      for (int p = 0; p < cnt; ++p)
        pts.push_back({"p" + std::to_string(p), 0.2 + rng.next_unit(),
                       static_cast<SetMask>(1 + rng.next_below((1u << m) - 1))});
      vals.push_back(MrsValuation::from_coverage(m, std::move(pts)));
    } else {
      std::vector<MrsTerm> terms;
      terms.push_back({0.5 + rng.next_unit(),
                       Matroid::uniform(m, 1 + static_cast<int>(rng.next_below(m)))});
      if (rng.next_below(2) == 0) {
        std::vector<std::pair<int, int>> edges;
        for (int j = 0; j < m; ++j)
          edges.emplace_back(static_cast<int>(rng.next_below(4)),
                             static_cast<int>(rng.next_below(4)));
        terms.push_back({0.5 + rng.next_unit(), Matroid::graphic(edges)});
      }
      vals.push_back(MrsValuation::from_terms(m, std::move(terms)));
    }
  }
  return Instance(k, std::move(vals));
}

double vector_rel_error(const std::vector<double>& a, const std::vector<double>& b) {
  double scale = 0.0, diff = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    scale = std::max(scale, std::abs(a[j]));
    diff = std::max(diff, std::abs(a[j] - b[j]));
  }
  return diff / std::max(scale, 1e-12);
}

}  // namespace

TEST_CASE("solver reaches the known optimum of a synthetic quadratic") {
  QuadObjective quad({0.3, 0.55, 0.2}, 2, 4.0);
  SolverOptions opts;
  opts.tol = 1e-10;
  opts.max_iters = 20000;
  SolveReport rep = solve(quad, opts);
  CHECK(rep.duality_gap <= 1e-10 * 4.0);
  for (int j = 0; j < 3; ++j)
    CHECK(rep.x_star[j] == doctest::Approx(std::vector<double>{0.3, 0.55, 0.2}[j])
                               .epsilon(1e-3));
  CHECK(rep.objective_value == doctest::Approx(4.0).epsilon(1e-6));
}

TEST_CASE("delta estimation honors the conditioning bound") {
  std::vector<double> c = {0.3, 0.55, 0.2};
  QuadObjective quad(c, 2, 4.0);
  for (double delta : {0.3, 0.05, 0.005}) {
    EstimateResult est = estimate_solution(quad, delta, 2.0);
    CHECK(est.params.epsilon ==
          doctest::Approx(delta * delta * 2.0 / (2.0 * 4.0)).epsilon(1e-12));
    for (int j = 0; j < 3; ++j) CHECK(std::abs(est.x[j] - c[j]) <= delta);
  }
  QuadObjective quad1(c, 2, 4.0);
  CHECK_THROWS_AS(estimate_solution(quad1, 0.1, 0.0), InputError);
}

TEST_CASE("delta estimation requires the curvature-bearing objective") {
  Instance inst = additive_pair();
  ConvexProgram plain(inst, RoundingScheme::kRk);
  CHECK_THROWS_AS(estimate_solution(plain, 0.1), InputError);
}

TEST_CASE("additive two-project instance solves to the dominant vertex") {
  ConvexProgram prog(additive_pair(), RoundingScheme::kRk);
  SolveReport rep = solve(prog);
  CHECK(rep.x_star[0] == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(rep.x_star[1] == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(rep.objective_value == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(rep.duality_gap <= 1e-6 * prog.upper_bound());
}

TEST_CASE("linear ties break toward the lowest project index") {
  Instance inst(1, {MrsValuation::from_coverage(3, {{"a", 1.0, 0b001},
                                                    {"b", 1.0, 0b010},
                                                    {"c", 0.5, 0b100}})});
  ConvexProgram prog(inst, RoundingScheme::kRk);  // k=1: f = x1 + x2 + 0.5 x3
  SolveReport rep = solve(prog);
  CHECK(rep.x_star[0] == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(rep.x_star[1] == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("zero valuations solve instantly to the origin") {
  Instance inst(2, {MrsValuation::zero(3)});
  ConvexProgram prog(inst, RoundingScheme::kRk);
  SolveReport rep = solve(prog);
  CHECK(rep.objective_value == 0.0);
  CHECK(rep.iterations == 0);
  for (double xj : rep.x_star) CHECK(xj == 0.0);
}

TEST_CASE("production gradient matches finite differences") {
  Rng rng(Rng::derive(21, 0));
  for (int trial = 0; trial < 25; ++trial) {
    int m = 2 + static_cast<int>(rng.next_below(4));
    int k = std::min(m, 1 + static_cast<int>(rng.next_below(3)));
    Instance inst = random_instance_local(rng, m, 1 + rng.next_below(2), k);
    RoundingScheme scheme = trial % 2 ? RoundingScheme::kRkPlus : RoundingScheme::kRk;
    ConvexProgram prog(inst, scheme);
    std::vector<double> x = random_point(rng, m, k, 0.95);
    std::vector<double> g(m);
    prog.gradient(x, g);
    std::vector<double> fd = gradient_fd(prog, x);
    CHECK(vector_rel_error(g, fd) <= 1e-6);
  }
}

TEST_CASE("gradient equals the promise-difference oracle") {
  // Independent path: the j-th partial is the (k−1)-draw lottery value with
  // promise {j} minus the one with no promise, at per-draw marginals x/k.
  Rng rng(Rng::derive(21, 1));
  for (int trial = 0; trial < 15; ++trial) {
    int m = 2 + static_cast<int>(rng.next_below(3));
    int k = std::min(m, 1 + static_cast<int>(rng.next_below(3)));
    Instance inst = random_instance_local(rng, m, 1 + rng.next_below(3), k);
    ConvexProgram prog(inst, RoundingScheme::kRk);
    std::vector<double> x = random_point(rng, m, k);
    std::vector<double> g(m);
    prog.gradient(x, g);
    std::vector<double> z(m);
    for (int j = 0; j < m; ++j) z[j] = x[j] / k;
    for (int j = 0; j < m; ++j) {
      double ref = 0.0;
      for (const auto& v : inst.valuations)
        ref += lottery_value(v, z, k - 1, SetMask{1} << j) -
               lottery_value(v, z, k - 1, 0);
      CHECK(g[j] == doctest::Approx(ref).epsilon(1e-10));
    }
  }
}

TEST_CASE("objective is concave along random segments") {
  Rng rng(Rng::derive(21, 2));
  Instance inst = random_instance_local(rng, 5, 2, 3);
  ConvexProgram prog(inst, RoundingScheme::kRk);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> x = random_point(rng, 5, 3);
    std::vector<double> y = random_point(rng, 5, 3);
    double fx = prog.value(x), fy = prog.value(y);
    for (double t : {0.25, 0.5, 0.75}) {
      std::vector<double> mid(5);
      for (int j = 0; j < 5; ++j) mid[j] = t * x[j] + (1 - t) * y[j];
      CHECK(prog.value(mid) >= t * fx + (1 - t) * fy - 1e-9);
    }
  }
}

TEST_CASE("objective value never decreases across refinement") {
  Rng rng(Rng::derive(21, 3));
  Instance inst = random_instance_local(rng, 5, 2, 2);
  ConvexProgram prog(inst, RoundingScheme::kRk);
  SolverOptions opts;
  opts.max_iters = 1;
  FrankWolfeSolver fw(prog, opts);
  double last = fw.report().objective_value;
  for (int step = 0; step < 40; ++step) {
    double val = fw.refine(0.0).objective_value;
    CHECK(val >= last - 1e-12);
    last = val;
  }
  CHECK(fw.report().x_star.size() == 5);
}

TEST_CASE("solve beats a dense grid over the polytope") {
  Instance inst(2, {MrsValuation::from_coverage(3, {{"a", 1.0, 0b011},
                                                    {"b", 0.7, 0b110},
                                                    {"c", 0.4, 0b101}})});
  ConvexProgram prog(inst, RoundingScheme::kRk);
  SolverOptions opts;
  opts.tol = 1e-8;
  SolveReport rep = solve(prog, opts);

  double best = 0.0;
  const int steps = 20;  // 0.05 grid
  std::vector<double> x(3);
  for (int a = 0; a <= steps; ++a)
    for (int b = 0; b <= steps; ++b)
      for (int c = 0; c <= steps; ++c) {
        if (a + b + c > 2 * steps) continue;
        x = {a / double(steps), b / double(steps), c / double(steps)};
        best = std::max(best, prog.value(x));
      }
  CHECK(rep.objective_value >= best - 1e-8 * prog.upper_bound() - 1e-9);
}

TEST_CASE("scaling every valuation leaves the optimizer in place") {
  Rng rng(Rng::derive(21, 4));
  Instance inst = random_instance_local(rng, 4, 2, 2);
  std::vector<MrsValuation> scaled;
  for (const auto& v : inst.valuations) {
    if (v.rep() == MrsValuation::Rep::kCoverage) {
      auto pts = v.coverage_points();
      for (auto& p : pts) p.weight *= 3.0;
      scaled.push_back(MrsValuation::from_coverage(4, std::move(pts)));
    } else {
      auto terms = v.terms();
      for (auto& t : terms) t.weight *= 3.0;
      scaled.push_back(MrsValuation::from_terms(4, std::move(terms)));
    }
  }
  Instance inst3(2, std::move(scaled));

  const double delta = 0.02;
  EstimateResult a = estimate_solution(ConvexProgram(inst, RoundingScheme::kRkPlus), delta);
  EstimateResult b = estimate_solution(ConvexProgram(inst3, RoundingScheme::kRkPlus), delta);
  for (int j = 0; j < 4; ++j) CHECK(std::abs(a.x[j] - b.x[j]) <= 2 * delta);
}

TEST_CASE("solver option validation") {
  QuadObjective quad({0.5}, 1, 1.0);
  SolverOptions bad;
  bad.tol = 0.0;
  CHECK_THROWS_AS(FrankWolfeSolver(quad, bad), InputError);
  bad.tol = 1e-6;
  bad.max_iters = 0;
  CHECK_THROWS_AS(FrankWolfeSolver(quad, bad), InputError);
}
