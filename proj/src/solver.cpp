#include "pubproj/solver.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace pubproj {

ConvexProgram::ConvexProgram(Instance inst, RoundingScheme scheme, int enum_cap)
    : inst_(std::move(inst)), scheme_(scheme), enum_cap_(enum_cap) {
  f_upper_ = inst_.f_upper();
  if (scheme_ == RoundingScheme::kRkPlus) {
    mu_ = std::exp2(-2.0 * inst_.n * inst_.m);
    noise_coeff_ = mu_ / (static_cast<double>(inst_.m) * inst_.m) * inst_.singleton_sum();
    if (inst_.k >= 2 && mu_ > 0.0 && f_upper_ > 0.0)
      lambda_ = mu_ / (static_cast<double>(inst_.m) * inst_.m) * f_upper_ *
                std::exp(-1.0);
  }
}

double ConvexProgram::value(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != inst_.m)
    throw InputError("point length does not match project count");
  std::vector<double> z(inst_.m);
  for (int j = 0; j < inst_.m; ++j) z[j] = x[j] / inst_.k;
  KahanSum base;
  for (const auto& v : inst_.valuations)
    base.add(lottery_value(v, z, inst_.k, 0, enum_cap_));
  if (scheme_ == RoundingScheme::kRk) return base.get();
  KahanSum incl;
  for (int j = 0; j < inst_.m; ++j)
    incl.add(1.0 - ipow(std::max(0.0, 1.0 - z[j]), inst_.k));
  return (1.0 - mu_) * base.get() + noise_coeff_ * incl.get();
}

void ConvexProgram::gradient(std::span<const double> x, std::span<double> out) const {
  if (static_cast<int>(x.size()) != inst_.m || out.size() != x.size())
    throw InputError("point length does not match project count");
  std::fill(out.begin(), out.end(), 0.0);
  for (const auto& v : inst_.valuations) {
    std::vector<double> g = lottery_gradient(v, x, inst_.k, enum_cap_);
    for (int j = 0; j < inst_.m; ++j) out[j] += g[j];
  }
  if (scheme_ == RoundingScheme::kRk) return;
  for (int j = 0; j < inst_.m; ++j) {
    double base = std::max(0.0, 1.0 - x[j] / inst_.k);
    out[j] = (1.0 - mu_) * out[j] + noise_coeff_ * ipow(base, inst_.k - 1);
  }
}

namespace {

void check_finite(double v, const char* what) {
  if (!std::isfinite(v))
    throw NumericError(std::string(what) + " evaluated to a non-finite value");
}

// Linear maximization over P: the top-min(k,m) positive gradient
// coordinates at value 1, ties broken toward the lowest index.
SetMask lmo_vertex(std::span<const double> g, int k) {
  int m = static_cast<int>(g.size());
  std::vector<int> idx(m);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](int a, int b) {
    if (g[a] != g[b]) return g[a] > g[b];
    return a < b;
  });
  SetMask s = 0;
  int limit = std::min(k, m);
  for (int t = 0; t < limit && g[idx[t]] > 0.0; ++t) s |= SetMask{1} << idx[t];
  return s;
}

double dot_mask(std::span<const double> g, SetMask s) {
  double out = 0.0;
  for (int j : set_to_indices(s)) out += g[j];
  return out;
}

}  // namespace

FrankWolfeSolver::FrankWolfeSolver(const Objective& obj, SolverOptions opts)
    : obj_(&obj), opts_(opts) {
  if (!(opts_.tol > 0.0)) throw InputError("solver tolerance must be positive");
  if (opts_.max_iters < 1) throw InputError("max_iters must be >= 1");
  x_.assign(obj.dimension(), 0.0);
  active_[0] = 1.0;  // start at the origin vertex
  f_val_ = obj.value(x_);
  ++report_.objective_evals;
  check_finite(f_val_, "objective");
  report_.x_star = x_;
  report_.objective_value = f_val_;
}

double FrankWolfeSolver::dot_x(std::span<const double> g) const {
  double out = 0.0;
  for (std::size_t j = 0; j < x_.size(); ++j) out += g[j] * x_[j];
  return out;
}

void FrankWolfeSolver::rebuild_x() {
  double total = 0.0;
  for (auto& [mask, w] : active_) total += w;
  std::vector<KahanSum> acc(x_.size());
  for (auto& [mask, w] : active_) {
    w /= total;
    for (int j : set_to_indices(mask)) acc[j].add(w);
  }
  for (std::size_t j = 0; j < x_.size(); ++j)
    x_[j] = std::clamp(acc[j].get(), 0.0, 1.0);
}

const SolveReport& FrankWolfeSolver::refine(double abs_gap_target) {
  const int m = obj_->dimension();
  const int k = obj_->cardinality_bound();
  std::vector<double> g(m);
  int budget = opts_.max_iters;

  for (int it = 0; it < budget; ++it) {
    obj_->gradient(x_, g);
    ++report_.gradient_evals;
    for (double gj : g) check_finite(gj, "gradient");

    SetMask fw = lmo_vertex(g, k);
    double gx = dot_x(g);
    double gap = dot_mask(g, fw) - gx;
    report_.duality_gap = gap;
    if (gap <= abs_gap_target) break;

    // Away vertex: the active vertex the gradient likes least.
    SetMask away = active_.begin()->first;
    double away_score = dot_mask(g, away);
    for (const auto& [mask, w] : active_) {
      double score = dot_mask(g, mask);
      if (score < away_score) {
        away = mask;
        away_score = score;
      }
    }
    double slope = dot_mask(g, fw) - away_score;  // >= gap > 0
    double gamma_max = active_[away];

    // Pairwise step x + γ·(1_fw − 1_away), line-searched on [0, γ_max].
    SetMask add = fw & ~away;
    SetMask sub = away & ~fw;
    auto trial_value = [&](double gamma) {
      std::vector<double> xt = x_;
      for (int j : set_to_indices(add)) xt[j] = std::min(1.0, xt[j] + gamma);
      for (int j : set_to_indices(sub)) xt[j] = std::max(0.0, xt[j] - gamma);
      ++report_.objective_evals;
      double fv = obj_->value(xt);
      check_finite(fv, "objective");
      return fv;
    };

    double gamma = gamma_max;
    double f_gamma = trial_value(gamma);
    int halvings = 0;
    while (f_gamma < f_val_ + opts_.sufficient_increase * gamma * slope &&
           halvings < 60) {
      gamma *= opts_.backtrack_shrink;
      f_gamma = trial_value(gamma);
      ++halvings;
    }
    double best_gamma = gamma, best_f = f_gamma;
    // One parabola fit through (0, f), slope, (γ, f_γ) often lands much
    // closer to the segment maximizer than the last backtracking point.
    for (int fit = 0; fit < 2; ++fit) {
      double denom = 2.0 * (slope * gamma - (f_gamma - f_val_));
      if (denom <= 0.0) break;
      double gq = slope * gamma * gamma / denom;
      if (!(gq > 0.0) || gq >= gamma_max || gq == gamma) break;
      double fq = trial_value(gq);
      if (fq > best_f) {
        best_f = fq;
        best_gamma = gq;
      }
      gamma = gq;
      f_gamma = fq;
    }

    if (best_f < f_val_ || (best_f == f_val_ && best_gamma <= 1e-12)) {
      // No improving step at floating-point resolution; the gap estimate is
      // already at the precision floor. (Equal-value steps with real weight
      // still count as progress: they shuffle the active set along a ridge.)
      report_.stalled = true;
      ++report_.iterations;
      break;
    }

    active_[away] -= best_gamma;
    active_[fw] += best_gamma;
    if (active_[away] <= 1e-15) active_.erase(away);
    for (int j : set_to_indices(add)) x_[j] = std::min(1.0, x_[j] + best_gamma);
    for (int j : set_to_indices(sub)) x_[j] = std::max(0.0, x_[j] - best_gamma);
    f_val_ = best_f;
    ++report_.iterations;
    if (report_.iterations % 64 == 0) rebuild_x();
  }

  report_.x_star = x_;
  report_.objective_value = f_val_;
  double upper = obj_->upper_bound();
  report_.tolerance_achieved = upper > 0.0 ? report_.duality_gap / upper : 0.0;
  return report_;
}

SolveReport solve(const Objective& obj, const SolverOptions& opts) {
  FrankWolfeSolver fw(obj, opts);
  return fw.refine(opts.tol * obj.upper_bound());
}

ConditioningParams ConditioningParams::from_delta(double delta, double lambda,
                                                  double f_upper) {
  if (!(delta > 0.0) || !(lambda > 0.0) || !(f_upper > 0.0))
    throw InputError("conditioning needs positive delta, lambda and value scale");
  return {lambda, delta, delta * delta * lambda / (2.0 * f_upper)};
}

EstimateResult estimate_solution(const Objective& obj, double delta, double lambda,
                                 const SolverOptions& opts) {
  if (!(lambda > 0.0))
    throw InputError(
        "delta-estimation requires an objective with known positive curvature");
  ConditioningParams params =
      ConditioningParams::from_delta(delta, lambda, obj.upper_bound());
  FrankWolfeSolver fw(obj, opts);
  SolveReport rep = fw.refine(params.epsilon * obj.upper_bound());
  return {rep.x_star, params, std::move(rep)};
}

EstimateResult estimate_solution(const ConvexProgram& program, double delta,
                                 const SolverOptions& opts) {
  double lambda = program.curvature_lambda();
  if (!(lambda > 0.0))
    throw InputError(
        "delta-estimation requires the noise-augmented objective with known "
        "curvature (k >= 2)");
  return estimate_solution(static_cast<const Objective&>(program), delta, lambda, opts);
}

std::vector<double> gradient_fd(const Objective& obj, std::span<const double> x,
                                double h) {
  int m = obj.dimension();
  int k = obj.cardinality_bound();
  double total = 0.0;
  for (double xj : x) total += xj;
  std::vector<double> xt(x.begin(), x.end());
  std::vector<double> g(m);
  auto eval = [&](int j, double step) {
    xt[j] = x[j] + step;
    double fv = obj.value(xt);
    xt[j] = x[j];
    return fv;
  };
  for (int j = 0; j < m; ++j) {
    bool up_ok = x[j] + h <= 1.0 && total + h <= k;
    bool down_ok = x[j] - h >= 0.0;
    if (up_ok && down_ok)
      g[j] = (eval(j, h) - eval(j, -h)) / (2.0 * h);
    else if (up_ok)
      g[j] = (eval(j, h) - obj.value(xt)) / h;
    else
      g[j] = (obj.value(xt) - eval(j, -h)) / h;
  }
  return g;
}

}  // namespace pubproj
