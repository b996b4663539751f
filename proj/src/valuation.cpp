#include "pubproj/valuation.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "pubproj/rng.hpp"

namespace pubproj {

double ipow(double base, int e) {
  double out = 1.0;
  double b = base;
  for (; e > 0; e >>= 1) {
    if (e & 1) out *= b;
    b *= b;
  }
  return out;
}

std::vector<double> normalize_marginals(std::span<const double> marginals) {
  std::vector<double> z(marginals.begin(), marginals.end());
  double sum = 0.0;
  for (double& zj : z) {
    if (zj < -1e-9) throw InputError("lottery marginal is negative");
    if (zj < 0.0) zj = 0.0;
    sum += zj;
  }
  if (sum > 1.0 + 1e-9) throw InputError("lottery marginals sum above 1");
  if (sum > 1.0)
    for (double& zj : z) zj /= sum;
  return z;
}

MrsValuation MrsValuation::from_terms(int project_count, std::vector<MrsTerm> terms) {
  if (project_count < 1 || project_count > kMaxProjects)
    throw InputError("valuation needs 1.." + std::to_string(kMaxProjects) + " projects");
  for (const auto& t : terms) {
    if (!(t.weight >= 0.0) || !std::isfinite(t.weight))
      throw InputError("matroid term weight must be finite and >= 0");
    if (t.matroid.ground_size() != project_count)
      throw InputError("matroid ground size does not match project count");
  }
  MrsValuation v;
  v.rep_ = Rep::kTerms;
  v.m_ = project_count;
  v.terms_ = std::move(terms);
  return v;
}

MrsValuation MrsValuation::from_coverage(int project_count,
                                         std::vector<CoveragePoint> points) {
  if (project_count < 1 || project_count > kMaxProjects)
    throw InputError("valuation needs 1.." + std::to_string(kMaxProjects) + " projects");
  std::unordered_set<std::string> ids;
  for (const auto& p : points) {
    if (!(p.weight >= 0.0) || !std::isfinite(p.weight))
      throw InputError("universe point weight must be finite and >= 0");
    if (p.covered_by >= (SetMask{1} << project_count))
      throw InputError("coverage set references a project out of range");
    if (!ids.insert(p.id).second)
      throw InputError("duplicate universe point id '" + p.id + "'");
  }
  MrsValuation v;
  v.rep_ = Rep::kCoverage;
  v.m_ = project_count;
  v.points_ = std::move(points);
  return v;
}

MrsValuation MrsValuation::zero(int project_count) {
  return from_terms(project_count, {});
}

double MrsValuation::value(SetMask s) const {
  if (s >= (SetMask{1} << m_)) throw InputError("value query outside the project set");
  KahanSum acc;
  if (rep_ == Rep::kTerms) {
    for (const auto& t : terms_) acc.add(t.weight * t.matroid.rank(s));
  } else {
    for (const auto& p : points_)
      if (p.covered_by & s) acc.add(p.weight);
  }
  return acc.get();
}

double MrsValuation::total_value() const { return value(full_mask(m_)); }

double MrsValuation::singleton_sum() const {
  KahanSum acc;
  for (int j = 0; j < m_; ++j) acc.add(value(SetMask{1} << j));
  return acc.get();
}

const std::vector<double>& MrsValuation::mobius_table(int enum_cap) const {
  if (m_ > enum_cap)
    throw CapacityError("exact lottery oracle needs m <= " + std::to_string(enum_cap) +
                        " for general matroid-rank sums, got m = " + std::to_string(m_));
  std::call_once(cache_->once, [this] {
    std::size_t size = std::size_t{1} << m_;
    std::vector<double> w(size);
    for (SetMask s = 0; s < size; ++s) w[s] = value(s);
    for (int i = 0; i < m_; ++i) {
      SetMask bit = SetMask{1} << i;
      for (SetMask t = 0; t < size; ++t)
        if (!(t & bit)) w[t] -= w[t | bit];
    }
    cache_->mobius = std::move(w);
  });
  return cache_->mobius;
}

namespace {

// Subset sums zs[R] = Σ_{j∈R} z_j for all R ⊆ ground of |z| projects.
std::vector<double> subset_sums(std::span<const double> z) {
  std::vector<double> zs(std::size_t{1} << z.size(), 0.0);
  for (std::size_t j = 0; j < z.size(); ++j) {
    SetMask bit = SetMask{1} << j;
    for (SetMask r = 0; r < bit; ++r) zs[r | bit] = zs[r] + z[j];
  }
  return zs;
}

// Σ_R w(R)·(1−z_{R̄})^draws where w is the alternating superset transform of
// the target set function; 1−z_{R̄} = 1−(z_total−z_R).
double transform_dot(const std::vector<double>& w, std::span<const double> z, int draws) {
  std::vector<double> zs = subset_sums(z);
  double z_total = zs.back();
  KahanSum acc;
  for (std::size_t r = 0; r < w.size(); ++r) {
    double base = std::max(0.0, 1.0 - (z_total - zs[r]));
    acc.add(w[r] * ipow(base, draws));
  }
  return acc.get();
}

double coverage_lottery_value(const MrsValuation& v, std::span<const double> z,
                              int draws, SetMask promise) {
  KahanSum acc;
  for (const auto& p : v.coverage_points()) {
    if (p.covered_by & promise) {
      acc.add(p.weight);
      continue;
    }
    double hit = 0.0;
    for (int j : set_to_indices(p.covered_by)) hit += z[j];
    acc.add(p.weight * (1.0 - ipow(std::max(0.0, 1.0 - hit), draws)));
  }
  return acc.get();
}

}  // namespace

double lottery_value(const MrsValuation& v, std::span<const double> marginals,
                     int draws, SetMask promise, int enum_cap) {
  int m = v.project_count();
  if (static_cast<int>(marginals.size()) != m)
    throw InputError("marginal vector length does not match project count");
  if (draws < 0) throw InputError("draw count must be >= 0");
  if (promise >= (SetMask{1} << m)) throw InputError("promise outside the project set");
  std::vector<double> z = normalize_marginals(marginals);
  if (draws == 0) return v.value(promise);
  if (v.rep() == MrsValuation::Rep::kCoverage)
    return coverage_lottery_value(v, z, draws, promise);
  if (m > enum_cap)
    throw CapacityError("exact lottery oracle needs m <= " + std::to_string(enum_cap) +
                        " for general matroid-rank sums, got m = " + std::to_string(m));
  if (promise == 0) return transform_dot(v.mobius_table(enum_cap), z, draws);

  // Promise handling: fold the promised projects into the function
  // (v_R(T) = v(T ∪ R) over the remaining ground) and drop their draw mass,
  // which can only land inside the promise anyway.
  std::vector<int> rest;
  std::vector<double> z_rest;
  for (int j = 0; j < m; ++j)
    if (!contains(promise, j)) {
      rest.push_back(j);
      z_rest.push_back(z[j]);
    }
  std::size_t size = std::size_t{1} << rest.size();
  std::vector<double> w(size);
  for (SetMask t = 0; t < size; ++t) {
    SetMask s = promise;
    for (std::size_t b = 0; b < rest.size(); ++b)
      if (t & (SetMask{1} << b)) s |= SetMask{1} << rest[b];
    w[t] = v.value(s);
  }
  for (std::size_t i = 0; i < rest.size(); ++i) {
    SetMask bit = SetMask{1} << i;
    for (SetMask t = 0; t < size; ++t)
      if (!(t & bit)) w[t] -= w[t | bit];
  }
  return transform_dot(w, z_rest, draws);
}

McEstimate lottery_value_mc(const MrsValuation& v, std::span<const double> marginals,
                            int draws, SetMask promise, int samples,
                            std::uint64_t seed) {
  int m = v.project_count();
  if (static_cast<int>(marginals.size()) != m)
    throw InputError("marginal vector length does not match project count");
  if (samples < 2) throw InputError("Monte Carlo estimate needs >= 2 samples");
  std::vector<double> z = normalize_marginals(marginals);
  std::vector<double> prefix(m + 1, 0.0);
  for (int j = 0; j < m; ++j) prefix[j + 1] = prefix[j] + z[j];

  Rng rng(seed);
  double mean = 0.0, m2 = 0.0;
  for (int s = 1; s <= samples; ++s) {
    SetMask chosen = promise;
    for (int d = 0; d < draws; ++d) {
      double u = rng.next_unit();
      auto it = std::upper_bound(prefix.begin(), prefix.end(), u);
      int idx = static_cast<int>(it - prefix.begin()) - 1;
      if (idx < m) chosen |= SetMask{1} << idx;
    }
    double val = v.value(chosen);
    double delta = val - mean;
    mean += delta / s;
    m2 += delta * (val - mean);
  }
  double var = m2 / (samples - 1);
  return {mean, std::sqrt(std::max(0.0, var) / samples)};
}

std::vector<double> lottery_gradient(const MrsValuation& v, std::span<const double> x,
                                     int k, int enum_cap) {
  int m = v.project_count();
  if (static_cast<int>(x.size()) != m)
    throw InputError("point length does not match project count");
  if (k < 1) throw InputError("draw bound must be >= 1");
  std::vector<double> z(m);
  for (int j = 0; j < m; ++j) z[j] = x[j] / k;
  z = normalize_marginals(z);

  std::vector<double> g(m, 0.0);
  if (v.rep() == MrsValuation::Rep::kCoverage) {
    // Analytic form: a point still uncovered after k−1 draws gains exactly its
    // weight when project j ∈ T_p is promised.
    for (const auto& p : v.coverage_points()) {
      double hit = 0.0;
      for (int j : set_to_indices(p.covered_by)) hit += z[j];
      double contrib = p.weight * ipow(std::max(0.0, 1.0 - hit), k - 1);
      for (int j : set_to_indices(p.covered_by)) g[j] += contrib;
    }
    return g;
  }

  // d/dx_j Σ_R w(R)(1−z_{R̄})^k = −Σ_{R∌j} w(R)(1−z_{R̄})^{k−1} at z = x/k;
  // this is the promise-difference derivative evaluated in one table pass.
  const std::vector<double>& w = v.mobius_table(enum_cap);
  std::vector<double> zs = subset_sums(z);
  double z_total = zs.back();
  std::vector<KahanSum> acc(m);
  for (SetMask r = 0; r < w.size(); ++r) {
    double term = w[r] * ipow(std::max(0.0, 1.0 - (z_total - zs[r])), k - 1);
    if (term == 0.0) continue;
    SetMask missing = full_mask(m) & ~r;
    for (int j : set_to_indices(missing)) acc[j].add(term);
  }
  for (int j = 0; j < m; ++j) g[j] = -acc[j].get();
  return g;
}

}  // namespace pubproj
