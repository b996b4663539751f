#include "pubproj/lottery.hpp"

#include <algorithm>
#include <cmath>

#include "pubproj/valuation.hpp"

namespace pubproj {

FractionalSolution::FractionalSolution(std::vector<double> x_in, int k_in)
    : x(std::move(x_in)), k(k_in) {
  if (k < 0) throw InputError("draw bound k must be >= 0");
  if (x.empty() || static_cast<int>(x.size()) > kMaxProjects)
    throw InputError("fractional solution needs 1.." + std::to_string(kMaxProjects) +
                     " coordinates");
  double sum = 0.0;
  for (double& xj : x) {
    if (!std::isfinite(xj) || xj < -1e-9 || xj > 1.0 + 1e-9)
      throw InputError("fractional solution coordinate outside [0,1]");
    xj = std::clamp(xj, 0.0, 1.0);
    sum += xj;
  }
  if (sum > k + 1e-9) throw InputError("fractional solution mass above k");
  if (sum > k)
    for (double& xj : x) xj *= k / sum;
}

namespace {

std::vector<double> interval_bounds(const FractionalSolution& x) {
  std::vector<double> c(x.x.size() + 1, 0.0);
  for (std::size_t j = 0; j < x.x.size(); ++j) c[j + 1] = c[j] + x.x[j] / x.k;
  return c;
}

int resolve_interval(const std::vector<double>& c, double u) {
  auto it = std::upper_bound(c.begin(), c.end(), u);
  return static_cast<int>(it - c.begin()) - 1;  // == m means "no project"
}

}  // namespace

RoundingOutcome round_k(const FractionalSolution& x, Rng& rng) {
  if (x.k < 1) throw InputError("rounding needs k >= 1");
  int m = x.project_count();
  std::vector<double> c = interval_bounds(x);
  RoundingOutcome out;
  out.trace.p.reserve(x.k);
  for (int d = 0; d < x.k; ++d) {
    double u = rng.next_unit();
    out.trace.p.push_back(u);
    int idx = resolve_interval(c, u);
    if (idx < m) out.chosen |= SetMask{1} << idx;
  }
  return out;
}

RoundingOutcome round_k_plus(const FractionalSolution& x, int player_count, Rng& rng) {
  if (player_count < 1) throw InputError("player count must be >= 1");
  RoundingOutcome out = round_k(x, rng);
  int m = x.project_count();
  out.trace.pre_cancel = out.chosen;
  std::uint64_t e = 2ull * static_cast<std::uint64_t>(player_count) *
                    static_cast<std::uint64_t>(m);
  if (rng.bernoulli_pow2(e)) {
    out.trace.cancel_branch = true;
    double beta = static_cast<double>(set_size(out.trace.pre_cancel)) / m;
    out.chosen = 0;
    out.trace.q2 = rng.next_unit();
    if (out.trace.q2 <= beta) {
      out.trace.jstar = static_cast<int>(rng.next_below(m));
      out.chosen = SetMask{1} << out.trace.jstar;
    }
  }
  return out;
}

std::vector<double> union_distribution(std::span<const double> per_draw, int draws) {
  int w = static_cast<int>(per_draw.size());
  double z_total = 0.0;
  for (double zj : per_draw) z_total += zj;
  std::vector<double> zs(std::size_t{1} << w, 0.0);
  for (int j = 0; j < w; ++j) {
    SetMask bit = SetMask{1} << j;
    for (SetMask r = 0; r < bit; ++r) zs[r | bit] = zs[r] + per_draw[j];
  }
  std::vector<double> p(std::size_t{1} << w);
  for (SetMask s = 0; s < p.size(); ++s) {
    KahanSum acc;
    SetMask r = s;
    for (;;) {  // all subsets of s, including s and the empty set
      double term = ipow(std::max(0.0, 1.0 - (z_total - zs[r])), draws);
      acc.add((set_size(r) & 1) ? -term : term);
      if (r == 0) break;
      r = (r - 1) & s;
    }
    p[s] = (set_size(s) & 1) ? -acc.get() : acc.get();
  }
  return p;
}

ExactDistribution::ExactDistribution(int m, int k, std::vector<double> probs)
    : m_(m), k_(k), p_(std::move(probs)) {
  if (p_.size() != (std::size_t{1} << m_))
    throw InputError("distribution table size does not match project count");
  KahanSum total;
  for (SetMask s = 0; s < p_.size(); ++s) {
    double& ps = p_[s];
    if (ps < -1e-12)
      throw NumericError("distribution entry " + std::to_string(ps) +
                         " below the round-off clamp guard");
    if (ps < 0.0 || set_size(s) > k_) ps = 0.0;
    total.add(ps);
  }
  if (std::abs(total.get() - 1.0) > 1e-9)
    throw NumericError("distribution mass " + std::to_string(total.get()) +
                       " not within 1e-9 of 1");
}

double ExactDistribution::marginal(int j) const {
  if (j < 0 || j >= m_) throw InputError("marginal index out of range");
  KahanSum acc;
  for (SetMask s = 0; s < p_.size(); ++s)
    if (contains(s, j)) acc.add(p_[s]);
  return acc.get();
}

ExactDistribution exact_distribution(const FractionalSolution& x, int enum_cap) {
  int m = x.project_count();
  if (m > enum_cap)
    throw CapacityError("exact distribution needs m <= " + std::to_string(enum_cap) +
                        ", got m = " + std::to_string(m));
  std::vector<double> z(m);
  for (int j = 0; j < m; ++j) z[j] = x.x[j] / std::max(1, x.k);
  if (x.k == 0) std::fill(z.begin(), z.end(), 0.0);
  return ExactDistribution(m, x.k, union_distribution(z, x.k));
}

ExactDistribution exact_distribution_plus(const FractionalSolution& x, int player_count,
                                          int enum_cap) {
  if (player_count < 1) throw InputError("player count must be >= 1");
  int m = x.project_count();
  ExactDistribution base = exact_distribution(x, enum_cap);
  double mu = std::exp2(-2.0 * player_count * m);
  // Pr[replacement singleton] given the branch = E|S|/m; E|S| is the sum of
  // the inclusion probabilities.
  double expected_beta = 0.0;
  for (int j = 0; j < m; ++j) expected_beta += inclusion_probability(x, j) / m;
  std::vector<double> p = base.probs();
  for (double& ps : p) ps *= 1.0 - mu;
  p[0] += mu * (1.0 - expected_beta);
  for (int j = 0; j < m; ++j) p[SetMask{1} << j] += mu * expected_beta / m;
  return ExactDistribution(m, std::max(1, x.k), std::move(p));
}

double inclusion_probability(const FractionalSolution& x, int j) {
  if (j < 0 || j >= x.project_count()) throw InputError("project index out of range");
  if (x.k == 0) return 0.0;
  return 1.0 - ipow(std::max(0.0, 1.0 - x.x[j] / x.k), x.k);
}

}  // namespace pubproj
