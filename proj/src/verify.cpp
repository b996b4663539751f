#include "pubproj/verify.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

namespace pubproj {

bool lex_subset_less(SetMask a, SetMask b) {
  while (a != 0 && b != 0) {
    int ja = std::countr_zero(a);
    int jb = std::countr_zero(b);
    if (ja != jb) return ja < jb;
    a &= a - 1;
    b &= b - 1;
  }
  // Equal prefix: the shorter sequence (a exhausted) comes first.
  return a == 0 && b != 0;
}

BruteForceResult brute_force_opt(const Instance& inst, int bf_cap) {
  if (inst.m > bf_cap)
    throw CapacityError("brute force needs m <= " + std::to_string(bf_cap) +
                        ", got m = " + std::to_string(inst.m));
  BruteForceResult out;
  out.best = 0;
  out.welfare = inst.welfare(0);
  for (SetMask s = 1; s < (SetMask{1} << inst.m); ++s) {
    if (set_size(s) > inst.k) continue;
    double w = inst.welfare(s);
    if (w > out.welfare ||
        (w == out.welfare && lex_subset_less(s, out.best))) {
      out.best = s;
      out.welfare = w;
    }
  }
  return out;
}

namespace {

double memo_value(const MrsValuation& v, SetMask s,
                  std::unordered_map<SetMask, double>& memo) {
  auto it = memo.find(s);
  if (it != memo.end()) return it->second;
  double val = v.value(s);
  memo.emplace(s, val);
  return val;
}

Eigen::MatrixXd hessian_matrix(const MrsValuation& v, SetMask base,
                               std::unordered_map<SetMask, double>& memo) {
  int m = v.project_count();
  Eigen::MatrixXd h(m, m);
  double v_base = memo_value(v, base, memo);
  for (int i = 0; i < m; ++i) {
    double v_i = memo_value(v, base | (SetMask{1} << i), memo);
    for (int j = 0; j <= i; ++j) {
      double v_j = memo_value(v, base | (SetMask{1} << j), memo);
      double v_ij = memo_value(v, base | (SetMask{1} << i) | (SetMask{1} << j), memo);
      double entry = v_ij - v_i - v_j + v_base;
      h(i, j) = entry;
      h(j, i) = entry;
    }
  }
  return h;
}

}  // namespace

DiscreteHessian discrete_hessian(const MrsValuation& v, SetMask base) {
  if (base >= (SetMask{1} << v.project_count()))
    throw InputError("base set outside the project set");
  std::unordered_map<SetMask, double> memo;
  return {base, hessian_matrix(v, base, memo)};
}

namespace {

Eigen::VectorXd sym_eigenvalues(const Eigen::MatrixXd& a) {
  Eigen::MatrixXd sym = 0.5 * (a + a.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym);
  if (solver.info() != Eigen::Success)
    throw NumericError("eigenvalue decomposition failed");
  return solver.eigenvalues();
}

}  // namespace

double max_eigenvalue(const Eigen::MatrixXd& a) {
  return sym_eigenvalues(a).maxCoeff();
}

HessianCheckReport check_hessian_decomposition(const MrsValuation& v,
                                               const FractionalSolution& x,
                                               double h, int enum_cap) {
  HessianCheckReport rep;
  int m = v.project_count();
  int k = x.k;
  if (x.project_count() != m)
    throw InputError("point length does not match project count");
  if (k < 2) {
    rep.skipped = true;
    rep.note = "k < 2: the objective is linear and the sub-lottery law is vacuous";
    rep.passed = true;
    return rep;
  }
  double total = 0.0;
  for (double xj : x.x) total += xj;
  for (double xj : x.x)
    if (xj < 2.0 * h || xj > 1.0 - 2.0 * h)
      throw InputError("x must be at least 2h inside the box for the FD stencil");
  if (total > k - 4.0 * h)
    throw InputError("x must leave 4h of cardinality slack for the FD stencil");

  auto g = [&](const std::vector<double>& y) {
    std::vector<double> z(m);
    for (int j = 0; j < m; ++j) z[j] = y[j] / k;
    return lottery_value(v, z, k, 0, enum_cap);
  };

  rep.numerical.resize(m, m);
  std::vector<double> y = x.x;
  double g0 = g(y);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j <= i; ++j) {
      double entry;
      if (i == j) {
        y[i] = x.x[i] + h;
        double up = g(y);
        y[i] = x.x[i] - h;
        double down = g(y);
        y[i] = x.x[i];
        entry = (up - 2.0 * g0 + down) / (h * h);
      } else {
        double quad[4];
        int t = 0;
        for (double si : {h, -h})
          for (double sj : {h, -h}) {
            y[i] = x.x[i] + si;
            y[j] = x.x[j] + sj;
            quad[t++] = g(y);
          }
        y[i] = x.x[i];
        y[j] = x.x[j];
        entry = (quad[0] - quad[1] - quad[2] + quad[3]) / (4.0 * h * h);
      }
      rep.numerical(i, j) = entry;
      rep.numerical(j, i) = entry;
    }
  }

  // (k−2)-draw law at (k−2)x/k; for k = 2 this is the point mass on ∅.
  std::vector<double> shrunk(m);
  for (int j = 0; j < m; ++j) shrunk[j] = (k - 2.0) / k * x.x[j];
  ExactDistribution dist =
      exact_distribution(FractionalSolution(shrunk, k - 2), enum_cap);
  if (k == 2) rep.note = "k=2: the 0-draw sub-lottery is the point mass on the empty set";

  std::unordered_map<SetMask, double> memo;
  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(m, m);
  for (SetMask s = 0; s < (SetMask{1} << m); ++s) {
    double p = dist.prob(s);
    if (p == 0.0) continue;
    rhs += p * hessian_matrix(v, s, memo);
  }
  rep.decomposition = (k - 1.0) / k * rhs;

  rep.max_entry_diff = (rep.numerical - rep.decomposition).cwiseAbs().maxCoeff();
  rep.entry_tol = 1e-4 * v.total_value();
  rep.max_eig_numerical = max_eigenvalue(rep.numerical);
  rep.max_eig_decomposition = max_eigenvalue(rep.decomposition);
  double h_norm = sym_eigenvalues(rep.numerical).cwiseAbs().maxCoeff();
  rep.eig_tol = 1e-6 * std::max(v.total_value(), h_norm);
  rep.passed = rep.max_entry_diff <= rep.entry_tol &&
               rep.max_eig_numerical <= rep.eig_tol &&
               rep.max_eig_decomposition <= rep.eig_tol;
  return rep;
}

}  // namespace pubproj
