#pragma once

#include <Eigen/Dense>
#include <string>

#include "pubproj/instance.hpp"
#include "pubproj/lottery.hpp"

namespace pubproj {

struct BruteForceResult {
  SetMask best = 0;
  double welfare = 0.0;
};

// Exact argmax of Σ_i v_i(S) over |S| <= k; ties broken by lexicographic
// order of the sorted index sequences.
BruteForceResult brute_force_opt(const Instance& inst,
                                 int bf_cap = kDefaultBruteForceCap);

// True if the index sequence of a precedes that of b lexicographically.
bool lex_subset_less(SetMask a, SetMask b);

struct DiscreteHessian {
  SetMask base = 0;
  Eigen::MatrixXd h;  // H(i,j) = v(S∪{i,j}) − v(S∪{i}) − v(S∪{j}) + v(S)
};

DiscreteHessian discrete_hessian(const MrsValuation& v, SetMask base);

// Largest eigenvalue of the symmetrized matrix (A + Aᵀ)/2.
double max_eigenvalue(const Eigen::MatrixXd& a);

// Certifies the curvature decomposition of the lottery objective
// G(x) = E[v over k draws at x/k]: the numerical Hessian (central second
// differences, step h) must match ((k−1)/k)·Σ_S Pr[(k−2)-draw law at
// (k−2)x/k = S]·H_S entrywise, and both must be negative semi-definite up
// to the documented FD-noise allowance.
struct HessianCheckReport {
  bool skipped = false;  // k < 2: no second-order claim to check
  std::string note;
  Eigen::MatrixXd numerical;
  Eigen::MatrixXd decomposition;
  double max_entry_diff = 0.0;
  double entry_tol = 0.0;  // 1e−4 · v([m])
  double max_eig_numerical = 0.0;
  double max_eig_decomposition = 0.0;
  double eig_tol = 0.0;  // 1e−6 · max(v([m]), ‖H_num‖₂)
  bool passed = false;
};

// Pre: every x_j in [2h, 1−2h] and Σx <= k − 4h so the FD stencil stays in P.
HessianCheckReport check_hessian_decomposition(const MrsValuation& v,
                                               const FractionalSolution& x,
                                               double h = 1e-4,
                                               int enum_cap = kDefaultEnumCap);

}  // namespace pubproj
