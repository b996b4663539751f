#pragma once

#include <vector>

#include "pubproj/valuation.hpp"

namespace pubproj {

// A public-project instance: choose at most k of the m projects shared by
// all n players.
struct Instance {
  int n = 0;
  int m = 0;
  int k = 0;
  std::vector<MrsValuation> valuations;

  Instance(int k_in, std::vector<MrsValuation> vals);

  double welfare(SetMask s) const;
  double f_upper() const;        // Σ_i v_i([m]), the relative-tolerance scale
  double singleton_sum() const;  // Σ_i Σ_j v_i({j})

  // Copy with player i's valuation replaced (pivot solves, misreports).
  Instance with_valuation(int i, MrsValuation v) const;
  Instance with_player_zeroed(int i) const;
};

}  // namespace pubproj
