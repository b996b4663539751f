#include "pubproj/instance.hpp"

namespace pubproj {

Instance::Instance(int k_in, std::vector<MrsValuation> vals)
    : n(static_cast<int>(vals.size())), k(k_in), valuations(std::move(vals)) {
  if (n < 1) throw InputError("instance needs at least one player");
  m = valuations.front().project_count();
  for (const auto& v : valuations)
    if (v.project_count() != m)
      throw InputError("all players must value the same project set");
  if (k < 1 || k > m) throw InputError("cardinality bound k must be in [1,m]");
}

double Instance::welfare(SetMask s) const {
  KahanSum acc;
  for (const auto& v : valuations) acc.add(v.value(s));
  return acc.get();
}

double Instance::f_upper() const {
  KahanSum acc;
  for (const auto& v : valuations) acc.add(v.total_value());
  return acc.get();
}

double Instance::singleton_sum() const {
  KahanSum acc;
  for (const auto& v : valuations) acc.add(v.singleton_sum());
  return acc.get();
}

Instance Instance::with_valuation(int i, MrsValuation v) const {
  if (i < 0 || i >= n) throw InputError("player index out of range");
  Instance out = *this;
  out.valuations[i] = std::move(v);
  if (out.valuations[i].project_count() != m)
    throw InputError("replacement valuation has the wrong project count");
  return out;
}

Instance Instance::with_player_zeroed(int i) const {
  return with_valuation(i, MrsValuation::zero(m));
}

}  // namespace pubproj
