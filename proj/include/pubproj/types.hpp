#pragma once

#include <bit>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace pubproj {

// Projects are indexed 0..m-1 internally; JSON and display use 1-based ids.
// A set of projects is a bitmask. Brute-force caps keep m below 25, so
// 32 bits are plenty.
using SetMask = std::uint32_t;

inline constexpr int kMaxProjects = 25;
inline constexpr int kDefaultEnumCap = 20;
inline constexpr int kDefaultBruteForceCap = 24;

// Malformed or inconsistent input (schemas, flags, parameter ranges).
struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Structurally valid request that exceeds a configured enumeration cap.
struct CapacityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Numerical guard tripped (probabilities far outside [0,1], (k-2)/k
// rescale with k < 2, refinement rounds exhausted, ...).
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline int set_size(SetMask s) { return std::popcount(s); }

inline bool contains(SetMask s, int j) { return (s >> j) & 1u; }

inline SetMask full_mask(int m) {
  return m == 0 ? 0u : (SetMask{1} << m) - 1u;
}

inline std::vector<int> set_to_indices(SetMask s) {
  std::vector<int> out;
  for (int j = 0; s != 0; ++j, s >>= 1)
    if (s & 1u) out.push_back(j);
  return out;
}

// Display form "1,3,4" (1-based, ascending); empty set prints as "".
inline std::string set_to_string(SetMask s) {
  std::string out;
  for (int j : set_to_indices(s)) {
    if (!out.empty()) out += ',';
    out += std::to_string(j + 1);
  }
  return out;
}

// Compensated accumulator for long alternating sums.
class KahanSum {
 public:
  void add(double v) {
    double y = v - carry_;
    double t = sum_ + y;
    carry_ = (t - sum_) - y;
    sum_ = t;
  }
  double get() const { return sum_; }

 private:
  double sum_ = 0.0;
  double carry_ = 0.0;
};

}  // namespace pubproj
