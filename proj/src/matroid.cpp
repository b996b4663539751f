#include "pubproj/matroid.hpp"

#include <algorithm>
#include <unordered_map>

namespace pubproj {
namespace {

void check_ground(int m) {
  if (m < 1 || m > kMaxProjects)
    throw InputError("matroid ground size must be in [1," +
                     std::to_string(kMaxProjects) + "], got " + std::to_string(m));
}

// Union-find over a fixed vertex range, reset per rank query.
class DisjointSet {
 public:
  explicit DisjointSet(int n) : parent_(n) {
    for (int i = 0; i < n; ++i) parent_[i] = i;
  }
  int find(int a) {
    while (parent_[a] != a) {
      parent_[a] = parent_[parent_[a]];
      a = parent_[a];
    }
    return a;
  }
  bool unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    parent_[a] = b;
    return true;
  }

 private:
  std::vector<int> parent_;
};

}  // namespace

Matroid Matroid::uniform(int ground_size, int rank) {
  check_ground(ground_size);
  if (rank < 0 || rank > ground_size)
    throw InputError("uniform matroid rank must be in [0,m]");
  Matroid out;
  out.kind_ = Kind::kUniform;
  out.ground_size_ = ground_size;
  out.uniform_rank_ = rank;
  return out;
}

Matroid Matroid::partition(int ground_size, std::vector<std::vector<int>> blocks,
                           std::vector<int> caps) {
  check_ground(ground_size);
  if (blocks.size() != caps.size())
    throw InputError("partition matroid needs one cap per block");
  std::vector<char> seen(ground_size, 0);
  for (const auto& block : blocks)
    for (int j : block) {
      if (j < 0 || j >= ground_size)
        throw InputError("partition block element out of range");
      if (seen[j]) throw InputError("partition blocks overlap");
      seen[j] = 1;
    }
  if (!std::all_of(seen.begin(), seen.end(), [](char c) { return c != 0; }))
    throw InputError("partition blocks must cover every project");
  for (int c : caps)
    if (c < 0) throw InputError("partition cap must be non-negative");
  Matroid out;
  out.kind_ = Kind::kPartition;
  out.ground_size_ = ground_size;
  out.blocks_ = std::move(blocks);
  out.caps_ = std::move(caps);
  return out;
}

Matroid Matroid::graphic(std::vector<std::pair<int, int>> edges) {
  check_ground(static_cast<int>(edges.size()));
  std::unordered_map<int, int> remap;
  for (auto& [u, v] : edges) {
    if (u < 0 || v < 0) throw InputError("graphic matroid vertex ids must be >= 0");
    for (int* p : {&u, &v}) {
      auto [it, fresh] = remap.try_emplace(*p, static_cast<int>(remap.size()));
      (void)fresh;
      *p = it->second;
    }
  }
  Matroid out;
  out.kind_ = Kind::kGraphic;
  out.ground_size_ = static_cast<int>(edges.size());
  out.vertex_count_ = static_cast<int>(remap.size());
  out.edges_ = std::move(edges);
  return out;
}

int Matroid::rank(SetMask s) const {
  if (s >= (SetMask{1} << ground_size_))
    throw InputError("rank query outside the ground set");
  switch (kind_) {
    case Kind::kUniform:
      return std::min(set_size(s), uniform_rank_);
    case Kind::kPartition: {
      int r = 0;
      for (std::size_t b = 0; b < blocks_.size(); ++b) {
        int in_block = 0;
        for (int j : blocks_[b]) in_block += contains(s, j);
        r += std::min(in_block, caps_[b]);
      }
      return r;
    }
    case Kind::kGraphic: {
      // Rank of an edge set = edges that join two components, i.e. the size
      // of any spanning forest of the chosen edges.
      DisjointSet dsu(vertex_count_);
      int r = 0;
      for (int j = 0; j < ground_size_; ++j)
        if (contains(s, j) && dsu.unite(edges_[j].first, edges_[j].second)) ++r;
      return r;
    }
  }
  return 0;
}

}  // namespace pubproj
