#pragma once

#include <utility>
#include <vector>

#include "pubproj/types.hpp"

namespace pubproj {

// Matroid over the project set {0,...,m-1}. Three constructions cover the
// catalog: uniform, partition, and graphic (projects are edges of a
// multigraph; loops and parallel edges allowed). Immutable after
// construction; rank() is pure.
class Matroid {
 public:
  enum class Kind { kUniform, kPartition, kGraphic };

  static Matroid uniform(int ground_size, int rank);
  // blocks must partition {0,...,m-1}; caps[b] bounds the independent
  // elements taken from blocks[b].
  static Matroid partition(int ground_size, std::vector<std::vector<int>> blocks,
                           std::vector<int> caps);
  // Ground set is the edge list; vertex ids are arbitrary non-negative ints.
  static Matroid graphic(std::vector<std::pair<int, int>> edges);

  Kind kind() const { return kind_; }
  int ground_size() const { return ground_size_; }
  int rank(SetMask s) const;
  int rank() const { return rank(full_mask(ground_size_)); }

  // Accessors for serialization.
  int uniform_rank() const { return uniform_rank_; }
  const std::vector<std::vector<int>>& blocks() const { return blocks_; }
  const std::vector<int>& caps() const { return caps_; }
  const std::vector<std::pair<int, int>>& edges() const { return edges_; }

 private:
  Matroid() = default;

  Kind kind_ = Kind::kUniform;
  int ground_size_ = 0;
  int uniform_rank_ = 0;
  std::vector<std::vector<int>> blocks_;
  std::vector<int> caps_;
  std::vector<std::pair<int, int>> edges_;  // endpoints remapped to 0..V-1
  int vertex_count_ = 0;
};

}  // namespace pubproj
