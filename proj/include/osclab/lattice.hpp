#pragma once

#include <cstddef>
#include <utility>
#include <vector>

namespace osclab {

using Coord = std::vector<int>;

struct Interval {
  int lo;
  int hi;
};

struct Edge {
  std::size_t a;  // a < b
  std::size_t b;
};

/// Finite rectangular box in Z^d. Sites are enumerated lexicographically with
/// the last coordinate running fastest.
class LatticeBox {
 public:
  static LatticeBox make(const std::vector<std::pair<int, int>>& intervals);

  int dim() const { return static_cast<int>(intervals_.size()); }
  std::size_t n_sites() const { return n_sites_; }
  const std::vector<Interval>& intervals() const { return intervals_; }
  const std::vector<Edge>& edges() const { return edges_; }

  Coord site(std::size_t index) const;
  std::size_t index(const Coord& site) const;
  bool contains(const Coord& site) const;

  /// 1-norm distance between two site indices.
  int distance(std::size_t x, std::size_t y) const;
  int distance(const Coord& x, const Coord& y) const;
  int degree(std::size_t x) const { return degree_[x]; }
  int max_distance() const;

  bool operator==(const LatticeBox& other) const;

 private:
  std::vector<Interval> intervals_;
  std::size_t n_sites_ = 0;
  std::vector<int> coords_;  // n_sites * dim
  std::vector<Edge> edges_;
  std::vector<int> degree_;
};

/// Guillotine tiling of a box into disjoint sub-boxes.
struct Decomposition {
  LatticeBox parent;
  std::vector<LatticeBox> blocks;
  /// block_of[i] = index of the block holding parent site i.
  std::vector<std::size_t> block_of;
  /// members[l][j] = parent index of the j-th site of block l (block order).
  std::vector<std::vector<std::size_t>> members;

  std::size_t size() const { return blocks.size(); }
};

/// Cut position c on axis i splits [a, b] into [a, c-1] and [c, b];
/// a < c <= b is required and cuts on one axis must be strictly increasing.
/// An empty cut list (or one with all axes empty) returns the parent.
Decomposition decompose(const LatticeBox& box,
                        const std::vector<std::vector<int>>& cuts);

/// Trivial one-block decomposition.
Decomposition whole(const LatticeBox& box);

}  // namespace osclab
