#include "osclab/lattice.hpp"

#include <algorithm>
#include <cstdlib>
#include <string>

#include "osclab/error.hpp"

namespace osclab {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::EmptyInterval: return "EmptyInterval";
    case ErrorKind::ZeroDim: return "ZeroDim";
    case ErrorKind::BadCut: return "BadCut";
    case ErrorKind::NearSingular: return "NearSingular";
    case ErrorKind::DegenerateSpectrum: return "DegenerateSpectrum";
    case ErrorKind::NonpositiveK: return "NonpositiveK";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::BlockMismatch: return "BlockMismatch";
    case ErrorKind::KTooSmall: return "KTooSmall";
    case ErrorKind::TooLarge: return "TooLarge";
    case ErrorKind::NoMatch: return "NoMatch";
    case ErrorKind::AmbiguousMatch: return "AmbiguousMatch";
    case ErrorKind::CutoffTooSmall: return "CutoffTooSmall";
    case ErrorKind::ConfigError: return "ConfigError";
    case ErrorKind::AllSamplesRejected: return "AllSamplesRejected";
    case ErrorKind::RejectionCapExceeded: return "RejectionCapExceeded";
    case ErrorKind::InsufficientData: return "InsufficientData";
    case ErrorKind::NonpositiveMean: return "NonpositiveMean";
    case ErrorKind::IoError: return "IoError";
  }
  return "Unknown";
}

LatticeBox LatticeBox::make(const std::vector<std::pair<int, int>>& intervals) {
  if (intervals.empty()) throw Error(ErrorKind::ZeroDim, "box must have dimension >= 1");
  LatticeBox box;
  box.n_sites_ = 1;
  for (std::size_t i = 0; i < intervals.size(); ++i) {
    const auto [a, b] = intervals[i];
    if (a > b) {
      throw Error(ErrorKind::EmptyInterval,
                  "interval " + std::to_string(i) + " is empty: [" + std::to_string(a) +
                      ", " + std::to_string(b) + "]");
    }
    box.intervals_.push_back({a, b});
    box.n_sites_ *= static_cast<std::size_t>(b - a + 1);
  }

  const int d = box.dim();
  box.coords_.resize(box.n_sites_ * d);
  for (std::size_t idx = 0; idx < box.n_sites_; ++idx) {
    std::size_t rem = idx;
    for (int i = d - 1; i >= 0; --i) {
      const auto len = static_cast<std::size_t>(box.intervals_[i].hi - box.intervals_[i].lo + 1);
      box.coords_[idx * d + i] = box.intervals_[i].lo + static_cast<int>(rem % len);
      rem /= len;
    }
  }

  // Forward neighbour along each axis; every undirected edge once.
  box.degree_.assign(box.n_sites_, 0);
  for (std::size_t idx = 0; idx < box.n_sites_; ++idx) {
    std::size_t stride = 1;
    for (int i = d - 1; i >= 0; --i) {
      if (box.coords_[idx * d + i] < box.intervals_[i].hi) {
        box.edges_.push_back({idx, idx + stride});
        ++box.degree_[idx];
        ++box.degree_[idx + stride];
      }
      stride *= static_cast<std::size_t>(box.intervals_[i].hi - box.intervals_[i].lo + 1);
    }
  }
  std::sort(box.edges_.begin(), box.edges_.end(),
            [](const Edge& l, const Edge& r) { return l.a != r.a ? l.a < r.a : l.b < r.b; });
  return box;
}

Coord LatticeBox::site(std::size_t index) const {
  const int d = dim();
  return Coord(coords_.begin() + index * d, coords_.begin() + (index + 1) * d);
}

bool LatticeBox::contains(const Coord& site) const {
  if (site.size() != intervals_.size()) return false;
  for (std::size_t i = 0; i < site.size(); ++i) {
    if (site[i] < intervals_[i].lo || site[i] > intervals_[i].hi) return false;
  }
  return true;
}

std::size_t LatticeBox::index(const Coord& site) const {
  if (!contains(site)) throw Error(ErrorKind::DimensionMismatch, "site outside box");
  std::size_t idx = 0;
  for (std::size_t i = 0; i < site.size(); ++i) {
    const auto len = static_cast<std::size_t>(intervals_[i].hi - intervals_[i].lo + 1);
    idx = idx * len + static_cast<std::size_t>(site[i] - intervals_[i].lo);
  }
  return idx;
}

int LatticeBox::distance(std::size_t x, std::size_t y) const {
  const int d = dim();
  int sum = 0;
  for (int i = 0; i < d; ++i) sum += std::abs(coords_[x * d + i] - coords_[y * d + i]);
  return sum;
}

int LatticeBox::distance(const Coord& x, const Coord& y) const {
  int sum = 0;
  for (std::size_t i = 0; i < x.size(); ++i) sum += std::abs(x[i] - y[i]);
  return sum;
}

int LatticeBox::max_distance() const {
  int sum = 0;
  for (const auto& iv : intervals_) sum += iv.hi - iv.lo;
  return sum;
}

bool LatticeBox::operator==(const LatticeBox& other) const {
  if (intervals_.size() != other.intervals_.size()) return false;
  for (std::size_t i = 0; i < intervals_.size(); ++i) {
    if (intervals_[i].lo != other.intervals_[i].lo || intervals_[i].hi != other.intervals_[i].hi)
      return false;
  }
  return true;
}

namespace {

Decomposition assemble(const LatticeBox& box, std::vector<LatticeBox> blocks) {
  Decomposition dec{box, std::move(blocks), {}, {}};
  dec.block_of.assign(box.n_sites(), dec.blocks.size());
  dec.members.resize(dec.blocks.size());
  for (std::size_t l = 0; l < dec.blocks.size(); ++l) {
    const auto& blk = dec.blocks[l];
    dec.members[l].reserve(blk.n_sites());
    for (std::size_t j = 0; j < blk.n_sites(); ++j) {
      const auto parent_idx = box.index(blk.site(j));
      dec.members[l].push_back(parent_idx);
      dec.block_of[parent_idx] = l;
    }
  }
  return dec;
}

}  // namespace

Decomposition whole(const LatticeBox& box) { return assemble(box, {box}); }

Decomposition decompose(const LatticeBox& box, const std::vector<std::vector<int>>& cuts) {
  const int d = box.dim();
  if (static_cast<int>(cuts.size()) > d) {
    throw Error(ErrorKind::BadCut, "more cut axes than box dimensions");
  }

  // Per-axis segment lists.
  std::vector<std::vector<Interval>> segments(d);
  for (int i = 0; i < d; ++i) {
    const auto iv = box.intervals()[i];
    int start = iv.lo;
    int prev = iv.lo;
    if (i < static_cast<int>(cuts.size())) {
      for (int c : cuts[i]) {
        if (c <= iv.lo || c > iv.hi || c <= prev) {
          if (c <= prev && c > iv.lo) {
            throw Error(ErrorKind::BadCut, "cut positions on axis " + std::to_string(i) +
                                               " must be strictly increasing");
          }
          throw Error(ErrorKind::BadCut, "cut " + std::to_string(c) + " outside (" +
                                             std::to_string(iv.lo) + ", " +
                                             std::to_string(iv.hi) + "] on axis " +
                                             std::to_string(i));
        }
        segments[i].push_back({start, c - 1});
        start = c;
        prev = c;
      }
    }
    segments[i].push_back({start, iv.hi});
  }

  // Cartesian product of segments, lexicographic over axes.
  std::vector<LatticeBox> blocks;
  std::vector<std::size_t> pick(d, 0);
  while (true) {
    std::vector<std::pair<int, int>> ivs;
    for (int i = 0; i < d; ++i) ivs.emplace_back(segments[i][pick[i]].lo, segments[i][pick[i]].hi);
    blocks.push_back(LatticeBox::make(ivs));
    int axis = d - 1;
    while (axis >= 0 && ++pick[axis] == segments[axis].size()) {
      pick[axis] = 0;
      --axis;
    }
    if (axis < 0) break;
  }
  return assemble(box, std::move(blocks));
}

}  // namespace osclab
