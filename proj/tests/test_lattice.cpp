#include <algorithm>
#include <set>

#include "doctest.h"
#include "osclab/error.hpp"
#include "osclab/lattice.hpp"

using namespace osclab;

TEST_CASE("make_box: single site, chain, 2x3 grid") {
  const auto one = LatticeBox::make({{0, 0}});
  CHECK(one.n_sites() == 1);
  CHECK(one.edges().empty());

  const auto chain = LatticeBox::make({{0, 4}});
  CHECK(chain.n_sites() == 5);
  CHECK(chain.edges().size() == 4);
  CHECK(chain.distance(0, 4) == 4);

  const auto grid = LatticeBox::make({{0, 1}, {0, 2}});
  CHECK(grid.n_sites() == 6);
  CHECK(grid.edges().size() == 7);
}

TEST_CASE("make_box errors") {
  CHECK_THROWS_AS(LatticeBox::make({}), Error);
  try {
    LatticeBox::make({});
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::ZeroDim);
  }
  try {
    LatticeBox::make({{0, 2}, {3, 1}});
    FAIL("expected EmptyInterval");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::EmptyInterval);
  }
}

TEST_CASE("enumeration is lexicographic, last coordinate fastest") {
  const auto b = LatticeBox::make({{-1, 0}, {2, 4}});
  CHECK(b.site(0) == Coord{-1, 2});
  CHECK(b.site(1) == Coord{-1, 3});
  CHECK(b.site(3) == Coord{0, 2});
  for (std::size_t i = 0; i < b.n_sites(); ++i) CHECK(b.index(b.site(i)) == i);
  CHECK(b.contains({0, 4}));
  CHECK_FALSE(b.contains({1, 4}));
}

TEST_CASE("distance") {
  const auto b = LatticeBox::make({{0, 3}, {0, 3}});
  CHECK(b.distance(Coord{0, 0}, Coord{0, 0}) == 0);
  CHECK(b.distance(Coord{0, 0}, Coord{1, 2}) == 3);
  CHECK(b.distance(b.index({0, 0}), b.index({1, 2})) == 3);
  CHECK(b.max_distance() == 6);
}

TEST_CASE("edges join distance-1 pairs exactly once, degrees match") {
  for (const auto& iv : std::vector<std::vector<std::pair<int, int>>>{
           {{0, 3}}, {{0, 2}, {0, 3}}, {{0, 1}, {0, 2}, {0, 3}}, {{0, 3}, {0, 3}, {0, 3}}}) {
    const auto b = LatticeBox::make(iv);
    std::set<std::pair<std::size_t, std::size_t>> seen;
    std::vector<int> deg(b.n_sites(), 0);
    for (const auto& e : b.edges()) {
      CHECK(e.a < e.b);
      CHECK(b.distance(e.a, e.b) == 1);
      CHECK(seen.insert({e.a, e.b}).second);
      ++deg[e.a];
      ++deg[e.b];
    }
    std::size_t expected = 0;
    for (std::size_t x = 0; x < b.n_sites(); ++x) {
      for (std::size_t y = x + 1; y < b.n_sites(); ++y) expected += b.distance(x, y) == 1;
      CHECK(deg[x] == b.degree(x));
    }
    CHECK(seen.size() == expected);
  }
}

TEST_CASE("edge set is invariant under coordinate reflection") {
  const auto b = LatticeBox::make({{0, 2}, {1, 4}});
  std::set<std::pair<std::size_t, std::size_t>> orig, refl;
  for (const auto& e : b.edges()) orig.insert({e.a, e.b});
  auto reflect = [&](std::size_t i) {
    auto c = b.site(i);
    c[0] = 2 - c[0];
    c[1] = 5 - c[1];
    return b.index(c);
  };
  for (const auto& e : b.edges()) {
    auto a = reflect(e.a), c = reflect(e.b);
    refl.insert({std::min(a, c), std::max(a, c)});
  }
  CHECK(orig == refl);
}

TEST_CASE("decompose examples") {
  const auto chain = LatticeBox::make({{0, 9}});
  const auto d = decompose(chain, {{5}});
  REQUIRE(d.size() == 2);
  CHECK(d.blocks[0].intervals()[0].lo == 0);
  CHECK(d.blocks[0].intervals()[0].hi == 4);
  CHECK(d.blocks[1].intervals()[0].lo == 5);
  CHECK(d.blocks[1].intervals()[0].hi == 9);

  const auto none = decompose(chain, {});
  CHECK(none.size() == 1);
  CHECK(none.blocks[0] == chain);
  CHECK(whole(chain).size() == 1);

  const auto singles = decompose(chain, {{1, 2, 3, 4, 5, 6, 7, 8, 9}});
  CHECK(singles.size() == 10);
  for (const auto& blk : singles.blocks) CHECK(blk.n_sites() == 1);
}

TEST_CASE("decompose rejects bad cuts") {
  const auto chain = LatticeBox::make({{0, 9}});
  for (const auto& cuts : std::vector<std::vector<std::vector<int>>>{{{0}}, {{10}}, {{3, 3}}, {{5, 2}}, {{-1}}}) {
    try {
      decompose(chain, cuts);
      FAIL("expected BadCut");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::BadCut);
    }
  }
}

TEST_CASE("decompositions tile boxes up to 4x4x4") {
  const auto b = LatticeBox::make({{0, 3}, {0, 3}, {0, 3}});
  const auto d = decompose(b, {{2}, {1, 3}, {}});
  CHECK(d.size() == 6);
  std::size_t total = 0;
  std::vector<int> hits(b.n_sites(), 0);
  for (std::size_t l = 0; l < d.size(); ++l) {
    total += d.blocks[l].n_sites();
    REQUIRE(d.members[l].size() == d.blocks[l].n_sites());
    for (std::size_t j = 0; j < d.members[l].size(); ++j) {
      const auto p = d.members[l][j];
      ++hits[p];
      CHECK(d.block_of[p] == l);
      CHECK(b.site(p) == d.blocks[l].site(j));
      CHECK(d.blocks[l].contains(b.site(p)));
    }
  }
  CHECK(total == b.n_sites());
  CHECK(std::all_of(hits.begin(), hits.end(), [](int h) { return h == 1; }));
}
