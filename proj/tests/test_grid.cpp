#include <doctest.h>

#include <set>
#include <vector>

#include "errors.hpp"
#include "grid.hpp"
#include "rng.hpp"

using namespace mum;

TEST_CASE("splitmix stream is deterministic and split streams diverge") {
  SplitRng a(123), b(123);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

  SplitRng parent(7);
  SplitRng child = parent.split();
  bool all_equal = true;
  for (int i = 0; i < 16; ++i) {
    if (parent.next_u64() != child.next_u64()) all_equal = false;
  }
  CHECK_FALSE(all_equal);
}

TEST_CASE("next_below stays in range and covers it") {
  SplitRng rng(99);
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 1000; ++i) {
    const auto v = rng.next_below(5);
    CHECK(v < 5);
    seen.insert(v);
  }
  CHECK(seen.size() == 5);
}

TEST_CASE("generate_masks: group of one is forced to identity") {
  SplitRng rng(1);
  const auto m = generate_masks(rng, 1, 4);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) CHECK(m.at(0, i, j) == 0);
}

TEST_CASE("generate_masks: every cell column is a permutation") {
  SplitRng rng(2);
  const auto m = generate_masks(rng, 4, 4);
  CHECK(m.group_size == 4);
  CHECK(m.tiles_per_axis == 4);
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      std::set<int> sources;
      for (int g = 0; g < 4; ++g) sources.insert(m.at(g, i, j));
      CHECK(sources == std::set<int>{0, 1, 2, 3});
    }
  }
  CHECK(validate_masks(m).empty());
}

TEST_CASE("generate_masks rejects non-positive arguments") {
  SplitRng rng(3);
  CHECK_THROWS_AS(generate_masks(rng, 0, 4), InvalidArgument);
  CHECK_THROWS_AS(generate_masks(rng, 4, 0), InvalidArgument);
  CHECK_THROWS_AS(generate_masks(rng, -1, 2), InvalidArgument);
}

TEST_CASE("generate_masks: per-cell source frequency is uniform") {
  // Frequency oracle: with group_size 3 every source should land in a given
  // cell with probability 1/3.
  const int draws = 10000;
  SplitRng rng(42);
  int counts[2][2][3] = {};
  for (int d = 0; d < draws; ++d) {
    const auto m = generate_masks(rng, 3, 2);
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) ++counts[i][j][m.at(0, i, j)];
  }
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int s = 0; s < 3; ++s) {
        const double freq = static_cast<double>(counts[i][j][s]) / draws;
        CHECK(freq == doctest::Approx(1.0 / 3.0).epsilon(0.06));  // 1/3 +- 0.02
      }
}

TEST_CASE("masks are reproducible from the seed, including serialized form") {
  SplitRng a(77), b(77);
  const auto m1 = generate_masks(a, 4, 4);
  const auto m2 = generate_masks(b, 4, 4);
  CHECK(m1 == m2);
  CHECK(masks_to_json(m1) == masks_to_json(m2));
}

TEST_CASE("invert_masks") {
  SUBCASE("identity inverts to identity") {
    const auto id = identity_masks(3, 2);
    CHECK(invert_masks(id) == id);
  }

  SUBCASE("a full swap is its own inverse") {
    MaskSet swap = identity_masks(2, 2);
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) {
        swap.at(0, i, j) = 1;
        swap.at(1, i, j) = 0;
      }
    CHECK(invert_masks(swap) == swap);
  }

  SUBCASE("double inversion is the identity map on random masks") {
    SplitRng rng(5);
    for (int trial = 0; trial < 25; ++trial) {
      const auto m = generate_masks(rng, 4, 4);
      CHECK(invert_masks(invert_masks(m)) == m);
    }
  }

  SUBCASE("inverse satisfies the defining equation") {
    SplitRng rng(6);
    const auto m = generate_masks(rng, 5, 3);
    const auto u = invert_masks(m);
    for (int g = 0; g < 5; ++g)
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) CHECK(u.at(m.at(g, i, j), i, j) == g);
  }

  SUBCASE("invalid input is rejected") {
    MaskSet bad = identity_masks(2, 2);
    bad.at(0, 0, 0) = 1;  // duplicate source 1 in cell (0,0)
    CHECK_THROWS_AS(invert_masks(bad), ValidationError);
  }
}

TEST_CASE("validate_masks pinpoints violations") {
  SUBCASE("valid identity mask") { CHECK(validate_masks(identity_masks(4, 4)).empty()); }

  SUBCASE("duplicate source") {
    MaskSet bad = identity_masks(2, 2);
    bad.at(1, 0, 0) = 0;  // both grids take source 0 at (0,0)
    const auto v = validate_masks(bad);
    REQUIRE(v.size() == 1);
    CHECK(v[0].row == 0);
    CHECK(v[0].col == 0);
  }

  SUBCASE("out-of-range index names the cell") {
    MaskSet bad = identity_masks(2, 2);
    bad.at(0, 1, 1) = 7;
    const auto v = validate_masks(bad);
    REQUIRE_FALSE(v.empty());
    CHECK(v[0].row == 1);
    CHECK(v[0].col == 1);
    CHECK(v[0].reason.find("out-of-range") != std::string::npos);
  }
}

TEST_CASE("mask JSON round-trip is lossless") {
  SplitRng rng(11);
  const auto m = generate_masks(rng, 4, 4);
  const auto text = masks_to_json(m);
  CHECK(masks_from_json(text) == m);

  CHECK_THROWS_AS(masks_from_json("not json"), ValidationError);
  CHECK_THROWS_AS(masks_from_json("{\"group_size\": 2}"), ValidationError);
}
