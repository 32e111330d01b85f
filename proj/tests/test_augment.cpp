#include <doctest.h>

#include <cmath>
#include <vector>

#include "augment.hpp"
#include "errors.hpp"
#include "helpers.hpp"

using namespace mum;
using testutil::fill_uniform;

TEST_CASE("mix_tiles with identity masks is a no-op") {
  SplitRng rng(1);
  Tensor4 batch(4, 3, 16, 16);
  fill_uniform(batch, rng);
  const auto layout = identity_group_layout(4, 4, 4);
  CHECK(mix_tiles(batch, layout) == batch);
}

TEST_CASE("single-tile mixing degenerates to a batch permutation") {
  Tensor4 batch(2, 1, 4, 4);
  for (std::int64_t i = 0; i < batch.size(); ++i) batch.data()[i] = i < 16 ? 0.0f : 1.0f;

  MaskSet swap = identity_masks(2, 1);
  swap.at(0, 0, 0) = 1;
  swap.at(1, 0, 0) = 0;
  const auto layout = layout_from_masks(swap, 2);
  const auto mixed = mix_tiles(batch, layout);
  for (std::int64_t i = 0; i < 16; ++i) {
    CHECK(mixed.data()[i] == 1.0f);
    CHECK(mixed.data()[16 + i] == 0.0f);
  }
}

TEST_CASE("constant-image readback matches the mask cells") {
  // Image k is filled with the value k, so each mixed tile reads back its
  // mask cell directly.
  SplitRng rng(7);
  Tensor4 batch(4, 2, 16, 16);
  for (std::int64_t n = 0; n < 4; ++n)
    for (std::int64_t c = 0; c < 2; ++c) {
      float* p = batch.plane(n, c);
      std::fill(p, p + 16 * 16, static_cast<float>(n));
    }
  const auto layout = make_group_layout(rng, 4, 4, 4);
  const auto mixed = mix_tiles(batch, layout);
  const auto& masks = layout.groups[0].masks;
  for (int g = 0; g < 4; ++g)
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) {
        const float v = mixed.at(g, 1, i * 4 + 1, j * 4 + 2);  // interior point of tile (i,j)
        CHECK(v == static_cast<float>(masks.at(g, i, j)));
      }
}

TEST_CASE("unmix after mix restores the batch exactly") {
  SplitRng rng(3);
  for (int trial = 0; trial < 30; ++trial) {
    const std::int64_t batch_n = 1 + static_cast<std::int64_t>(rng.next_below(9));
    const int group = 1 + static_cast<int>(rng.next_below(5));
    const int tiles_options[4] = {1, 2, 4, 8};
    const int nt = tiles_options[rng.next_below(4)];
    const std::int64_t side = nt * (1 + static_cast<std::int64_t>(rng.next_below(4)));
    const std::int64_t channels = 1 + static_cast<std::int64_t>(rng.next_below(4));

    Tensor4 batch(batch_n, channels, side, side);
    fill_uniform(batch, rng);
    const auto layout = make_group_layout(rng, batch_n, group, nt);
    const auto roundtrip = unmix_tiles(mix_tiles(batch, layout), layout);
    CHECK(roundtrip == batch);  // bit-exact
  }
}

TEST_CASE("unmixing works at feature resolution") {
  SplitRng rng(9);
  // Feature tiles of 2x2 at tiles_per_axis 4 on an (4, 8, 8, 8) map.
  Tensor4 features(4, 8, 8, 8);
  for (std::int64_t n = 0; n < 4; ++n)
    for (std::int64_t c = 0; c < 8; ++c) {
      float* p = features.plane(n, c);
      std::fill(p, p + 64, static_cast<float>(n));
    }
  const auto layout = make_group_layout(rng, 4, 4, 4);
  const auto unmixed = unmix_tiles(features, layout);
  const auto inverse = invert_masks(layout.groups[0].masks);
  for (int g = 0; g < 4; ++g)
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j)
        CHECK(unmixed.at(g, 3, i * 2, j * 2) == static_cast<float>(inverse.at(g, i, j)));
}

TEST_CASE("tile kernels report bad shapes and layouts") {
  SplitRng rng(4);
  Tensor4 batch(4, 3, 18, 16);  // height not divisible by 4
  const auto layout = make_group_layout(rng, 4, 4, 4);
  CHECK_THROWS_WITH_AS(static_cast<void>(mix_tiles(batch, layout)),
                       doctest::Contains("height 18"), ShapeError);

  Tensor4 bad_width(4, 3, 16, 18);
  CHECK_THROWS_WITH_AS(static_cast<void>(mix_tiles(bad_width, layout)),
                       doctest::Contains("width 18"), ShapeError);

  Tensor4 ok(6, 3, 16, 16);
  CHECK_THROWS_AS(static_cast<void>(mix_tiles(ok, layout)), InvalidArgument);  // batch mismatch
}

TEST_CASE("remainder groups: lone image passes through, pair mixes") {
  SplitRng rng(12);
  // 5 = one full group of 4 plus a remainder of 1 (identity by construction).
  auto layout = make_group_layout(rng, 5, 4, 2);
  REQUIRE(layout.groups.size() == 2);
  CHECK(layout.groups[1].size == 1);
  CHECK(validate_masks(layout.groups[1].masks).empty());

  Tensor4 batch(5, 1, 4, 4);
  fill_uniform(batch, rng);
  const auto mixed = mix_tiles(batch, layout);
  for (std::int64_t i = 0; i < 16; ++i) {
    CHECK(mixed.data()[4 * 16 + i] == batch.data()[4 * 16 + i]);
  }

  // 6 = full group + remainder pair that mixes within itself.
  const auto layout6 = make_group_layout(rng, 6, 4, 2);
  REQUIRE(layout6.groups.size() == 2);
  CHECK(layout6.groups[1].size == 2);
}

TEST_CASE("mixing preserves tile content as a multiset within each group") {
  SplitRng rng(21);
  Tensor4 batch(4, 1, 8, 8);
  fill_uniform(batch, rng);
  const auto layout = make_group_layout(rng, 4, 4, 4);
  const auto mixed = mix_tiles(batch, layout);

  auto tile_multiset = [](const Tensor4& t, int nt) {
    std::vector<std::vector<float>> tiles;
    const std::int64_t th = t.h() / nt, tw = t.w() / nt;
    for (std::int64_t n = 0; n < t.n(); ++n)
      for (int i = 0; i < nt; ++i)
        for (int j = 0; j < nt; ++j) {
          std::vector<float> tile;
          for (std::int64_t r = 0; r < th; ++r)
            for (std::int64_t c = 0; c < tw; ++c) tile.push_back(t.at(n, 0, i * th + r, j * tw + c));
          tiles.push_back(std::move(tile));
        }
    std::sort(tiles.begin(), tiles.end());
    return tiles;
  };
  CHECK(tile_multiset(batch, 4) == tile_multiset(mixed, 4));
}

TEST_CASE("commutation with a per-pixel channel map is exact") {
  SplitRng rng(31);
  Tensor4 batch(4, 3, 16, 16);
  fill_uniform(batch, rng);
  const auto layout = make_group_layout(rng, 4, 4, 4);

  // Random 1x1 channel mixing applied identically on both paths.
  float a[3][3];
  for (auto& row : a)
    for (auto& v : row) v = static_cast<float>(rng.next_range(-1.0, 1.0));
  auto phi = [&](const Tensor4& x) {
    Tensor4 y(x.n(), 3, x.h(), x.w());
    for (std::int64_t n = 0; n < x.n(); ++n)
      for (std::int64_t p = 0; p < x.h() * x.w(); ++p)
        for (int oc = 0; oc < 3; ++oc) {
          float acc = 0;
          for (int ic = 0; ic < 3; ++ic) acc += a[oc][ic] * x.plane(n, ic)[p];
          y.plane(n, oc)[p] = acc;
        }
    return y;
  };

  CHECK(unmix_tiles(phi(mix_tiles(batch, layout)), layout) == phi(batch));
}

TEST_CASE("3x3 stride-1 conv commutes away from tile boundaries") {
  SplitRng rng(32);
  Tensor4 batch(4, 2, 16, 16);
  fill_uniform(batch, rng);
  const auto layout = make_group_layout(rng, 4, 4, 4);

  std::vector<float> weights(static_cast<std::size_t>(2 * 2 * 9));
  for (auto& v : weights) v = static_cast<float>(rng.next_range(-0.5, 0.5));

  const auto direct = testutil::reference_conv3x3_s1(batch, weights, 2);
  const auto mixed_path =
      unmix_tiles(testutil::reference_conv3x3_s1(mix_tiles(batch, layout), weights, 2), layout);

  const std::int64_t tile = 4;  // 16 / 4
  for (std::int64_t n = 0; n < 4; ++n)
    for (std::int64_t c = 0; c < 2; ++c)
      for (std::int64_t y = 0; y < 16; ++y)
        for (std::int64_t x = 0; x < 16; ++x) {
          const std::int64_t dy = std::min(y % tile, tile - 1 - (y % tile));
          const std::int64_t dx = std::min(x % tile, tile - 1 - (x % tile));
          if (dy < 1 || dx < 1) continue;  // within 1 px of a tile boundary
          CHECK(std::abs(direct.at(n, c, y, x) - mixed_path.at(n, c, y, x)) <= 1e-6f);
        }
}

TEST_CASE("mixing at image scale, unmixing at reduced stride") {
  SplitRng rng(33);
  Tensor4 batch(4, 1, 32, 32);
  fill_uniform(batch, rng);
  const auto layout = make_group_layout(rng, 4, 4, 4);  // image tile 8x8

  auto subsample = [](const Tensor4& x, std::int64_t s) {
    Tensor4 y(x.n(), x.c(), x.h() / s, x.w() / s);
    for (std::int64_t n = 0; n < x.n(); ++n)
      for (std::int64_t c = 0; c < x.c(); ++c)
        for (std::int64_t r = 0; r < y.h(); ++r)
          for (std::int64_t q = 0; q < y.w(); ++q) y.at(n, c, r, q) = x.at(n, c, r * s, q * s);
    return y;
  };

  for (const std::int64_t stride : {2, 4, 8}) {  // strides dividing the tile size
    const auto low_res_mixed = subsample(mix_tiles(batch, layout), stride);
    CHECK(unmix_tiles(low_res_mixed, layout) == subsample(batch, stride));
  }
}

TEST_CASE("cutout") {
  SplitRng rng(41);
  Tensor4 ones(2, 3, 20, 20);
  ones.fill(1.0f);

  SUBCASE("count zero is the identity") { CHECK(cutout(ones, rng, 0, 0.1, 0.2, 0.0f) == ones); }

  SUBCASE("full-size hole zeroes the image") {
    const auto out = cutout(ones, rng, 1, 1.0, 1.0, 0.0f);
    for (std::int64_t i = 0; i < out.size(); ++i) CHECK(out.data()[i] == 0.0f);
  }

  SUBCASE("half-side hole covers a quarter of the pixels") {
    const auto out = cutout(ones, rng, 1, 0.5, 0.5, 0.0f);
    for (std::int64_t n = 0; n < 2; ++n) {
      std::int64_t zeros = 0;
      for (std::int64_t i = 0; i < 3 * 400; ++i) {
        if (out.data()[n * 3 * 400 + i] == 0.0f) ++zeros;
      }
      CHECK(zeros == 3 * 100);  // exactly 10x10 per channel
    }
  }

  SUBCASE("bad arguments") {
    CHECK_THROWS_AS(static_cast<void>(cutout(ones, rng, -1, 0.1, 0.2, 0.f)), InvalidArgument);
    CHECK_THROWS_AS(static_cast<void>(cutout(ones, rng, 1, 0.0, 0.2, 0.f)), InvalidArgument);
    CHECK_THROWS_AS(static_cast<void>(cutout(ones, rng, 1, 0.3, 0.2, 0.f)), InvalidArgument);
  }
}

TEST_CASE("weak augmentation flips images and boxes together") {
  SplitRng rng(55);
  Tensor4 batch(8, 1, 8, 8);
  fill_uniform(batch, rng);
  std::vector<LabelList> labels(8);
  for (auto& l : labels) l.push_back({0, {1.0, 2.0, 3.0, 5.0}});

  Tensor4 flipped = batch;
  auto labels_copy = labels;
  const auto flips = weak_augment(flipped, rng, &labels_copy);

  bool any_flip = false;
  for (std::size_t n = 0; n < 8; ++n) {
    if (!flips[n]) {
      CHECK(flipped.at(static_cast<std::int64_t>(n), 0, 0, 0) == batch.at(static_cast<std::int64_t>(n), 0, 0, 0));
      continue;
    }
    any_flip = true;
    for (std::int64_t y = 0; y < 8; ++y)
      for (std::int64_t x = 0; x < 8; ++x)
        CHECK(flipped.at(static_cast<std::int64_t>(n), 0, y, x) ==
              batch.at(static_cast<std::int64_t>(n), 0, y, 7 - x));
    CHECK(labels_copy[n][0].box == Box{8.0 - 3.0, 2.0, 8.0 - 1.0, 5.0});
  }
  CHECK(any_flip);

  // Flipping twice is the identity.
  Tensor4 twice = flipped;
  apply_flips(twice, flips);
  apply_flips(twice, flips);
  CHECK(twice == flipped);
}

TEST_CASE("strong augmentation stays in [0,1] and respects forced flips") {
  SplitRng rng(66);
  Tensor4 batch(6, 3, 16, 16);
  fill_uniform(batch, rng);

  SUBCASE("range stays clamped") {
    for (int trial = 0; trial < 10; ++trial) {
      Tensor4 x = batch;
      strong_augment(x, rng);
      for (std::int64_t i = 0; i < x.size(); ++i) {
        CHECK(x.data()[i] >= 0.0f);
        CHECK(x.data()[i] <= 1.0f);
      }
    }
  }

  SUBCASE("forced flips are honored") {
    std::vector<std::uint8_t> force(6, 1);
    Tensor4 x = batch;
    const auto used = strong_augment(x, rng, &force);
    CHECK(used == force);
  }
}
