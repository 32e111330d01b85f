#include "augment.hpp"

#include <algorithm>
#include <cmath>

namespace mum {

namespace {

void check_layout_args(std::int64_t batch, int group_size, int tiles_per_axis) {
  if (batch < 1) throw InvalidArgument("batch must be >= 1, got " + std::to_string(batch));
  if (group_size < 1) throw InvalidArgument("group_size must be >= 1, got " + std::to_string(group_size));
  if (tiles_per_axis < 1)
    throw InvalidArgument("tiles_per_axis must be >= 1, got " + std::to_string(tiles_per_axis));
}

}  // namespace

GroupLayout make_group_layout(SplitRng& rng, std::int64_t batch, int group_size,
                              int tiles_per_axis) {
  check_layout_args(batch, group_size, tiles_per_axis);
  GroupLayout layout;
  layout.tiles_per_axis = tiles_per_axis;
  std::int64_t begin = 0;
  while (begin < batch) {
    const int size = static_cast<int>(std::min<std::int64_t>(group_size, batch - begin));
    layout.groups.push_back({begin, size, generate_masks(rng, size, tiles_per_axis)});
    begin += size;
  }
  return layout;
}

GroupLayout identity_group_layout(std::int64_t batch, int group_size, int tiles_per_axis) {
  check_layout_args(batch, group_size, tiles_per_axis);
  GroupLayout layout;
  layout.tiles_per_axis = tiles_per_axis;
  std::int64_t begin = 0;
  while (begin < batch) {
    const int size = static_cast<int>(std::min<std::int64_t>(group_size, batch - begin));
    layout.groups.push_back({begin, size, identity_masks(size, tiles_per_axis)});
    begin += size;
  }
  return layout;
}

GroupLayout layout_from_masks(const MixingMaskSet& masks, std::int64_t batch) {
  const auto violations = validate_masks(masks);
  if (!violations.empty()) {
    throw ValidationError("invalid mask set: " + violations.front().reason);
  }
  if (batch < 1 || batch % masks.group_size != 0) {
    throw InvalidArgument("batch " + std::to_string(batch) + " is not a multiple of group_size " +
                          std::to_string(masks.group_size));
  }
  GroupLayout layout;
  layout.tiles_per_axis = masks.tiles_per_axis;
  for (std::int64_t begin = 0; begin < batch; begin += masks.group_size) {
    layout.groups.push_back({begin, masks.group_size, masks});
  }
  return layout;
}

Tensor4 cutout(const Tensor4& batch, SplitRng& rng, int count, double frac_lo, double frac_hi,
               float fill) {
  if (count < 0) throw InvalidArgument("cutout count must be >= 0, got " + std::to_string(count));
  if (!(frac_lo > 0.0) || frac_hi > 1.0 || frac_lo > frac_hi) {
    throw InvalidArgument("cutout size fractions must satisfy 0 < lo <= hi <= 1");
  }
  Tensor4 out = batch;
  for (std::int64_t n = 0; n < out.n(); ++n) {
    for (int k = 0; k < count; ++k) {
      const auto rh = std::max<std::int64_t>(
          1, static_cast<std::int64_t>(std::llround(rng.next_range(frac_lo, frac_hi) * static_cast<double>(out.h()))));
      const auto rw = std::max<std::int64_t>(
          1, static_cast<std::int64_t>(std::llround(rng.next_range(frac_lo, frac_hi) * static_cast<double>(out.w()))));
      const auto h0 = static_cast<std::int64_t>(rng.next_below(static_cast<std::uint64_t>(out.h() - rh + 1)));
      const auto w0 = static_cast<std::int64_t>(rng.next_below(static_cast<std::uint64_t>(out.w() - rw + 1)));
      for (std::int64_t c = 0; c < out.c(); ++c) {
        float* plane = out.plane(n, c);
        for (std::int64_t r = h0; r < h0 + rh; ++r) {
          std::fill(plane + r * out.w() + w0, plane + r * out.w() + w0 + rw, fill);
        }
      }
    }
  }
  return out;
}

void apply_flips(Tensor4& batch, const std::vector<std::uint8_t>& flips,
                 std::vector<LabelList>* labels) {
  if (static_cast<std::int64_t>(flips.size()) != batch.n()) {
    throw InvalidArgument("flip vector size does not match batch");
  }
  if (labels && static_cast<std::int64_t>(labels->size()) != batch.n()) {
    throw InvalidArgument("label list size does not match batch");
  }
  const std::int64_t w = batch.w();
  for (std::int64_t n = 0; n < batch.n(); ++n) {
    if (!flips[static_cast<std::size_t>(n)]) continue;
    for (std::int64_t c = 0; c < batch.c(); ++c) {
      float* plane = batch.plane(n, c);
      for (std::int64_t r = 0; r < batch.h(); ++r) {
        std::reverse(plane + r * w, plane + (r + 1) * w);
      }
    }
    if (labels) {
      for (auto& obj : (*labels)[static_cast<std::size_t>(n)]) {
        const double x_min = obj.box.x_min, x_max = obj.box.x_max;
        obj.box.x_min = static_cast<double>(w) - x_max;
        obj.box.x_max = static_cast<double>(w) - x_min;
      }
    }
  }
}

std::vector<std::uint8_t> weak_augment(Tensor4& batch, SplitRng& rng,
                                       std::vector<LabelList>* labels) {
  std::vector<std::uint8_t> flips(static_cast<std::size_t>(batch.n()));
  for (auto& f : flips) f = rng.bernoulli(0.5) ? 1 : 0;
  apply_flips(batch, flips, labels);
  return flips;
}

std::vector<std::uint8_t> strong_augment(Tensor4& batch, SplitRng& rng,
                                         const std::vector<std::uint8_t>* forced_flips,
                                         std::vector<LabelList>* labels) {
  std::vector<std::uint8_t> flips;
  if (forced_flips) {
    flips = *forced_flips;
    apply_flips(batch, flips, labels);
  } else {
    flips = weak_augment(batch, rng, labels);
  }

  // Per-channel brightness/contrast jitter on a [0,1] scale.
  for (std::int64_t n = 0; n < batch.n(); ++n) {
    for (std::int64_t c = 0; c < batch.c(); ++c) {
      const float factor = static_cast<float>(rng.next_range(0.6, 1.4));
      const float offset = static_cast<float>(rng.next_range(-0.1, 0.1));
      float* plane = batch.plane(n, c);
      const std::int64_t hw = batch.h() * batch.w();
      for (std::int64_t i = 0; i < hw; ++i) {
        plane[i] = std::clamp(plane[i] * factor + offset, 0.0f, 1.0f);
      }
    }
  }

  const int holes = 1 + static_cast<int>(rng.next_below(3));
  batch = cutout(batch, rng, holes, 0.05, 0.2, 0.5f);
  return flips;
}

}  // namespace mum
