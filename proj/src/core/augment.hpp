#pragma once

#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

#include "errors.hpp"
#include "grid.hpp"
#include "rng.hpp"
#include "tensor.hpp"
#include "types.hpp"

namespace mum {

/**
 * Partition of a batch into consecutive mixing groups, each with its own
 * mask set. Full groups have group_size members; a trailing remainder of
 * size r >= 1 forms its own group (for r == 1 the only legal mask is the
 * identity, so lone images pass through unchanged).
 */
struct GroupLayout {
  int tiles_per_axis = 0;

  struct Group {
    std::int64_t begin = 0;
    int size = 0;
    MixingMaskSet masks;
  };
  std::vector<Group> groups;

  std::int64_t batch() const {
    return groups.empty() ? 0 : groups.back().begin + groups.back().size;
  }
};

/// Draws per-group masks for a batch; each group gets independent draws.
GroupLayout make_group_layout(SplitRng& rng, std::int64_t batch, int group_size,
                              int tiles_per_axis);

/// All groups use identity masks (mixing becomes a no-op).
GroupLayout identity_group_layout(std::int64_t batch, int group_size, int tiles_per_axis);

/// One group spanning the whole batch with the given masks (batch must be a
/// multiple of masks.group_size; the mask set is reused per group).
GroupLayout layout_from_masks(const MixingMaskSet& masks, std::int64_t batch);

namespace detail {

template <typename T>
void check_tileable(const TensorT<T>& t, const GroupLayout& layout) {
  if (layout.tiles_per_axis < 1) throw InvalidArgument("layout tiles_per_axis must be >= 1");
  if (layout.batch() != t.n()) {
    throw InvalidArgument("layout covers batch of " + std::to_string(layout.batch()) +
                          " but tensor has n=" + std::to_string(t.n()));
  }
  if (t.h() % layout.tiles_per_axis != 0) {
    throw ShapeError("height " + std::to_string(t.h()) + " is not divisible by tiles_per_axis " +
                     std::to_string(layout.tiles_per_axis));
  }
  if (t.w() % layout.tiles_per_axis != 0) {
    throw ShapeError("width " + std::to_string(t.w()) + " is not divisible by tiles_per_axis " +
                     std::to_string(layout.tiles_per_axis));
  }
}

// Shared mix/unmix kernel: pure per-tile copy, never interpolates values.
// Works at any spatial resolution whose sides divide by tiles_per_axis, so
// the same code moves image tiles and feature-map tiles.
template <typename T>
TensorT<T> permute_tiles(const TensorT<T>& in, const GroupLayout& layout, bool invert) {
  check_tileable(in, layout);
  const int nt = layout.tiles_per_axis;
  const std::int64_t th = in.h() / nt;
  const std::int64_t tw = in.w() / nt;

  TensorT<T> out(in.n(), in.c(), in.h(), in.w());
  for (const auto& group : layout.groups) {
    if (group.masks.group_size != group.size || group.masks.tiles_per_axis != nt) {
      throw InvalidArgument("group mask shape does not match layout");
    }
    const MaskSet masks = invert ? invert_masks(group.masks) : group.masks;
    for (int g = 0; g < group.size; ++g) {
      for (std::int64_t c = 0; c < in.c(); ++c) {
        T* dst_plane = out.plane(group.begin + g, c);
        for (int i = 0; i < nt; ++i) {
          for (int j = 0; j < nt; ++j) {
            const int src = masks.at(g, i, j);
            const T* src_plane = in.plane(group.begin + src, c);
            for (std::int64_t r = 0; r < th; ++r) {
              const std::int64_t off = (i * th + r) * in.w() + j * tw;
              std::memcpy(dst_plane + off, src_plane + off, sizeof(T) * static_cast<std::size_t>(tw));
            }
          }
        }
      }
    }
  }
  return out;
}

}  // namespace detail

/// Reassembles each mixed image from its group per the mixing masks.
template <typename T>
TensorT<T> mix_tiles(const TensorT<T>& batch, const GroupLayout& layout) {
  return detail::permute_tiles(batch, layout, /*invert=*/false);
}

/// Inverse tile permutation at whatever spatial stride the input carries.
template <typename T>
TensorT<T> unmix_tiles(const TensorT<T>& features, const GroupLayout& layout) {
  return detail::permute_tiles(features, layout, /*invert=*/true);
}

/**
 * Overwrites `count` random axis-aligned rectangles per image with `fill`.
 * Side lengths are drawn from [frac_lo, frac_hi] as fractions of the image
 * sides; rectangles always lie fully inside the image.
 */
Tensor4 cutout(const Tensor4& batch, SplitRng& rng, int count, double frac_lo, double frac_hi,
               float fill);

/**
 * Weak augmentation: horizontal flip with probability 0.5 per image, applied
 * in place. When `labels` is given, box x-coordinates are flipped to match.
 * Returns the per-image flip decisions.
 */
std::vector<std::uint8_t> weak_augment(Tensor4& batch, SplitRng& rng,
                                       std::vector<LabelList>* labels = nullptr);

/**
 * Strong augmentation: the weak flip, then per-channel brightness/contrast
 * jitter (factor in [0.6, 1.4], offset in [-0.1, 0.1], clamped to [0, 1]),
 * then 1..3 cutout holes of fractional size [0.05, 0.2] filled with 0.5.
 * `forced_flips` reuses flip decisions recorded by a weak pass so that a
 * weak/strong pair of the same images stays geometrically aligned.
 */
std::vector<std::uint8_t> strong_augment(Tensor4& batch, SplitRng& rng,
                                         const std::vector<std::uint8_t>* forced_flips = nullptr,
                                         std::vector<LabelList>* labels = nullptr);

/// Horizontal flip of selected images (in place), boxes adjusted when given.
void apply_flips(Tensor4& batch, const std::vector<std::uint8_t>& flips,
                 std::vector<LabelList>* labels = nullptr);

}  // namespace mum
