#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rng.hpp"

namespace mum {

/**
 * Per-group tile permutation geometry.
 *
 * cells[g][i][j] names the source image (within the group) whose tile sits at
 * grid position (i, j) of mixed image g. Tiles never move spatially, so for a
 * valid mask every cell position holds a permutation of {0..group_size-1}
 * down the group axis. An unmixing mask has the same representation and is
 * the per-cell inverse permutation of its mixing mask.
 */
struct MaskSet {
  int group_size = 0;
  int tiles_per_axis = 0;
  std::vector<int> cells;  // [group_size][tiles_per_axis][tiles_per_axis]

  int at(int g, int i, int j) const {
    return cells[static_cast<std::size_t>((g * tiles_per_axis + i) * tiles_per_axis + j)];
  }
  int& at(int g, int i, int j) {
    return cells[static_cast<std::size_t>((g * tiles_per_axis + i) * tiles_per_axis + j)];
  }

  bool operator==(const MaskSet&) const = default;
};

using MixingMaskSet = MaskSet;
using UnmixingMaskSet = MaskSet;

struct MaskViolation {
  int row = 0;
  int col = 0;
  std::string reason;
};

/// Identity mask set: every cell sources its own image.
MaskSet identity_masks(int group_size, int tiles_per_axis);

/// Draws an independent uniform permutation of group indices at every cell
/// position. Deterministic given the rng state.
MaskSet generate_masks(SplitRng& rng, int group_size, int tiles_per_axis);

/// Cell positions whose column down the group axis is not a permutation.
std::vector<MaskViolation> validate_masks(const MaskSet& m);

/// Per-cell inverse permutation; throws ValidationError on invalid input.
UnmixingMaskSet invert_masks(const MixingMaskSet& m);

/// JSON round-trip (fields: group_size, tiles_per_axis, cells).
std::string masks_to_json(const MaskSet& m);
MaskSet masks_from_json(const std::string& text);

}  // namespace mum
