#pragma once

#include <cstdint>
#include <vector>

#include "rng.hpp"
#include "tensor.hpp"
#include "types.hpp"

namespace mum {

/// Class ids of the rendered shape kinds.
enum class ShapeClass : int { kRectangle = 0, kDisk = 1, kTriangle = 2 };
inline constexpr int kNumShapeClasses = 3;

/**
 * One rendered scene: textured background plus 1..3 filled shapes of random
 * color and size, each fully inside the image with side >= 8 px. `objects`
 * is the ground truth; for unlabeled splits it is retained for evaluation
 * only and never fed to training losses.
 */
struct SyntheticScene {
  Tensor4 image;  // (1, 3, size, size), values in [0, 1]
  LabelList objects;
};

std::vector<SyntheticScene> generate_scenes(SplitRng& rng, std::int64_t count, int image_size);

struct DatasetSplits {
  std::vector<SyntheticScene> labeled;
  std::vector<SyntheticScene> unlabeled;
};

DatasetSplits generate_dataset(SplitRng& rng, std::int64_t n_labeled, std::int64_t n_unlabeled,
                               int image_size);

}  // namespace mum
