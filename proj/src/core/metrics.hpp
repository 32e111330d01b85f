#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "types.hpp"

namespace mum {

/// Intersection-over-union of two boxes; 0 when either is degenerate.
double iou(const Box& a, const Box& b);

struct PrPoint {
  double recall = 0;
  double precision = 0;
};

struct ClassAp {
  int class_id = 0;
  double ap = 0;
  std::int64_t n_gt = 0;
  std::vector<PrPoint> pr;  // one point per prediction, in score order
};

struct EvalResult {
  std::vector<ClassAp> per_class;  // classes present in the ground truth
  double map50 = 0;                // mean over per_class
  std::int64_t n_images = 0;
};

/**
 * AP at IoU >= 0.5 with all-point interpolation. Predictions are matched
 * greedily in (score desc, input index asc) order against the unmatched
 * ground-truth box of the same image/class with the highest IoU.
 */
EvalResult ap50(const std::vector<std::vector<Detection>>& preds,
                const std::vector<LabelList>& gts);

/**
 * Mean over boxes of the number of grid tiles the box overlaps with strictly
 * positive area (touching a tile boundary does not count). The image is
 * divided into tiles_per_axis x tiles_per_axis tiles.
 */
double compute_no(std::span<const Box> boxes, double image_w, double image_h, int tiles_per_axis);

}  // namespace mum
