#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "types.hpp"

namespace mum {

/// Immutable snapshot of one model's parameters.
struct ModelState {
  std::string arch_id;
  std::vector<float> params;

  std::int64_t size() const { return static_cast<std::int64_t>(params.size()); }
};

/**
 * One exponential-moving-average step: teacher * decay + student * (1 - decay)
 * elementwise. decay in [0, 1]; states must share arch and length.
 */
ModelState ema_update(const ModelState& teacher, const ModelState& student, double decay);

/**
 * Decay warm-up: linear ramp from d_init at step 0 to d_final at
 * ramp_end_step, clamped to d_final afterward. Defaults ramp 0.5 -> 0.9996.
 */
double decay_schedule(std::int64_t step, std::int64_t ramp_end_step, double d_init = 0.5,
                      double d_final = 0.9996);

/// Keeps detections with score >= tau, input order preserved.
std::vector<PseudoLabel> filter_pseudo_labels(const std::vector<Detection>& dets, double tau);

/**
 * Greedy class-wise non-maximum suppression. Survivors come out sorted by
 * descending score, ties broken by ascending input index; a detection is
 * suppressed when a surviving same-class box overlaps it with
 * IoU > iou_threshold.
 */
std::vector<Detection> nms(const std::vector<Detection>& dets, double iou_threshold);

struct Checkpoint {
  ModelState state;
  std::int64_t step = 0;
  double decay = 0;
};

/**
 * Writes `path` as a little-endian float32 array and `path + ".json"` as the
 * manifest (arch_id, length, step, decay).
 */
void save_checkpoint(const std::string& path, const ModelState& state, std::int64_t step,
                     double decay);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace mum
