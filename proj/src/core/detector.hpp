#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "rng.hpp"
#include "teacher_student.hpp"
#include "tensor.hpp"
#include "types.hpp"

namespace mum {

/**
 * Architecture descriptor for the toy one-stage detector: three 3x3 stride-2
 * conv+ReLU layers (total stride 8) followed by a 1x1 head emitting
 * num_classes class logits and 4 box offsets per feature cell.
 */
struct DetectorArch {
  int input_size = 64;
  int num_classes = 3;
  int c1 = 16, c2 = 32, c3 = 64;

  static constexpr int kTotalStride = 8;

  int feature_size() const { return input_size / kTotalStride; }
  int head_channels() const { return num_classes + 4; }

  std::int64_t param_count() const;
  std::string arch_id() const;
  void validate() const;

  bool operator==(const DetectorArch&) const = default;
};

/// Offsets of each weight/bias block inside the flat parameter vector.
struct ParamLayout {
  std::int64_t w1 = 0, b1 = 0, w2 = 0, b2 = 0, w3 = 0, b3 = 0, wh = 0, bh = 0;
  std::int64_t total = 0;
};
ParamLayout param_layout(const DetectorArch& arch);

/// He-normal conv weights, zero biases; class logit biases start at
/// -log((1-pi)/pi), pi=0.01, so the untrained detector predicts background.
ModelState init_params(const DetectorArch& arch, SplitRng& rng);

/// Forward state kept for the backward pass.
template <typename T>
struct BackboneCache {
  TensorT<T> act1, act2, feat;
  std::vector<T> col0, col1, col2;  // im2col buffers per layer, batch-major
};

template <typename T>
TensorT<T> backbone_forward(const DetectorArch& arch, std::span<const T> params,
                            const TensorT<T>& batch, BackboneCache<T>* cache = nullptr);

template <typename T>
TensorT<T> head_forward(const DetectorArch& arch, std::span<const T> params,
                        const TensorT<T>& features);

template <typename T>
void head_backward(const DetectorArch& arch, std::span<const T> params, const TensorT<T>& features,
                   const TensorT<T>& d_out, std::span<T> d_params, TensorT<T>* d_features);

template <typename T>
void backbone_backward(const DetectorArch& arch, std::span<const T> params,
                       const TensorT<T>& batch, const BackboneCache<T>& cache,
                       const TensorT<T>& d_feat, std::span<T> d_params,
                       TensorT<T>* d_input = nullptr);

struct LossResult {
  double cls = 0;
  double reg = 0;
  std::int64_t n_pos = 0;

  double total() const { return cls + reg; }
};

/**
 * Dense detection loss against per-image target lists. A feature cell is
 * positive iff its center falls inside a target box (smallest-area box wins
 * overlaps). Classification is sigmoid focal loss (gamma=2, alpha=0.25) over
 * every cell/class logit; regression is smooth-L1 on (center-offset,
 * log-size) at positive cells only. Both terms are normalized by the
 * positive-cell count (1 when there are none). When `d_head_out` is given it
 * receives d(cls + reg)/d(head_out).
 */
template <typename T>
LossResult detection_loss(const DetectorArch& arch, const TensorT<T>& head_out,
                          const std::vector<LabelList>& targets, bool include_reg = true,
                          TensorT<T>* d_head_out = nullptr);

/// Sigmoid scores, box decode, score filter, class-wise NMS; one list per image.
std::vector<std::vector<Detection>> decode_detections(const DetectorArch& arch,
                                                      const Tensor4& head_out, double score_floor,
                                                      double nms_iou, int max_per_image = 100);

}  // namespace mum
