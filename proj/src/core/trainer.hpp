#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "augment.hpp"
#include "dataset.hpp"
#include "detector.hpp"
#include "rng.hpp"
#include "teacher_student.hpp"
#include "tensor.hpp"
#include "types.hpp"

namespace mum {

/// Every training knob; defaults follow the reference hyperparameter table
/// plus the desk-scale dataset/model sizing.
struct TrainConfig {
  std::uint64_t seed = 42;
  std::int64_t total_steps = 2000;

  // data
  int image_size = 64;
  int num_classes = kNumShapeClasses;
  std::int64_t n_labeled = 50;
  std::int64_t n_unlabeled = 450;
  std::int64_t n_eval = 100;
  std::int64_t batch_labeled = 8;
  std::int64_t batch_unlabeled = 8;

  // teacher-student
  double tau = 0.7;
  double lambda_u = 4.0;
  double delta_init = 0.5;
  double delta_final = 0.9996;
  std::int64_t ramp_end_step = 500;

  // MUM
  double mum_probability = 1.0;
  int group_size = 4;
  int tiles_per_axis = 4;

  // optimizer
  double lr = 0.01;
  double momentum = 0.9;
  double weight_decay = 1e-4;

  // model
  int conv1_channels = 16;
  int conv2_channels = 32;
  int conv3_channels = 64;

  // evaluation / inference
  std::int64_t eval_interval = 200;
  double score_floor = 0.05;
  double nms_iou = 0.5;

  // modes
  bool supervised_only = false;
  bool unsup_reg = true;  // keep the regression term in the unsupervised loss
  std::int64_t snapshot_interval = 0;

  DetectorArch arch() const {
    return DetectorArch{image_size, num_classes, conv1_channels, conv2_channels, conv3_channels};
  }
  void validate() const;
};

/// key = value text round-trip; unknown keys are rejected.
TrainConfig load_train_config(const std::string& path);
void apply_config_override(TrainConfig& cfg, const std::string& key, const std::string& value);
std::string train_config_to_string(const TrainConfig& cfg);

struct StepLog {
  std::int64_t step = 0;
  double loss_s = 0;
  double loss_u = 0;
  double loss_total = 0;
  double delta = 0;
  std::int64_t n_pseudo = 0;
  double min_pseudo_score = 0;  // 0 when no pseudo labels survived
  bool mum_applied = false;
};

struct StepEvent {
  StepLog log;
  bool has_eval = false;
  double ap50_teacher = 0;
  double ap50_student = 0;
  const Tensor4* mixed_batch = nullptr;  // set on snapshot steps
};
using TrainObserver = std::function<void(const StepEvent&)>;

struct EvalPoint {
  StepLog log;
  double ap50_teacher = 0;
  double ap50_student = 0;
};

struct TrainResult {
  ModelState student;
  ModelState teacher;
  std::vector<EvalPoint> history;
  double final_ap50_teacher = 0;
  double final_ap50_student = 0;
};

/**
 * The pseudo-label teacher-student loop. Per step: supervised loss on weak +
 * strong views of a labeled batch; teacher pseudo-labels on a weakly
 * augmented unlabeled batch; student unsupervised loss on the strong view,
 * routed mix -> backbone -> unmix with probability mum_probability; SGD
 * update of the student and an EMA update of the teacher.
 *
 * All randomness descends from config.seed through split streams, one per
 * purpose, so disabling a branch (supervised_only, lambda_u = 0) leaves the
 * remaining streams untouched.
 */
class Trainer {
 public:
  explicit Trainer(TrainConfig cfg);

  struct State {
    ModelState student;
    ModelState teacher;
    std::vector<float> velocity;
    std::int64_t step = 0;
  };

  /// Everything one optimizer step consumes, fixed before any student
  /// forward pass: the augmented supervised batch with its labels, and the
  /// strong unlabeled view with the teacher's filtered pseudo labels.
  struct StepData {
    Tensor4 sup_batch;
    std::vector<LabelList> sup_labels;
    bool run_unsup = false;
    Tensor4 unsup_view;  // strong view, before any mixing
    std::vector<LabelList> pseudo_labels;
    bool apply_mum = false;
    GroupLayout layout;
    std::int64_t n_pseudo = 0;
    double min_pseudo_score = 0;
  };

  /// Draws the next step's batches/augmentations/pseudo labels; consumes one
  /// step's worth of the step stream.
  StepData prepare_step_data(const State& state);

  /// Supervised + unsupervised losses (and, when grad is non-null, the
  /// gradient of loss_s + lambda_u * loss_u) for fixed step data.
  struct LossBreakdown {
    double loss_s = 0;
    double loss_u = 0;
  };
  LossBreakdown loss_and_grad(std::span<const float> params, const StepData& data,
                              std::vector<float>* grad);

  State make_initial_state();
  StepLog train_step(State& state);

  /// Teacher/student AP50 on the held-out eval scenes.
  double evaluate_ap50(const ModelState& model) const;

  /// Runs total_steps steps; writes metrics.csv, config.txt and final
  /// checkpoints into out_dir (skipped when out_dir is empty).
  TrainResult run(const std::string& out_dir = "", const TrainObserver& observer = nullptr);

  const TrainConfig& config() const { return cfg_; }
  const std::vector<SyntheticScene>& labeled_scenes() const { return data_.labeled; }
  const std::vector<SyntheticScene>& unlabeled_scenes() const { return data_.unlabeled; }
  const std::vector<SyntheticScene>& eval_scenes() const { return eval_scenes_; }

 private:
  Tensor4 gather_images(const std::vector<SyntheticScene>& pool,
                        const std::vector<std::int64_t>& indices) const;
  std::vector<std::int64_t> sample_indices(SplitRng& rng, std::int64_t pool_size,
                                           std::int64_t count) const;

  TrainConfig cfg_;
  DetectorArch arch_;
  DatasetSplits data_;
  std::vector<SyntheticScene> eval_scenes_;
  SplitRng step_stream_;
  SplitRng init_stream_;
  Tensor4 last_mixed_;  // snapshot of the most recent mixed student batch
};

}  // namespace mum
