#include "mum/mum.h"

#include <cstring>
#include <exception>
#include <string>
#include <vector>

#include <json.hpp>

#include "augment.hpp"
#include "dataset.hpp"
#include "errors.hpp"
#include "grid.hpp"
#include "metrics.hpp"
#include "rng.hpp"
#include "teacher_student.hpp"
#include "tensor.hpp"
#include "trainer.hpp"

// Thin extern-C shell over the C++ core: translates exceptions into status
// codes and wraps core values in opaque heap objects.

struct mum_rng {
  mum::SplitRng rng;
};
struct mum_mask_set {
  mum::MaskSet masks;
};
struct mum_tensor {
  mum::Tensor4 tensor;
};
struct mum_layout {
  mum::GroupLayout layout;
};
struct mum_dataset {
  std::vector<mum::SyntheticScene> scenes;
};
struct mum_train_config {
  mum::TrainConfig cfg;
};

namespace {

thread_local std::string g_last_error;

void set_error(const std::string& msg) { g_last_error = msg; }

template <typename Fn>
mum_status guarded(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return MUM_OK;
  } catch (const mum::InvalidArgument& e) {
    set_error(e.what());
    return MUM_ERR_INVALID_ARGUMENT;
  } catch (const mum::ShapeError& e) {
    set_error(e.what());
    return MUM_ERR_SHAPE;
  } catch (const mum::ValidationError& e) {
    set_error(e.what());
    return MUM_ERR_VALIDATION;
  } catch (const mum::IoError& e) {
    set_error(e.what());
    return MUM_ERR_IO;
  } catch (const std::exception& e) {
    set_error(e.what());
    return MUM_ERR_INTERNAL;
  } catch (...) {
    set_error("unknown error");
    return MUM_ERR_INTERNAL;
  }
}

mum_status require(bool cond, const char* msg) {
  if (cond) return MUM_OK;
  set_error(msg);
  return MUM_ERR_INVALID_ARGUMENT;
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out) std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

nlohmann::json labels_to_json(const mum::LabelList& labels) {
  auto arr = nlohmann::json::array();
  for (const auto& obj : labels) {
    arr.push_back({{"class", obj.class_id},
                   {"box", {obj.box.x_min, obj.box.y_min, obj.box.x_max, obj.box.y_max}}});
  }
  return arr;
}

}  // namespace

extern "C" {

const char* mum_status_name(mum_status status) {
  switch (status) {
    case MUM_OK: return "ok";
    case MUM_ERR_INVALID_ARGUMENT: return "invalid-argument";
    case MUM_ERR_SHAPE: return "shape-error";
    case MUM_ERR_VALIDATION: return "validation-error";
    case MUM_ERR_IO: return "io-error";
    case MUM_ERR_INTERNAL: return "internal-error";
  }
  return "unknown";
}

const char* mum_last_error(void) { return g_last_error.c_str(); }

void mum_string_free(char* text) { std::free(text); }
void mum_buffer_free(float* buffer) { std::free(buffer); }

/* ---- rng ---------------------------------------------------------------- */

mum_status mum_rng_create(uint64_t seed, mum_rng** out) {
  if (auto s = require(out != nullptr, "out must not be NULL")) return s;
  return guarded([&] { *out = new mum_rng{mum::SplitRng(seed)}; });
}

mum_status mum_rng_split(mum_rng* rng, mum_rng** out) {
  if (auto s = require(rng && out, "rng and out must not be NULL")) return s;
  return guarded([&] { *out = new mum_rng{rng->rng.split()}; });
}

void mum_rng_destroy(mum_rng* rng) { delete rng; }

/* ---- masks -------------------------------------------------------------- */

mum_status mum_mask_generate(mum_rng* rng, int32_t group_size, int32_t tiles_per_axis,
                             mum_mask_set** out) {
  if (auto s = require(rng && out, "rng and out must not be NULL")) return s;
  return guarded([&] { *out = new mum_mask_set{mum::generate_masks(rng->rng, group_size, tiles_per_axis)}; });
}

mum_status mum_mask_identity(int32_t group_size, int32_t tiles_per_axis, mum_mask_set** out) {
  if (auto s = require(out != nullptr, "out must not be NULL")) return s;
  return guarded([&] { *out = new mum_mask_set{mum::identity_masks(group_size, tiles_per_axis)}; });
}

mum_status mum_mask_invert(const mum_mask_set* masks, mum_mask_set** out) {
  if (auto s = require(masks && out, "masks and out must not be NULL")) return s;
  return guarded([&] { *out = new mum_mask_set{mum::invert_masks(masks->masks)}; });
}

mum_status mum_mask_validate(const mum_mask_set* masks, int64_t* violations, char** report) {
  if (auto s = require(masks && violations, "masks and violations must not be NULL")) return s;
  return guarded([&] {
    const auto v = mum::validate_masks(masks->masks);
    *violations = static_cast<int64_t>(v.size());
    if (report) {
      std::string text;
      for (const auto& item : v) {
        text += item.reason;
        text += '\n';
      }
      *report = dup_string(text);
    }
  });
}

mum_status mum_mask_to_json(const mum_mask_set* masks, char** json) {
  if (auto s = require(masks && json, "masks and json must not be NULL")) return s;
  return guarded([&] { *json = dup_string(mum::masks_to_json(masks->masks)); });
}

mum_status mum_mask_from_json(const char* json, mum_mask_set** out) {
  if (auto s = require(json && out, "json and out must not be NULL")) return s;
  return guarded([&] { *out = new mum_mask_set{mum::masks_from_json(json)}; });
}

int32_t mum_mask_group_size(const mum_mask_set* masks) {
  return masks ? masks->masks.group_size : 0;
}

int32_t mum_mask_tiles_per_axis(const mum_mask_set* masks) {
  return masks ? masks->masks.tiles_per_axis : 0;
}

mum_status mum_mask_cell(const mum_mask_set* masks, int32_t grid, int32_t row, int32_t col,
                         int32_t* out) {
  if (auto s = require(masks && out, "masks and out must not be NULL")) return s;
  const auto& m = masks->masks;
  if (auto s = require(grid >= 0 && grid < m.group_size && row >= 0 && row < m.tiles_per_axis &&
                           col >= 0 && col < m.tiles_per_axis,
                       "mask cell index out of range")) {
    return s;
  }
  *out = m.at(grid, row, col);
  return MUM_OK;
}

void mum_mask_destroy(mum_mask_set* masks) { delete masks; }

/* ---- tensors ------------------------------------------------------------ */

mum_status mum_tensor_create(int64_t n, int64_t c, int64_t h, int64_t w, mum_tensor** out) {
  if (auto s = require(out != nullptr, "out must not be NULL")) return s;
  return guarded([&] { *out = new mum_tensor{mum::Tensor4(n, c, h, w)}; });
}

mum_status mum_tensor_clone(const mum_tensor* tensor, mum_tensor** out) {
  if (auto s = require(tensor && out, "tensor and out must not be NULL")) return s;
  return guarded([&] { *out = new mum_tensor{tensor->tensor}; });
}

void mum_tensor_destroy(mum_tensor* tensor) { delete tensor; }

float* mum_tensor_data(mum_tensor* tensor) { return tensor ? tensor->tensor.data() : nullptr; }

const float* mum_tensor_data_const(const mum_tensor* tensor) {
  return tensor ? tensor->tensor.data() : nullptr;
}

int64_t mum_tensor_dim(const mum_tensor* tensor, int32_t axis) {
  if (!tensor) return 0;
  switch (axis) {
    case 0: return tensor->tensor.n();
    case 1: return tensor->tensor.c();
    case 2: return tensor->tensor.h();
    case 3: return tensor->tensor.w();
    default: return 0;
  }
}

int64_t mum_tensor_size(const mum_tensor* tensor) { return tensor ? tensor->tensor.size() : 0; }

/* ---- layouts and kernels ------------------------------------------------ */

mum_status mum_layout_create(mum_rng* rng, int64_t batch, int32_t group_size,
                             int32_t tiles_per_axis, mum_layout** out) {
  if (auto s = require(rng && out, "rng and out must not be NULL")) return s;
  return guarded([&] {
    *out = new mum_layout{mum::make_group_layout(rng->rng, batch, group_size, tiles_per_axis)};
  });
}

mum_status mum_layout_identity(int64_t batch, int32_t group_size, int32_t tiles_per_axis,
                               mum_layout** out) {
  if (auto s = require(out != nullptr, "out must not be NULL")) return s;
  return guarded([&] {
    *out = new mum_layout{mum::identity_group_layout(batch, group_size, tiles_per_axis)};
  });
}

mum_status mum_layout_from_masks(const mum_mask_set* masks, int64_t batch, mum_layout** out) {
  if (auto s = require(masks && out, "masks and out must not be NULL")) return s;
  return guarded([&] { *out = new mum_layout{mum::layout_from_masks(masks->masks, batch)}; });
}

void mum_layout_destroy(mum_layout* layout) { delete layout; }

mum_status mum_mix_tiles(const mum_tensor* batch, const mum_layout* layout, mum_tensor** out) {
  if (auto s = require(batch && layout && out, "batch, layout and out must not be NULL")) return s;
  return guarded([&] { *out = new mum_tensor{mum::mix_tiles(batch->tensor, layout->layout)}; });
}

mum_status mum_unmix_tiles(const mum_tensor* batch, const mum_layout* layout, mum_tensor** out) {
  if (auto s = require(batch && layout && out, "batch, layout and out must not be NULL")) return s;
  return guarded([&] { *out = new mum_tensor{mum::unmix_tiles(batch->tensor, layout->layout)}; });
}

mum_status mum_cutout(const mum_tensor* batch, mum_rng* rng, int32_t count, double frac_lo,
                      double frac_hi, float fill, mum_tensor** out) {
  if (auto s = require(batch && rng && out, "batch, rng and out must not be NULL")) return s;
  return guarded([&] {
    *out = new mum_tensor{mum::cutout(batch->tensor, rng->rng, count, frac_lo, frac_hi, fill)};
  });
}

mum_status mum_weak_augment(mum_tensor* batch, mum_rng* rng) {
  if (auto s = require(batch && rng, "batch and rng must not be NULL")) return s;
  return guarded([&] { mum::weak_augment(batch->tensor, rng->rng); });
}

mum_status mum_strong_augment(mum_tensor* batch, mum_rng* rng) {
  if (auto s = require(batch && rng, "batch and rng must not be NULL")) return s;
  return guarded([&] { mum::strong_augment(batch->tensor, rng->rng); });
}

/* ---- teacher-student ----------------------------------------------------- */

mum_status mum_ema_update(const float* teacher, const float* student, int64_t length, double decay,
                          float* out) {
  if (auto s = require(teacher && student && out, "buffers must not be NULL")) return s;
  if (auto s = require(length >= 0, "length must be >= 0")) return s;
  return guarded([&] {
    mum::ModelState t, st;
    t.arch_id = st.arch_id = "raw";
    t.params.assign(teacher, teacher + length);
    st.params.assign(student, student + length);
    const auto r = mum::ema_update(t, st, decay);
    std::memcpy(out, r.params.data(), static_cast<std::size_t>(length) * sizeof(float));
  });
}

mum_status mum_decay_schedule(int64_t step, int64_t ramp_end_step, double d_init, double d_final,
                              double* out) {
  if (auto s = require(out != nullptr, "out must not be NULL")) return s;
  return guarded([&] { *out = mum::decay_schedule(step, ramp_end_step, d_init, d_final); });
}

mum_status mum_checkpoint_save(const char* path, const char* arch_id, const float* params,
                               int64_t length, int64_t step, double decay) {
  if (auto s = require(path && arch_id && params, "path, arch_id and params must not be NULL")) return s;
  return guarded([&] {
    mum::ModelState state;
    state.arch_id = arch_id;
    state.params.assign(params, params + length);
    mum::save_checkpoint(path, state, step, decay);
  });
}

mum_status mum_checkpoint_load(const char* path, char** arch_id, float** params, int64_t* length,
                               int64_t* step, double* decay) {
  if (auto s = require(path != nullptr, "path must not be NULL")) return s;
  return guarded([&] {
    const auto ckpt = mum::load_checkpoint(path);
    if (arch_id) *arch_id = dup_string(ckpt.state.arch_id);
    if (params) {
      *params = static_cast<float*>(std::malloc(ckpt.state.params.size() * sizeof(float)));
      std::memcpy(*params, ckpt.state.params.data(), ckpt.state.params.size() * sizeof(float));
    }
    if (length) *length = ckpt.state.size();
    if (step) *step = ckpt.step;
    if (decay) *decay = ckpt.decay;
  });
}

/* ---- metrics -------------------------------------------------------------- */

mum_status mum_iou(const double box_a[4], const double box_b[4], double* out) {
  if (auto s = require(box_a && box_b && out, "boxes and out must not be NULL")) return s;
  return guarded([&] {
    *out = mum::iou({box_a[0], box_a[1], box_a[2], box_a[3]},
                    {box_b[0], box_b[1], box_b[2], box_b[3]});
  });
}

mum_status mum_compute_no(const double* boxes_xyxy, int64_t n_boxes, double image_w,
                          double image_h, int32_t tiles_per_axis, double* out) {
  if (auto s = require(out != nullptr, "out must not be NULL")) return s;
  if (auto s = require(boxes_xyxy != nullptr || n_boxes == 0, "boxes must not be NULL")) return s;
  return guarded([&] {
    std::vector<mum::Box> boxes(static_cast<std::size_t>(n_boxes));
    for (int64_t i = 0; i < n_boxes; ++i) {
      boxes[static_cast<std::size_t>(i)] = {boxes_xyxy[i * 4 + 0], boxes_xyxy[i * 4 + 1],
                                            boxes_xyxy[i * 4 + 2], boxes_xyxy[i * 4 + 3]};
    }
    *out = mum::compute_no(boxes, image_w, image_h, tiles_per_axis);
  });
}

mum_status mum_eval_ap50_json(const char* preds_json, const char* gts_json, char** result_json) {
  if (auto s = require(preds_json && gts_json && result_json, "arguments must not be NULL")) return s;
  return guarded([&] {
    nlohmann::json preds, gts;
    try {
      preds = nlohmann::json::parse(preds_json);
      gts = nlohmann::json::parse(gts_json);
    } catch (const nlohmann::json::exception& e) {
      throw mum::ValidationError(std::string("invalid JSON input: ") + e.what());
    }
    if (!preds.is_array() || !gts.is_array()) {
      throw mum::ValidationError("predictions and ground truth must be JSON arrays");
    }

    auto read_box = [](const nlohmann::json& j) -> mum::Box {
      const auto& b = j.at("box");
      if (!b.is_array() || b.size() != 4) {
        throw mum::ValidationError("box must be an array of 4 numbers");
      }
      return {b[0].get<double>(), b[1].get<double>(), b[2].get<double>(), b[3].get<double>()};
    };

    int64_t n_images = 0;
    try {
      for (const auto& j : preds) n_images = std::max(n_images, j.at("image").get<int64_t>() + 1);
      for (const auto& j : gts) n_images = std::max(n_images, j.at("image").get<int64_t>() + 1);

      std::vector<std::vector<mum::Detection>> pred_lists(static_cast<std::size_t>(n_images));
      std::vector<mum::LabelList> gt_lists(static_cast<std::size_t>(n_images));
      for (const auto& j : preds) {
        pred_lists[static_cast<std::size_t>(j.at("image").get<int64_t>())].push_back(
            {j.at("class").get<int>(), j.at("score").get<double>(), read_box(j)});
      }
      for (const auto& j : gts) {
        gt_lists[static_cast<std::size_t>(j.at("image").get<int64_t>())].push_back(
            {j.at("class").get<int>(), read_box(j)});
      }

      const auto result = mum::ap50(pred_lists, gt_lists);
      nlohmann::json out;
      out["map50"] = result.map50;
      out["n_images"] = result.n_images;
      auto per_class = nlohmann::json::array();
      for (const auto& entry : result.per_class) {
        per_class.push_back({{"class", entry.class_id}, {"ap", entry.ap}, {"n_gt", entry.n_gt}});
      }
      out["per_class"] = std::move(per_class);
      *result_json = dup_string(out.dump(2) + "\n");
    } catch (const nlohmann::json::exception& e) {
      throw mum::ValidationError(std::string("missing or malformed field: ") + e.what());
    }
  });
}

/* ---- synthetic scenes ------------------------------------------------------ */

mum_status mum_dataset_generate(uint64_t seed, int64_t count, int32_t image_size,
                                mum_dataset** out) {
  if (auto s = require(out != nullptr, "out must not be NULL")) return s;
  return guarded([&] {
    mum::SplitRng rng(seed);
    *out = new mum_dataset{mum::generate_scenes(rng, count, image_size)};
  });
}

int64_t mum_dataset_size(const mum_dataset* dataset) {
  return dataset ? static_cast<int64_t>(dataset->scenes.size()) : 0;
}

mum_status mum_dataset_image(const mum_dataset* dataset, int64_t index, mum_tensor** out) {
  if (auto s = require(dataset && out, "dataset and out must not be NULL")) return s;
  if (auto s = require(index >= 0 && index < mum_dataset_size(dataset), "scene index out of range")) {
    return s;
  }
  return guarded([&] {
    *out = new mum_tensor{dataset->scenes[static_cast<std::size_t>(index)].image};
  });
}

mum_status mum_dataset_labels_json(const mum_dataset* dataset, int64_t index, char** json) {
  if (auto s = require(dataset && json, "dataset and json must not be NULL")) return s;
  if (auto s = require(index >= 0 && index < mum_dataset_size(dataset), "scene index out of range")) {
    return s;
  }
  return guarded([&] {
    *json = dup_string(labels_to_json(dataset->scenes[static_cast<std::size_t>(index)].objects).dump(2) + "\n");
  });
}

void mum_dataset_destroy(mum_dataset* dataset) { delete dataset; }

/* ---- training ---------------------------------------------------------------- */

mum_status mum_train_config_create(mum_train_config** out) {
  if (auto s = require(out != nullptr, "out must not be NULL")) return s;
  return guarded([&] { *out = new mum_train_config{}; });
}

mum_status mum_train_config_load(const char* path, mum_train_config** out) {
  if (auto s = require(path && out, "path and out must not be NULL")) return s;
  return guarded([&] { *out = new mum_train_config{mum::load_train_config(path)}; });
}

mum_status mum_train_config_set(mum_train_config* cfg, const char* key, const char* value) {
  if (auto s = require(cfg && key && value, "cfg, key and value must not be NULL")) return s;
  return guarded([&] { mum::apply_config_override(cfg->cfg, key, value); });
}

mum_status mum_train_config_to_string(const mum_train_config* cfg, char** text) {
  if (auto s = require(cfg && text, "cfg and text must not be NULL")) return s;
  return guarded([&] { *text = dup_string(mum::train_config_to_string(cfg->cfg)); });
}

void mum_train_config_destroy(mum_train_config* cfg) { delete cfg; }

mum_status mum_train_run(const mum_train_config* cfg, const char* out_dir,
                         mum_train_callback callback, void* user_data, mum_train_result* result) {
  if (auto s = require(cfg != nullptr, "cfg must not be NULL")) return s;
  return guarded([&] {
    mum::Trainer trainer(cfg->cfg);
    mum::TrainObserver observer;
    if (callback) {
      observer = [&](const mum::StepEvent& event) {
        mum_tensor view{};
        mum_train_progress progress{};
        progress.step = event.log.step;
        progress.loss_s = event.log.loss_s;
        progress.loss_u = event.log.loss_u;
        progress.loss_total = event.log.loss_total;
        progress.delta = event.log.delta;
        progress.n_pseudo = event.log.n_pseudo;
        progress.has_eval = event.has_eval ? 1 : 0;
        progress.ap50_teacher = event.ap50_teacher;
        progress.ap50_student = event.ap50_student;
        if (event.mixed_batch) {
          view.tensor = *event.mixed_batch;
          progress.mixed_batch = &view;
        }
        callback(&progress, user_data);
      };
    }
    const auto r = trainer.run(out_dir ? out_dir : "", observer);
    if (result) {
      result->ap50_teacher = r.final_ap50_teacher;
      result->ap50_student = r.final_ap50_student;
      result->final_loss_s = r.history.empty() ? 0.0 : r.history.back().log.loss_s;
      result->final_loss_u = r.history.empty() ? 0.0 : r.history.back().log.loss_u;
    }
  });
}

} /* extern "C" */
