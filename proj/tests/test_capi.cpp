// Exercises the public C surface only: no core headers, just mum/mum.h
// against the shared library, the way an external client would link it.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <mum/mum.h>

#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

namespace {

struct RngHandle {
  mum_rng* ptr = nullptr;
  explicit RngHandle(uint64_t seed) { REQUIRE(mum_rng_create(seed, &ptr) == MUM_OK); }
  ~RngHandle() { mum_rng_destroy(ptr); }
};

}  // namespace

TEST_CASE("status names and error reporting") {
  CHECK(std::string(mum_status_name(MUM_OK)) == "ok");
  CHECK(std::string(mum_status_name(MUM_ERR_SHAPE)) == "shape-error");

  mum_mask_set* masks = nullptr;
  RngHandle rng(1);
  CHECK(mum_mask_generate(rng.ptr, -2, 4, &masks) == MUM_ERR_INVALID_ARGUMENT);
  CHECK(std::strlen(mum_last_error()) > 0);
  CHECK(mum_mask_generate(rng.ptr, 4, 4, &masks) == MUM_OK);
  CHECK(std::strlen(mum_last_error()) == 0);  // cleared on success
  mum_mask_destroy(masks);
}

TEST_CASE("mask generate, validate, invert, JSON round-trip") {
  RngHandle rng(7);
  mum_mask_set* masks = nullptr;
  REQUIRE(mum_mask_generate(rng.ptr, 4, 4, &masks) == MUM_OK);
  CHECK(mum_mask_group_size(masks) == 4);
  CHECK(mum_mask_tiles_per_axis(masks) == 4);

  int64_t violations = -1;
  REQUIRE(mum_mask_validate(masks, &violations, nullptr) == MUM_OK);
  CHECK(violations == 0);

  char* json = nullptr;
  REQUIRE(mum_mask_to_json(masks, &json) == MUM_OK);
  mum_mask_set* rebuilt = nullptr;
  REQUIRE(mum_mask_from_json(json, &rebuilt) == MUM_OK);
  for (int g = 0; g < 4; ++g)
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) {
        int32_t a = -1, b = -1;
        REQUIRE(mum_mask_cell(masks, g, i, j, &a) == MUM_OK);
        REQUIRE(mum_mask_cell(rebuilt, g, i, j, &b) == MUM_OK);
        CHECK(a == b);
      }

  mum_mask_set* inverse = nullptr;
  REQUIRE(mum_mask_invert(masks, &inverse) == MUM_OK);
  for (int g = 0; g < 4; ++g)
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) {
        int32_t src = -1, back = -1;
        REQUIRE(mum_mask_cell(masks, g, i, j, &src) == MUM_OK);
        REQUIRE(mum_mask_cell(inverse, src, i, j, &back) == MUM_OK);
        CHECK(back == g);
      }

  CHECK(mum_mask_from_json("{broken", &rebuilt) == MUM_ERR_VALIDATION);

  mum_string_free(json);
  mum_mask_destroy(masks);
  mum_mask_destroy(rebuilt);
  mum_mask_destroy(inverse);
}

TEST_CASE("tensor handles and the mix/unmix round trip") {
  RngHandle rng(3);
  mum_tensor* batch = nullptr;
  REQUIRE(mum_tensor_create(4, 3, 16, 16, &batch) == MUM_OK);
  CHECK(mum_tensor_dim(batch, 0) == 4);
  CHECK(mum_tensor_dim(batch, 3) == 16);
  CHECK(mum_tensor_size(batch) == 4 * 3 * 16 * 16);

  float* data = mum_tensor_data(batch);
  for (int64_t i = 0; i < mum_tensor_size(batch); ++i) data[i] = static_cast<float>(i % 97) / 97.0f;

  mum_layout* layout = nullptr;
  REQUIRE(mum_layout_create(rng.ptr, 4, 4, 4, &layout) == MUM_OK);

  mum_tensor* mixed = nullptr;
  mum_tensor* restored = nullptr;
  REQUIRE(mum_mix_tiles(batch, layout, &mixed) == MUM_OK);
  REQUIRE(mum_unmix_tiles(mixed, layout, &restored) == MUM_OK);
  CHECK(std::memcmp(mum_tensor_data_const(batch), mum_tensor_data_const(restored),
                    sizeof(float) * static_cast<size_t>(mum_tensor_size(batch))) == 0);

  // Shape errors carry the offending dimension in the message.
  mum_tensor* ragged = nullptr;
  REQUIRE(mum_tensor_create(4, 3, 18, 16, &ragged) == MUM_OK);
  mum_tensor* fail = nullptr;
  CHECK(mum_mix_tiles(ragged, layout, &fail) == MUM_ERR_SHAPE);
  CHECK(std::string(mum_last_error()).find("18") != std::string::npos);

  CHECK(mum_tensor_create(0, 3, 4, 4, &fail) == MUM_ERR_INVALID_ARGUMENT);

  mum_tensor_destroy(batch);
  mum_tensor_destroy(mixed);
  mum_tensor_destroy(restored);
  mum_tensor_destroy(ragged);
  mum_layout_destroy(layout);
}

TEST_CASE("cutout and augmentations through the C API") {
  RngHandle rng(9);
  mum_tensor* batch = nullptr;
  REQUIRE(mum_tensor_create(2, 3, 16, 16, &batch) == MUM_OK);
  float* data = mum_tensor_data(batch);
  for (int64_t i = 0; i < mum_tensor_size(batch); ++i) data[i] = 1.0f;

  mum_tensor* holed = nullptr;
  REQUIRE(mum_cutout(batch, rng.ptr, 1, 0.25, 0.25, 0.0f, &holed) == MUM_OK);
  int64_t zeros = 0;
  const float* hd = mum_tensor_data_const(holed);
  for (int64_t i = 0; i < mum_tensor_size(holed); ++i) zeros += hd[i] == 0.0f;
  CHECK(zeros == 2 * 3 * 16);  // 4x4 hole per channel per image

  REQUIRE(mum_weak_augment(batch, rng.ptr) == MUM_OK);
  REQUIRE(mum_strong_augment(batch, rng.ptr) == MUM_OK);
  const float* sd = mum_tensor_data_const(batch);
  for (int64_t i = 0; i < mum_tensor_size(batch); ++i) {
    CHECK(sd[i] >= 0.0f);
    CHECK(sd[i] <= 1.0f);
  }

  mum_tensor_destroy(batch);
  mum_tensor_destroy(holed);
}

TEST_CASE("ema, decay schedule and checkpoints") {
  const std::vector<float> teacher = {1.0f, 3.0f};
  const std::vector<float> student = {3.0f, 1.0f};
  float out[2] = {};
  REQUIRE(mum_ema_update(teacher.data(), student.data(), 2, 0.5, out) == MUM_OK);
  CHECK(out[0] == 2.0f);
  CHECK(out[1] == 2.0f);

  double decay = 0;
  REQUIRE(mum_decay_schedule(0, 1000, 0.5, 0.9996, &decay) == MUM_OK);
  CHECK(decay == 0.5);
  REQUIRE(mum_decay_schedule(2000, 1000, 0.5, 0.9996, &decay) == MUM_OK);
  CHECK(decay == 0.9996);
  CHECK(mum_decay_schedule(5, 1000, 0.9, 0.5, &decay) == MUM_ERR_INVALID_ARGUMENT);

  namespace fs = std::filesystem;
  const auto dir = fs::temp_directory_path() / "mum_capi_ckpt";
  fs::create_directories(dir);
  const auto path = (dir / "t.ckpt").string();
  REQUIRE(mum_checkpoint_save(path.c_str(), "arch-x", teacher.data(), 2, 42, 0.75) == MUM_OK);

  char* arch_id = nullptr;
  float* params = nullptr;
  int64_t length = 0, step = 0;
  double loaded_decay = 0;
  REQUIRE(mum_checkpoint_load(path.c_str(), &arch_id, &params, &length, &step, &loaded_decay) ==
          MUM_OK);
  CHECK(std::string(arch_id) == "arch-x");
  CHECK(length == 2);
  CHECK(step == 42);
  CHECK(loaded_decay == 0.75);
  CHECK(params[0] == 1.0f);
  CHECK(params[1] == 3.0f);
  mum_string_free(arch_id);
  mum_buffer_free(params);

  CHECK(mum_checkpoint_load((dir / "missing.ckpt").string().c_str(), nullptr, nullptr, nullptr,
                            nullptr, nullptr) == MUM_ERR_IO);
  fs::remove_all(dir);
}

TEST_CASE("metrics through the C API") {
  const double a[4] = {0, 0, 10, 10};
  double v = 0;
  REQUIRE(mum_iou(a, a, &v) == MUM_OK);
  CHECK(v == 1.0);

  const double boxes[8] = {0, 0, 64, 64, 16, 16, 32, 32};
  REQUIRE(mum_compute_no(boxes, 2, 64, 64, 4, &v) == MUM_OK);
  CHECK(v == (16.0 + 1.0) / 2.0);

  const char* preds =
      R"([{"image":0,"class":0,"score":0.9,"box":[0,0,10,10]},
          {"image":0,"class":0,"score":0.8,"box":[100,100,110,110]},
          {"image":0,"class":0,"score":0.7,"box":[50,50,60,60]}])";
  const char* gts =
      R"([{"image":0,"class":0,"box":[0,0,10,10]},
          {"image":0,"class":0,"box":[50,50,60,60]}])";
  char* result = nullptr;
  REQUIRE(mum_eval_ap50_json(preds, gts, &result) == MUM_OK);
  const std::string text(result);
  CHECK(text.find("\"map50\": 0.8333333") != std::string::npos);
  mum_string_free(result);

  CHECK(mum_eval_ap50_json("nope", gts, &result) == MUM_ERR_VALIDATION);
}

TEST_CASE("synthetic dataset handles") {
  mum_dataset* ds = nullptr;
  REQUIRE(mum_dataset_generate(5, 3, 64, &ds) == MUM_OK);
  CHECK(mum_dataset_size(ds) == 3);

  mum_tensor* img = nullptr;
  REQUIRE(mum_dataset_image(ds, 1, &img) == MUM_OK);
  CHECK(mum_tensor_dim(img, 1) == 3);
  CHECK(mum_tensor_dim(img, 2) == 64);

  char* labels = nullptr;
  REQUIRE(mum_dataset_labels_json(ds, 1, &labels) == MUM_OK);
  CHECK(std::string(labels).find("\"box\"") != std::string::npos);
  mum_string_free(labels);

  CHECK(mum_dataset_image(ds, 99, &img) == MUM_ERR_INVALID_ARGUMENT);

  mum_tensor_destroy(img);
  mum_dataset_destroy(ds);
}

TEST_CASE("train config and a two-step training run") {
  mum_train_config* cfg = nullptr;
  REQUIRE(mum_train_config_create(&cfg) == MUM_OK);
  CHECK(mum_train_config_set(cfg, "bogus_key", "1") == MUM_ERR_INVALID_ARGUMENT);
  REQUIRE(mum_train_config_set(cfg, "image_size", "16") == MUM_OK);
  REQUIRE(mum_train_config_set(cfg, "conv1_channels", "2") == MUM_OK);
  REQUIRE(mum_train_config_set(cfg, "conv2_channels", "3") == MUM_OK);
  REQUIRE(mum_train_config_set(cfg, "conv3_channels", "4") == MUM_OK);
  REQUIRE(mum_train_config_set(cfg, "n_labeled", "4") == MUM_OK);
  REQUIRE(mum_train_config_set(cfg, "n_unlabeled", "4") == MUM_OK);
  REQUIRE(mum_train_config_set(cfg, "n_eval", "2") == MUM_OK);
  REQUIRE(mum_train_config_set(cfg, "batch_labeled", "2") == MUM_OK);
  REQUIRE(mum_train_config_set(cfg, "batch_unlabeled", "2") == MUM_OK);
  REQUIRE(mum_train_config_set(cfg, "tiles_per_axis", "2") == MUM_OK);
  REQUIRE(mum_train_config_set(cfg, "group_size", "2") == MUM_OK);
  REQUIRE(mum_train_config_set(cfg, "total_steps", "2") == MUM_OK);
  REQUIRE(mum_train_config_set(cfg, "eval_interval", "2") == MUM_OK);

  char* text = nullptr;
  REQUIRE(mum_train_config_to_string(cfg, &text) == MUM_OK);
  CHECK(std::string(text).find("image_size = 16") != std::string::npos);
  mum_string_free(text);

  struct CallbackState {
    int calls = 0;
    int64_t last_step = 0;
  } cb_state;
  auto callback = [](const mum_train_progress* p, void* user) {
    auto* state = static_cast<CallbackState*>(user);
    ++state->calls;
    state->last_step = p->step;
  };

  mum_train_result result{};
  REQUIRE(mum_train_run(cfg, nullptr, callback, &cb_state, &result) == MUM_OK);
  CHECK(cb_state.calls == 2);
  CHECK(cb_state.last_step == 2);

  mum_train_config_destroy(cfg);
}
