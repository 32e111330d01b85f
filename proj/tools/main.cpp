// mum-cli: command-line front end over the mum C API.
//
// Exit codes: 0 success, 1 validation/argument errors, 2 I/O errors.

#include <mum/mum.h>

#include <CLI11.hpp>
#include <json.hpp>

#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "png_io.hpp"

namespace fs = std::filesystem;

namespace {

struct CliError {
  int exit_code;
  std::string message;
};

[[noreturn]] void fail(int code, const std::string& message) { throw CliError{code, message}; }

void check(mum_status status) {
  if (status == MUM_OK) return;
  const int code = (status == MUM_ERR_IO || status == MUM_ERR_INTERNAL) ? 2 : 1;
  fail(code, std::string(mum_status_name(status)) + ": " + mum_last_error());
}

// RAII over the C handles so error paths cannot leak.
template <typename T, void (*Destroy)(T*)>
struct Handle {
  T* ptr = nullptr;
  Handle() = default;
  explicit Handle(T* p) : ptr(p) {}
  ~Handle() { reset(); }
  Handle(const Handle&) = delete;
  Handle& operator=(const Handle&) = delete;
  Handle(Handle&& o) noexcept : ptr(o.ptr) { o.ptr = nullptr; }
  Handle& operator=(Handle&& o) noexcept {
    if (this != &o) {
      reset();
      ptr = o.ptr;
      o.ptr = nullptr;
    }
    return *this;
  }
  void reset() {
    if (ptr) Destroy(ptr);
    ptr = nullptr;
  }
  T** out() {
    reset();
    return &ptr;
  }
  T* get() const { return ptr; }
};

using RngHandle = Handle<mum_rng, mum_rng_destroy>;
using MaskHandle = Handle<mum_mask_set, mum_mask_destroy>;
using TensorHandle = Handle<mum_tensor, mum_tensor_destroy>;
using LayoutHandle = Handle<mum_layout, mum_layout_destroy>;
using DatasetHandle = Handle<mum_dataset, mum_dataset_destroy>;
using ConfigHandle = Handle<mum_train_config, mum_train_config_destroy>;

struct CString {
  char* ptr = nullptr;
  ~CString() { mum_string_free(ptr); }
  char** out() { return &ptr; }
  std::string str() const { return ptr ? ptr : ""; }
};

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(2, "cannot open file: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(2, "cannot open file for writing: " + path);
  out << text;
  if (!out) fail(2, "failed writing file: " + path);
}

// ---- tensor <-> image glue -------------------------------------------------

pngio::ImageF32 tensor_slice_to_image(const mum_tensor* tensor, std::int64_t index) {
  const std::int64_t c = mum_tensor_dim(tensor, 1);
  const std::int64_t h = mum_tensor_dim(tensor, 2);
  const std::int64_t w = mum_tensor_dim(tensor, 3);
  if (c != 3) fail(1, "expected a 3-channel tensor for PNG export");
  pngio::ImageF32 image;
  image.height = h;
  image.width = w;
  image.planes.resize(static_cast<std::size_t>(3 * h * w));
  const float* data = mum_tensor_data_const(tensor);
  const float* base = data + index * c * h * w;
  std::copy(base, base + 3 * h * w, image.planes.begin());
  return image;
}

TensorHandle images_to_batch(const std::vector<pngio::ImageF32>& images) {
  const std::int64_t h = images.front().height;
  const std::int64_t w = images.front().width;
  for (std::size_t i = 0; i < images.size(); ++i) {
    if (images[i].height != h || images[i].width != w) {
      fail(1, "input images disagree on size: image " + std::to_string(i) + " is " +
                  std::to_string(images[i].width) + "x" + std::to_string(images[i].height) +
                  ", expected " + std::to_string(w) + "x" + std::to_string(h));
    }
  }
  TensorHandle batch;
  check(mum_tensor_create(static_cast<std::int64_t>(images.size()), 3, h, w, batch.out()));
  float* data = mum_tensor_data(batch.get());
  for (std::size_t i = 0; i < images.size(); ++i) {
    std::copy(images[i].planes.begin(), images[i].planes.end(), data + i * 3 * h * w);
  }
  return batch;
}

std::vector<pngio::ImageF32> load_images(const std::vector<std::string>& paths) {
  std::vector<pngio::ImageF32> images;
  images.reserve(paths.size());
  for (const auto& path : paths) images.push_back(pngio::read_png(path));
  return images;
}

void write_batch(const mum_tensor* batch, const std::string& out_dir, const std::string& prefix) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) fail(2, "cannot create output directory: " + out_dir);
  const std::int64_t n = mum_tensor_dim(batch, 0);
  for (std::int64_t i = 0; i < n; ++i) {
    char name[64];
    std::snprintf(name, sizeof(name), "%s%03" PRId64 ".png", prefix.c_str(), i);
    pngio::write_png((fs::path(out_dir) / name).string(), tensor_slice_to_image(batch, i));
  }
}

// Contact sheet: rows of equally sized images on a dark canvas.
pngio::ImageF32 contact_sheet(const std::vector<std::vector<pngio::ImageF32>>& rows, int gap = 4) {
  std::int64_t cell_h = 0, cell_w = 0, cols = 0;
  for (const auto& row : rows) {
    cols = std::max<std::int64_t>(cols, static_cast<std::int64_t>(row.size()));
    for (const auto& img : row) {
      cell_h = std::max(cell_h, img.height);
      cell_w = std::max(cell_w, img.width);
    }
  }
  pngio::ImageF32 sheet;
  sheet.height = static_cast<std::int64_t>(rows.size()) * (cell_h + gap) + gap;
  sheet.width = cols * (cell_w + gap) + gap;
  sheet.planes.assign(static_cast<std::size_t>(3 * sheet.height * sheet.width), 0.08f);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      const auto& img = rows[r][c];
      const std::int64_t y0 = static_cast<std::int64_t>(r) * (cell_h + gap) + gap;
      const std::int64_t x0 = static_cast<std::int64_t>(c) * (cell_w + gap) + gap;
      for (int ch = 0; ch < 3; ++ch)
        for (std::int64_t y = 0; y < img.height; ++y)
          for (std::int64_t x = 0; x < img.width; ++x)
            sheet.plane(ch)[(y0 + y) * sheet.width + (x0 + x)] =
                img.plane(ch)[y * img.width + x];
    }
  }
  return sheet;
}

MaskHandle load_mask_file(const std::string& path) {
  MaskHandle masks;
  check(mum_mask_from_json(read_text_file(path).c_str(), masks.out()));
  return masks;
}

// ---- subcommand payloads ----------------------------------------------------

struct MaskGenArgs {
  std::uint64_t seed = 0;
  int group = 4;
  int tiles = 4;
  std::string out;
};

void run_mask_gen(const MaskGenArgs& args) {
  RngHandle rng;
  check(mum_rng_create(args.seed, rng.out()));
  MaskHandle masks;
  check(mum_mask_generate(rng.get(), args.group, args.tiles, masks.out()));
  CString json;
  check(mum_mask_to_json(masks.get(), json.out()));
  write_text_file(args.out, json.str());
  std::printf("wrote %s (group_size=%d, tiles_per_axis=%d)\n", args.out.c_str(), args.group,
              args.tiles);
}

struct MixArgs {
  std::string mask_file;
  std::string out_dir = ".";
  std::string prefix;
  std::vector<std::string> images;
  bool unmix = false;
};

void run_mix(const MixArgs& args) {
  MaskHandle masks = load_mask_file(args.mask_file);
  const auto images = load_images(args.images);
  TensorHandle batch = images_to_batch(images);
  LayoutHandle layout;
  check(mum_layout_from_masks(masks.get(), static_cast<std::int64_t>(images.size()), layout.out()));
  TensorHandle result;
  check(args.unmix ? mum_unmix_tiles(batch.get(), layout.get(), result.out())
                   : mum_mix_tiles(batch.get(), layout.get(), result.out()));
  const std::string prefix = args.prefix.empty() ? (args.unmix ? "unmixed_" : "mixed_") : args.prefix;
  write_batch(result.get(), args.out_dir, prefix);
  std::printf("wrote %zu images to %s\n", images.size(), args.out_dir.c_str());
}

struct RoundtripArgs {
  std::uint64_t seed = 0;
  int group = 4;
  int tiles = 4;
  int size = 64;
  int batch = 8;
  std::vector<std::string> images;
};

void run_roundtrip(const RoundtripArgs& args) {
  TensorHandle batch;
  if (!args.images.empty()) {
    batch = images_to_batch(load_images(args.images));
  } else {
    DatasetHandle scenes;
    check(mum_dataset_generate(args.seed, args.batch, args.size, scenes.out()));
    check(mum_tensor_create(args.batch, 3, args.size, args.size, batch.out()));
    float* data = mum_tensor_data(batch.get());
    for (std::int64_t i = 0; i < args.batch; ++i) {
      TensorHandle img;
      check(mum_dataset_image(scenes.get(), i, img.out()));
      std::copy(mum_tensor_data_const(img.get()),
                mum_tensor_data_const(img.get()) + mum_tensor_size(img.get()),
                data + i * 3 * args.size * args.size);
    }
  }

  RngHandle rng;
  check(mum_rng_create(args.seed, rng.out()));
  LayoutHandle layout;
  check(mum_layout_create(rng.get(), mum_tensor_dim(batch.get(), 0), args.group, args.tiles,
                          layout.out()));
  TensorHandle mixed, restored;
  check(mum_mix_tiles(batch.get(), layout.get(), mixed.out()));
  check(mum_unmix_tiles(mixed.get(), layout.get(), restored.out()));

  const float* a = mum_tensor_data_const(batch.get());
  const float* b = mum_tensor_data_const(restored.get());
  for (std::int64_t i = 0; i < mum_tensor_size(batch.get()); ++i) {
    if (a[i] != b[i]) fail(1, "roundtrip mismatch at flat index " + std::to_string(i));
  }
  std::printf("OK\n");
}

struct VisualizeArgs {
  std::uint64_t seed = 0;
  int group = 4;
  int tiles = 4;
  int size = 64;
  int cutout_count = 2;
  std::string out;
};

void run_visualize(const VisualizeArgs& args) {
  DatasetHandle scenes;
  check(mum_dataset_generate(args.seed, args.group, args.size, scenes.out()));
  TensorHandle batch;
  check(mum_tensor_create(args.group, 3, args.size, args.size, batch.out()));
  float* data = mum_tensor_data(batch.get());
  for (std::int64_t i = 0; i < args.group; ++i) {
    TensorHandle img;
    check(mum_dataset_image(scenes.get(), i, img.out()));
    std::copy(mum_tensor_data_const(img.get()),
              mum_tensor_data_const(img.get()) + mum_tensor_size(img.get()),
              data + i * 3 * args.size * args.size);
  }

  RngHandle rng;
  check(mum_rng_create(args.seed, rng.out()));
  LayoutHandle layout;
  check(mum_layout_create(rng.get(), args.group, args.group, args.tiles, layout.out()));
  TensorHandle mixed;
  check(mum_mix_tiles(batch.get(), layout.get(), mixed.out()));
  TensorHandle holed;
  check(mum_cutout(batch.get(), rng.get(), args.cutout_count, 0.15, 0.35, 0.5f, holed.out()));

  std::vector<std::vector<pngio::ImageF32>> rows(3);
  for (std::int64_t i = 0; i < args.group; ++i) {
    rows[0].push_back(tensor_slice_to_image(batch.get(), i));
    rows[1].push_back(tensor_slice_to_image(mixed.get(), i));
    rows[2].push_back(tensor_slice_to_image(holed.get(), i));
  }
  pngio::write_png(args.out, contact_sheet(rows));
  std::printf("wrote %s (rows: originals, mixed, cutout)\n", args.out.c_str());
}

struct EmaArgs {
  std::string teacher;
  std::string student;
  std::string out;
  double decay = -1;
  std::int64_t step = -1;
  std::int64_t ramp_end = 1000;
  double d_init = 0.5;
  double d_final = 0.9996;
};

void run_ema_step(const EmaArgs& args) {
  CString teacher_arch, student_arch;
  float *teacher_params = nullptr, *student_params = nullptr;
  std::int64_t teacher_len = 0, student_len = 0, teacher_step = 0, student_step = 0;
  double teacher_decay = 0, student_decay = 0;
  check(mum_checkpoint_load(args.teacher.c_str(), teacher_arch.out(), &teacher_params,
                            &teacher_len, &teacher_step, &teacher_decay));
  std::unique_ptr<float, decltype(&mum_buffer_free)> tguard(teacher_params, mum_buffer_free);
  check(mum_checkpoint_load(args.student.c_str(), student_arch.out(), &student_params,
                            &student_len, &student_step, &student_decay));
  std::unique_ptr<float, decltype(&mum_buffer_free)> sguard(student_params, mum_buffer_free);

  if (teacher_len != student_len) {
    fail(1, "checkpoint lengths differ: teacher " + std::to_string(teacher_len) + " vs student " +
                std::to_string(student_len));
  }
  if (teacher_arch.str() != student_arch.str()) {
    fail(1, "checkpoint arch_id mismatch: " + teacher_arch.str() + " vs " + student_arch.str());
  }

  double decay = args.decay;
  if (decay < 0) {
    const std::int64_t step = args.step >= 0 ? args.step : teacher_step;
    check(mum_decay_schedule(step, args.ramp_end, args.d_init, args.d_final, &decay));
  }

  std::vector<float> result(static_cast<std::size_t>(teacher_len));
  check(mum_ema_update(teacher_params, student_params, teacher_len, decay, result.data()));
  check(mum_checkpoint_save(args.out.c_str(), teacher_arch.str().c_str(), result.data(),
                            teacher_len, teacher_step + 1, decay));
  std::printf("wrote %s (decay=%.6f, step=%" PRId64 ")\n", args.out.c_str(), decay,
              teacher_step + 1);
}

struct TrainArgs {
  std::string config_file;
  std::string out_dir = "train-out";
  bool supervised_only = false;
  bool no_mum = false;
  std::vector<std::string> overrides;
};

void run_train(const TrainArgs& args) {
  ConfigHandle cfg;
  if (!args.config_file.empty()) {
    check(mum_train_config_load(args.config_file.c_str(), cfg.out()));
  } else {
    check(mum_train_config_create(cfg.out()));
  }
  for (const auto& kv : args.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) fail(1, "--set expects key=value, got '" + kv + "'");
    check(mum_train_config_set(cfg.get(), kv.substr(0, eq).c_str(), kv.substr(eq + 1).c_str()));
  }
  if (args.supervised_only) check(mum_train_config_set(cfg.get(), "supervised_only", "true"));
  if (args.no_mum) check(mum_train_config_set(cfg.get(), "mum_probability", "0"));

  auto callback = [](const mum_train_progress* p, void* user) {
    const auto* out_dir = static_cast<const std::string*>(user);
    if (p->has_eval) {
      std::printf("step %6" PRId64 "  loss_s %.4f  loss_u %.4f  delta %.4f  pseudo %3" PRId64
                  "  AP50 teacher %.4f student %.4f\n",
                  p->step, p->loss_s, p->loss_u, p->delta, p->n_pseudo, p->ap50_teacher,
                  p->ap50_student);
      std::fflush(stdout);
    }
    if (p->mixed_batch) {
      char name[64];
      std::snprintf(name, sizeof(name), "mixed_step%06" PRId64 ".png", p->step);
      std::vector<std::vector<pngio::ImageF32>> row(1);
      const std::int64_t n = mum_tensor_dim(p->mixed_batch, 0);
      for (std::int64_t i = 0; i < n; ++i) {
        row[0].push_back(tensor_slice_to_image(p->mixed_batch, i));
      }
      pngio::write_png((fs::path(*out_dir) / name).string(), contact_sheet(row));
    }
  };

  std::error_code ec;
  fs::create_directories(args.out_dir, ec);
  if (ec) fail(2, "cannot create output directory: " + args.out_dir);

  std::string out_dir_str = args.out_dir;
  mum_train_result result{};
  check(mum_train_run(cfg.get(), args.out_dir.c_str(), callback, &out_dir_str, &result));
  std::printf("done: AP50 teacher %.4f student %.4f (outputs in %s)\n", result.ap50_teacher,
              result.ap50_student, args.out_dir.c_str());
}

struct EvalArgs {
  std::string preds;
  std::string gts;
};

void run_eval(const EvalArgs& args) {
  const std::string preds = read_text_file(args.preds);
  const std::string gts = read_text_file(args.gts);
  CString result;
  check(mum_eval_ap50_json(preds.c_str(), gts.c_str(), result.out()));
  std::fputs(result.str().c_str(), stdout);
}

struct NoStatArgs {
  std::string boxes_file;
  int tiles = 4;
  double width = 64;
  double height = 64;
};

void run_no_stat(const NoStatArgs& args) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(read_text_file(args.boxes_file));
  } catch (const nlohmann::json::exception& e) {
    fail(1, std::string("boxes file is not valid JSON: ") + e.what());
  }
  if (!doc.is_array()) fail(1, "boxes file must be a JSON array of [x0, y0, x1, y1] boxes");
  std::vector<double> flat;
  flat.reserve(doc.size() * 4);
  for (const auto& entry : doc) {
    if (!entry.is_array() || entry.size() != 4) {
      fail(1, "each box must be an array of 4 numbers");
    }
    for (const auto& v : entry) flat.push_back(v.get<double>());
  }

  double value = 0;
  check(mum_compute_no(flat.data(), static_cast<std::int64_t>(doc.size()), args.width, args.height,
                       args.tiles, &value));
  std::printf("N_O = %.4f over %zu boxes (tiles_per_axis=%d, image %gx%g)\n", value, doc.size(),
              args.tiles, args.width, args.height);
  std::printf("advisory: 1.2 <= N_O <= 2.5 works well; below that mixing adds little, above it "
              "objects shatter across too many tiles\n");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"MUM tile mixing/unmixing toolkit"};
  app.require_subcommand(1);

  MaskGenArgs mask_args;
  auto* mask_cmd = app.add_subcommand("mask-gen", "Generate a random tile-mixing mask file");
  mask_cmd->add_option("--seed", mask_args.seed, "RNG seed")->required();
  mask_cmd->add_option("--group", mask_args.group, "Images per mixing group");
  mask_cmd->add_option("--tiles", mask_args.tiles, "Tiles per image axis");
  mask_cmd->add_option("--out", mask_args.out, "Output mask JSON path")->required();

  MixArgs mix_args;
  auto* mix_cmd = app.add_subcommand("mix", "Mix PNG images with a mask file");
  mix_cmd->add_option("--mask", mix_args.mask_file, "Mask JSON file")->required();
  mix_cmd->add_option("--out-dir", mix_args.out_dir, "Output directory");
  mix_cmd->add_option("--prefix", mix_args.prefix, "Output filename prefix");
  mix_cmd->add_option("images", mix_args.images, "Input PNG images")->required();

  MixArgs unmix_args;
  unmix_args.unmix = true;
  auto* unmix_cmd = app.add_subcommand("unmix", "Unmix PNG images with a mask file");
  unmix_cmd->add_option("--mask", unmix_args.mask_file, "Mask JSON file")->required();
  unmix_cmd->add_option("--out-dir", unmix_args.out_dir, "Output directory");
  unmix_cmd->add_option("--prefix", unmix_args.prefix, "Output filename prefix");
  unmix_cmd->add_option("images", unmix_args.images, "Input PNG images")->required();

  RoundtripArgs rt_args;
  auto* rt_cmd = app.add_subcommand("roundtrip-check",
                                    "Verify unmix(mix(x)) == x on PNGs or generated scenes");
  rt_cmd->add_option("--seed", rt_args.seed, "RNG seed");
  rt_cmd->add_option("--group", rt_args.group, "Images per mixing group");
  rt_cmd->add_option("--tiles", rt_args.tiles, "Tiles per image axis");
  rt_cmd->add_option("--size", rt_args.size, "Generated image size");
  rt_cmd->add_option("--batch", rt_args.batch, "Generated batch size");
  rt_cmd->add_option("images", rt_args.images, "Optional input PNG images");

  VisualizeArgs vis_args;
  auto* vis_cmd = app.add_subcommand("visualize", "Render a contact sheet of MUM augmentations");
  bool vis_grid = false;
  vis_cmd->add_flag("--grid", vis_grid, "Render the originals/mixed/cutout grid");
  vis_cmd->add_option("--seed", vis_args.seed, "RNG seed");
  vis_cmd->add_option("--group", vis_args.group, "Images per mixing group");
  vis_cmd->add_option("--tiles", vis_args.tiles, "Tiles per image axis");
  vis_cmd->add_option("--size", vis_args.size, "Generated image size");
  vis_cmd->add_option("--cutout-count", vis_args.cutout_count, "Cutout holes per image");
  vis_cmd->add_option("--out", vis_args.out, "Output PNG path")->required();

  EmaArgs ema_args;
  auto* ema_cmd = app.add_subcommand("ema-step", "Apply one EMA update to checkpoints");
  ema_cmd->add_option("--teacher", ema_args.teacher, "Teacher checkpoint")->required();
  ema_cmd->add_option("--student", ema_args.student, "Student checkpoint")->required();
  ema_cmd->add_option("--out", ema_args.out, "Output checkpoint")->required();
  ema_cmd->add_option("--decay", ema_args.decay, "Explicit decay (overrides the schedule)");
  ema_cmd->add_option("--step", ema_args.step, "Schedule step (default: teacher checkpoint step)");
  ema_cmd->add_option("--ramp-end", ema_args.ramp_end, "Schedule ramp end step");
  ema_cmd->add_option("--d-init", ema_args.d_init, "Schedule initial decay");
  ema_cmd->add_option("--d-final", ema_args.d_final, "Schedule final decay");

  TrainArgs train_args;
  auto* train_cmd = app.add_subcommand("train-toy", "Run the teacher-student training loop");
  train_cmd->add_option("--config", train_args.config_file, "Config file (key = value lines)");
  train_cmd->add_option("--out-dir", train_args.out_dir, "Output directory");
  train_cmd->add_flag("--supervised-only", train_args.supervised_only,
                      "Train on labeled data only");
  train_cmd->add_flag("--no-mum", train_args.no_mum, "Disable tile mixing (keep other strong aug)");
  train_cmd->add_option("--set", train_args.overrides, "Config override key=value (repeatable)");

  EvalArgs eval_args;
  auto* eval_cmd = app.add_subcommand("eval", "AP50 of predictions against ground truth");
  eval_cmd->add_option("--preds", eval_args.preds, "Predictions JSON file")->required();
  eval_cmd->add_option("--gts", eval_args.gts, "Ground-truth JSON file")->required();

  NoStatArgs no_args;
  auto* no_cmd = app.add_subcommand("no-stat", "Mean tiles-per-object statistic for a box file");
  no_cmd->add_option("--boxes", no_args.boxes_file, "JSON array of [x0,y0,x1,y1] boxes")->required();
  no_cmd->add_option("--tiles", no_args.tiles, "Tiles per image axis");
  no_cmd->add_option("--width", no_args.width, "Image width");
  no_cmd->add_option("--height", no_args.height, "Image height");

  try {
    app.parse(argc, argv);

    if (mask_cmd->parsed()) run_mask_gen(mask_args);
    if (mix_cmd->parsed()) run_mix(mix_args);
    if (unmix_cmd->parsed()) run_mix(unmix_args);
    if (rt_cmd->parsed()) run_roundtrip(rt_args);
    if (vis_cmd->parsed()) run_visualize(vis_args);
    if (ema_cmd->parsed()) run_ema_step(ema_args);
    if (train_cmd->parsed()) run_train(train_args);
    if (eval_cmd->parsed()) run_eval(eval_args);
    if (no_cmd->parsed()) run_no_stat(no_args);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return 1;
  } catch (const CliError& e) {
    std::fprintf(stderr, "error: %s\n", e.message.c_str());
    return e.exit_code;
  } catch (const pngio::IoFailure& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
