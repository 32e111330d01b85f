#include "trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "errors.hpp"
#include "metrics.hpp"

namespace mum {

void TrainConfig::validate() const {
  if (total_steps < 0) throw InvalidArgument("total_steps must be >= 0");
  if (n_labeled < 1) throw InvalidArgument("n_labeled must be >= 1");
  if (n_unlabeled < 0) throw InvalidArgument("n_unlabeled must be >= 0");
  if (batch_labeled < 1 || batch_unlabeled < 1) throw InvalidArgument("batch sizes must be >= 1");
  if (!(tau >= 0.0 && tau <= 1.0)) throw InvalidArgument("tau must be in [0, 1]");
  if (!(mum_probability >= 0.0 && mum_probability <= 1.0)) {
    throw InvalidArgument("mum_probability must be in [0, 1]");
  }
  if (lambda_u < 0.0) throw InvalidArgument("lambda_u must be >= 0");
  if (delta_init > delta_final) throw InvalidArgument("delta_init must not exceed delta_final");
  if (ramp_end_step < 1) throw InvalidArgument("ramp_end_step must be >= 1");
  if (group_size < 1 || tiles_per_axis < 1) {
    throw InvalidArgument("group_size and tiles_per_axis must be >= 1");
  }
  if (eval_interval < 1) throw InvalidArgument("eval_interval must be >= 1");
  if (image_size % DetectorArch::kTotalStride != 0) {
    throw InvalidArgument("image_size must be divisible by " +
                          std::to_string(DetectorArch::kTotalStride));
  }
  if ((image_size / DetectorArch::kTotalStride) % tiles_per_axis != 0) {
    throw InvalidArgument("feature side " + std::to_string(image_size / DetectorArch::kTotalStride) +
                          " is not divisible by tiles_per_axis " + std::to_string(tiles_per_axis));
  }
  if (image_size % tiles_per_axis != 0) {
    throw InvalidArgument("image_size must be divisible by tiles_per_axis");
  }
  arch().validate();
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw InvalidArgument("config key '" + key + "' expects a boolean, got '" + value + "'");
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(value, &pos);
    if (!trim(value.substr(pos)).empty()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw InvalidArgument("config key '" + key + "' expects a number, got '" + value + "'");
  }
}

std::int64_t parse_int(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const long long v = std::stoll(value, &pos);
    if (!trim(value.substr(pos)).empty()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw InvalidArgument("config key '" + key + "' expects an integer, got '" + value + "'");
  }
}

std::uint64_t parse_uint(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const unsigned long long v = std::stoull(value, &pos);
    if (!trim(value.substr(pos)).empty()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw InvalidArgument("config key '" + key + "' expects an unsigned integer, got '" + value + "'");
  }
}

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void apply_config_override(TrainConfig& cfg, const std::string& key, const std::string& value) {
  if (key == "seed") cfg.seed = parse_uint(key, value);
  else if (key == "total_steps") cfg.total_steps = parse_int(key, value);
  else if (key == "image_size") cfg.image_size = static_cast<int>(parse_int(key, value));
  else if (key == "num_classes") cfg.num_classes = static_cast<int>(parse_int(key, value));
  else if (key == "n_labeled") cfg.n_labeled = parse_int(key, value);
  else if (key == "n_unlabeled") cfg.n_unlabeled = parse_int(key, value);
  else if (key == "n_eval") cfg.n_eval = parse_int(key, value);
  else if (key == "batch_labeled") cfg.batch_labeled = parse_int(key, value);
  else if (key == "batch_unlabeled") cfg.batch_unlabeled = parse_int(key, value);
  else if (key == "tau") cfg.tau = parse_double(key, value);
  else if (key == "lambda_u") cfg.lambda_u = parse_double(key, value);
  else if (key == "delta_init") cfg.delta_init = parse_double(key, value);
  else if (key == "delta_final") cfg.delta_final = parse_double(key, value);
  else if (key == "ramp_end_step") cfg.ramp_end_step = parse_int(key, value);
  else if (key == "mum_probability") cfg.mum_probability = parse_double(key, value);
  else if (key == "group_size") cfg.group_size = static_cast<int>(parse_int(key, value));
  else if (key == "tiles_per_axis") cfg.tiles_per_axis = static_cast<int>(parse_int(key, value));
  else if (key == "lr") cfg.lr = parse_double(key, value);
  else if (key == "momentum") cfg.momentum = parse_double(key, value);
  else if (key == "weight_decay") cfg.weight_decay = parse_double(key, value);
  else if (key == "conv1_channels") cfg.conv1_channels = static_cast<int>(parse_int(key, value));
  else if (key == "conv2_channels") cfg.conv2_channels = static_cast<int>(parse_int(key, value));
  else if (key == "conv3_channels") cfg.conv3_channels = static_cast<int>(parse_int(key, value));
  else if (key == "eval_interval") cfg.eval_interval = parse_int(key, value);
  else if (key == "score_floor") cfg.score_floor = parse_double(key, value);
  else if (key == "nms_iou") cfg.nms_iou = parse_double(key, value);
  else if (key == "supervised_only") cfg.supervised_only = parse_bool(key, value);
  else if (key == "unsup_reg") cfg.unsup_reg = parse_bool(key, value);
  else if (key == "snapshot_interval") cfg.snapshot_interval = parse_int(key, value);
  else throw InvalidArgument("unknown config key '" + key + "'");
}

std::string train_config_to_string(const TrainConfig& cfg) {
  std::ostringstream out;
  out << "seed = " << cfg.seed << "\n";
  out << "total_steps = " << cfg.total_steps << "\n";
  out << "image_size = " << cfg.image_size << "\n";
  out << "num_classes = " << cfg.num_classes << "\n";
  out << "n_labeled = " << cfg.n_labeled << "\n";
  out << "n_unlabeled = " << cfg.n_unlabeled << "\n";
  out << "n_eval = " << cfg.n_eval << "\n";
  out << "batch_labeled = " << cfg.batch_labeled << "\n";
  out << "batch_unlabeled = " << cfg.batch_unlabeled << "\n";
  out << "tau = " << fmt_double(cfg.tau) << "\n";
  out << "lambda_u = " << fmt_double(cfg.lambda_u) << "\n";
  out << "delta_init = " << fmt_double(cfg.delta_init) << "\n";
  out << "delta_final = " << fmt_double(cfg.delta_final) << "\n";
  out << "ramp_end_step = " << cfg.ramp_end_step << "\n";
  out << "mum_probability = " << fmt_double(cfg.mum_probability) << "\n";
  out << "group_size = " << cfg.group_size << "\n";
  out << "tiles_per_axis = " << cfg.tiles_per_axis << "\n";
  out << "lr = " << fmt_double(cfg.lr) << "\n";
  out << "momentum = " << fmt_double(cfg.momentum) << "\n";
  out << "weight_decay = " << fmt_double(cfg.weight_decay) << "\n";
  out << "conv1_channels = " << cfg.conv1_channels << "\n";
  out << "conv2_channels = " << cfg.conv2_channels << "\n";
  out << "conv3_channels = " << cfg.conv3_channels << "\n";
  out << "eval_interval = " << cfg.eval_interval << "\n";
  out << "score_floor = " << fmt_double(cfg.score_floor) << "\n";
  out << "nms_iou = " << fmt_double(cfg.nms_iou) << "\n";
  out << "supervised_only = " << (cfg.supervised_only ? "true" : "false") << "\n";
  out << "unsup_reg = " << (cfg.unsup_reg ? "true" : "false") << "\n";
  out << "snapshot_interval = " << cfg.snapshot_interval << "\n";
  return out.str();
}

TrainConfig load_train_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path);
  TrainConfig cfg;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ValidationError("config line " + std::to_string(line_no) + " is not 'key = value': " + line);
    }
    apply_config_override(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return cfg;
}

Trainer::Trainer(TrainConfig cfg)
    : cfg_(std::move(cfg)), arch_(cfg_.arch()), step_stream_(0), init_stream_(0) {
  cfg_.validate();
  SplitRng root(cfg_.seed);
  // Fixed derivation order; every purpose gets its own stream so that
  // skipping a branch cannot shift the draws of another.
  SplitRng data_rng = root.split();
  SplitRng eval_rng = root.split();
  init_stream_ = root.split();
  step_stream_ = root.split();

  data_ = generate_dataset(data_rng, cfg_.n_labeled, cfg_.n_unlabeled, cfg_.image_size);
  eval_scenes_ = generate_scenes(eval_rng, cfg_.n_eval, cfg_.image_size);
}

Trainer::State Trainer::make_initial_state() {
  State s;
  SplitRng rng = init_stream_;  // copy: initial state is reproducible per trainer
  s.student = init_params(arch_, rng);
  s.teacher = s.student;
  s.velocity.assign(s.student.params.size(), 0.0f);
  s.step = 0;
  return s;
}

std::vector<std::int64_t> Trainer::sample_indices(SplitRng& rng, std::int64_t pool_size,
                                                  std::int64_t count) const {
  std::vector<std::int64_t> out(static_cast<std::size_t>(count));
  for (auto& v : out) v = static_cast<std::int64_t>(rng.next_below(static_cast<std::uint64_t>(pool_size)));
  return out;
}

Tensor4 Trainer::gather_images(const std::vector<SyntheticScene>& pool,
                               const std::vector<std::int64_t>& indices) const {
  Tensor4 out(static_cast<std::int64_t>(indices.size()), 3, cfg_.image_size, cfg_.image_size);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const auto& img = pool[static_cast<std::size_t>(indices[i])].image;
    std::copy(img.data(), img.data() + img.size(),
              out.data() + static_cast<std::int64_t>(i) * img.size());
  }
  return out;
}

Trainer::StepData Trainer::prepare_step_data(const State& state) {
  SplitRng step_rng = step_stream_.split();
  SplitRng r_lab_sample = step_rng.split();
  SplitRng r_lab_weak = step_rng.split();
  SplitRng r_lab_strong = step_rng.split();
  SplitRng r_unlab_sample = step_rng.split();
  SplitRng r_teacher_weak = step_rng.split();
  SplitRng r_unlab_strong = step_rng.split();
  SplitRng r_mask = step_rng.split();
  SplitRng r_apply = step_rng.split();

  StepData data;

  // Supervised branch sees both a weak and a strong view of the batch.
  const auto lab_idx = sample_indices(r_lab_sample, cfg_.n_labeled, cfg_.batch_labeled);
  Tensor4 weak_view = gather_images(data_.labeled, lab_idx);
  std::vector<LabelList> weak_labels(lab_idx.size());
  for (std::size_t i = 0; i < lab_idx.size(); ++i) {
    weak_labels[i] = data_.labeled[static_cast<std::size_t>(lab_idx[i])].objects;
  }
  Tensor4 strong_view = weak_view;
  std::vector<LabelList> strong_labels = weak_labels;
  weak_augment(weak_view, r_lab_weak, &weak_labels);
  strong_augment(strong_view, r_lab_strong, nullptr, &strong_labels);

  data.sup_batch = Tensor4(2 * cfg_.batch_labeled, 3, cfg_.image_size, cfg_.image_size);
  std::copy(weak_view.data(), weak_view.data() + weak_view.size(), data.sup_batch.data());
  std::copy(strong_view.data(), strong_view.data() + strong_view.size(),
            data.sup_batch.data() + weak_view.size());
  data.sup_labels = weak_labels;
  data.sup_labels.insert(data.sup_labels.end(), strong_labels.begin(), strong_labels.end());

  data.run_unsup = !cfg_.supervised_only && cfg_.lambda_u != 0.0 && cfg_.n_unlabeled > 0;
  if (!data.run_unsup) return data;

  const auto unlab_idx = sample_indices(r_unlab_sample, cfg_.n_unlabeled, cfg_.batch_unlabeled);
  Tensor4 teacher_view = gather_images(data_.unlabeled, unlab_idx);
  const auto flips = weak_augment(teacher_view, r_teacher_weak);

  // Pseudo labels from the teacher on the weak view.
  const Tensor4 teacher_head = head_forward<float>(
      arch_, std::span<const float>(state.teacher.params),
      backbone_forward<float>(arch_, std::span<const float>(state.teacher.params), teacher_view));
  const auto teacher_dets = decode_detections(arch_, teacher_head, cfg_.score_floor, cfg_.nms_iou);
  data.pseudo_labels.resize(unlab_idx.size());
  double min_score = 1.0;
  for (std::size_t i = 0; i < unlab_idx.size(); ++i) {
    for (const auto& pl : filter_pseudo_labels(teacher_dets[i], cfg_.tau)) {
      data.pseudo_labels[i].push_back({pl.class_id, pl.box});
      min_score = std::min(min_score, pl.score);
      ++data.n_pseudo;
    }
  }
  data.min_pseudo_score = data.n_pseudo > 0 ? min_score : 0.0;

  // The student's strong view shares the weak flips so pseudo boxes line up.
  data.unsup_view = gather_images(data_.unlabeled, unlab_idx);
  strong_augment(data.unsup_view, r_unlab_strong, &flips);

  data.apply_mum = r_apply.bernoulli(cfg_.mum_probability);
  if (data.apply_mum) {
    data.layout =
        make_group_layout(r_mask, data.unsup_view.n(), cfg_.group_size, cfg_.tiles_per_axis);
  }
  return data;
}

Trainer::LossBreakdown Trainer::loss_and_grad(std::span<const float> params, const StepData& data,
                                              std::vector<float>* grad) {
  LossBreakdown out;
  std::span<float> grad_span;
  if (grad) {
    grad->assign(static_cast<std::size_t>(arch_.param_count()), 0.0f);
    grad_span = std::span<float>(*grad);
  }

  BackboneCache<float> sup_cache;
  const Tensor4 sup_feat =
      backbone_forward<float>(arch_, params, data.sup_batch, grad ? &sup_cache : nullptr);
  const Tensor4 sup_head = head_forward<float>(arch_, params, sup_feat);
  Tensor4 d_sup_head;
  const LossResult sup_loss = detection_loss<float>(arch_, sup_head, data.sup_labels,
                                                    /*include_reg=*/true,
                                                    grad ? &d_sup_head : nullptr);
  out.loss_s = sup_loss.total();
  if (grad) {
    Tensor4 d_sup_feat;
    head_backward<float>(arch_, params, sup_feat, d_sup_head, grad_span, &d_sup_feat);
    backbone_backward<float>(arch_, params, data.sup_batch, sup_cache, d_sup_feat, grad_span);
  }

  if (!data.run_unsup) return out;

  BackboneCache<float> unsup_cache;
  Tensor4 head_in;
  if (data.apply_mum) {
    last_mixed_ = mix_tiles(data.unsup_view, data.layout);
    const Tensor4 mixed_feat =
        backbone_forward<float>(arch_, params, last_mixed_, grad ? &unsup_cache : nullptr);
    head_in = unmix_tiles(mixed_feat, data.layout);
  } else {
    head_in = backbone_forward<float>(arch_, params, data.unsup_view, grad ? &unsup_cache : nullptr);
  }
  const Tensor4 unsup_head = head_forward<float>(arch_, params, head_in);
  Tensor4 d_unsup_head;
  const LossResult unsup_loss = detection_loss<float>(
      arch_, unsup_head, data.pseudo_labels, cfg_.unsup_reg, grad ? &d_unsup_head : nullptr);
  out.loss_u = unsup_loss.total();

  if (grad) {
    const auto lam = static_cast<float>(cfg_.lambda_u);
    for (std::int64_t i = 0; i < d_unsup_head.size(); ++i) d_unsup_head.data()[i] *= lam;

    Tensor4 d_head_in;
    head_backward<float>(arch_, params, head_in, d_unsup_head, grad_span, &d_head_in);
    // Adjoint of unmixing is mixing with the same masks.
    Tensor4 d_backbone_out =
        data.apply_mum ? mix_tiles(d_head_in, data.layout) : std::move(d_head_in);
    const Tensor4& unsup_input = data.apply_mum ? last_mixed_ : data.unsup_view;
    backbone_backward<float>(arch_, params, unsup_input, unsup_cache, d_backbone_out, grad_span);
  }
  return out;
}

StepLog Trainer::train_step(State& state) {
  const std::int64_t step = state.step;  // 0-based inside; logged 1-based
  const StepData data = prepare_step_data(state);

  StepLog log;
  log.step = step + 1;
  log.n_pseudo = data.n_pseudo;
  log.min_pseudo_score = data.min_pseudo_score;
  log.mum_applied = data.apply_mum;

  std::vector<float> grad;
  const LossBreakdown losses = loss_and_grad(state.student.params, data, &grad);
  log.loss_s = losses.loss_s;
  log.loss_u = losses.loss_u;
  log.loss_total = log.loss_s + cfg_.lambda_u * log.loss_u;

  // ---- SGD with momentum and weight decay ----
  for (std::size_t i = 0; i < state.student.params.size(); ++i) {
    const double g = static_cast<double>(grad[i]) +
                     cfg_.weight_decay * static_cast<double>(state.student.params[i]);
    const double v = cfg_.momentum * static_cast<double>(state.velocity[i]) + g;
    state.velocity[i] = static_cast<float>(v);
    state.student.params[i] = static_cast<float>(static_cast<double>(state.student.params[i]) - cfg_.lr * v);
  }

  // ---- EMA teacher update ----
  log.delta = decay_schedule(step, cfg_.ramp_end_step, cfg_.delta_init, cfg_.delta_final);
  state.teacher = ema_update(state.teacher, state.student, log.delta);

  state.step = step + 1;
  return log;
}

double Trainer::evaluate_ap50(const ModelState& model) const {
  if (eval_scenes_.empty()) return 0.0;
  std::vector<std::vector<Detection>> preds;
  std::vector<LabelList> gts;
  preds.reserve(eval_scenes_.size());
  gts.reserve(eval_scenes_.size());

  const std::int64_t chunk = 16;
  std::span<const float> params(model.params);
  for (std::size_t begin = 0; begin < eval_scenes_.size(); begin += chunk) {
    const auto count = std::min<std::size_t>(chunk, eval_scenes_.size() - begin);
    Tensor4 batch(static_cast<std::int64_t>(count), 3, cfg_.image_size, cfg_.image_size);
    for (std::size_t i = 0; i < count; ++i) {
      const auto& img = eval_scenes_[begin + i].image;
      std::copy(img.data(), img.data() + img.size(),
                batch.data() + static_cast<std::int64_t>(i) * img.size());
    }
    const Tensor4 head = head_forward<float>(arch_, params, backbone_forward<float>(arch_, params, batch));
    auto dets = decode_detections(arch_, head, cfg_.score_floor, cfg_.nms_iou, 50);
    for (std::size_t i = 0; i < count; ++i) {
      preds.push_back(std::move(dets[i]));
      gts.push_back(eval_scenes_[begin + i].objects);
    }
  }
  return ap50(preds, gts).map50;
}

namespace {

std::string csv_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

}  // namespace

TrainResult Trainer::run(const std::string& out_dir, const TrainObserver& observer) {
  namespace fs = std::filesystem;
  std::ofstream csv;
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    std::ofstream cfg_out(fs::path(out_dir) / "config.txt", std::ios::trunc);
    if (!cfg_out) throw IoError("cannot write config snapshot in " + out_dir);
    cfg_out << train_config_to_string(cfg_);
    csv.open(fs::path(out_dir) / "metrics.csv", std::ios::trunc);
    if (!csv) throw IoError("cannot write metrics.csv in " + out_dir);
    csv << "step,loss_s,loss_u,delta,n_pseudo,ap50_teacher,ap50_student\n";
  }

  State state = make_initial_state();
  TrainResult result;
  double last_delta = cfg_.delta_init;
  for (std::int64_t i = 0; i < cfg_.total_steps; ++i) {
    const StepLog log = train_step(state);
    last_delta = log.delta;
    if (!std::isfinite(log.loss_total)) {
      throw ValidationError("training diverged: non-finite loss at step " + std::to_string(log.step));
    }

    StepEvent event;
    event.log = log;
    const bool eval_now = (log.step % cfg_.eval_interval == 0) || log.step == cfg_.total_steps;
    if (eval_now) {
      event.has_eval = true;
      event.ap50_teacher = evaluate_ap50(state.teacher);
      event.ap50_student = evaluate_ap50(state.student);
      result.history.push_back({log, event.ap50_teacher, event.ap50_student});
      if (csv.is_open()) {
        csv << log.step << ',' << csv_number(log.loss_s) << ',' << csv_number(log.loss_u) << ','
            << csv_number(log.delta) << ',' << log.n_pseudo << ','
            << csv_number(event.ap50_teacher) << ',' << csv_number(event.ap50_student) << "\n";
      }
    }
    if (cfg_.snapshot_interval > 0 && log.step % cfg_.snapshot_interval == 0 &&
        !last_mixed_.empty()) {
      event.mixed_batch = &last_mixed_;
    }
    if (observer) observer(event);
  }

  result.student = std::move(state.student);
  result.teacher = std::move(state.teacher);
  if (!result.history.empty()) {
    result.final_ap50_teacher = result.history.back().ap50_teacher;
    result.final_ap50_student = result.history.back().ap50_student;
  }
  if (!out_dir.empty()) {
    csv.close();
    if (!csv) throw IoError("failed writing metrics.csv in " + out_dir);
    save_checkpoint((fs::path(out_dir) / "student.ckpt").string(), result.student,
                    cfg_.total_steps, last_delta);
    save_checkpoint((fs::path(out_dir) / "teacher.ckpt").string(), result.teacher,
                    cfg_.total_steps, last_delta);
  }
  return result;
}

}  // namespace mum
