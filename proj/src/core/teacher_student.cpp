#include "teacher_student.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "errors.hpp"
#include "metrics.hpp"

namespace mum {

ModelState ema_update(const ModelState& teacher, const ModelState& student, double decay) {
  if (teacher.params.size() != student.params.size()) {
    throw InvalidArgument("ema_update: parameter lengths differ (" +
                          std::to_string(teacher.params.size()) + " vs " +
                          std::to_string(student.params.size()) + ")");
  }
  if (teacher.arch_id != student.arch_id) {
    throw InvalidArgument("ema_update: arch_id mismatch (" + teacher.arch_id + " vs " +
                          student.arch_id + ")");
  }
  if (!(decay >= 0.0 && decay <= 1.0)) {
    throw InvalidArgument("ema_update: decay must be in [0, 1], got " + std::to_string(decay));
  }
  ModelState out;
  out.arch_id = teacher.arch_id;
  out.params.resize(teacher.params.size());
  const double keep = decay;
  const double take = 1.0 - decay;
  for (std::size_t i = 0; i < out.params.size(); ++i) {
    out.params[i] = static_cast<float>(static_cast<double>(teacher.params[i]) * keep +
                                       static_cast<double>(student.params[i]) * take);
  }
  return out;
}

double decay_schedule(std::int64_t step, std::int64_t ramp_end_step, double d_init, double d_final) {
  if (step < 0) throw InvalidArgument("decay_schedule: step must be >= 0");
  if (ramp_end_step <= 0) throw InvalidArgument("decay_schedule: ramp_end_step must be > 0");
  if (d_init > d_final) {
    throw InvalidArgument("decay_schedule: d_init must not exceed d_final");
  }
  if (step >= ramp_end_step) return d_final;
  const double t = static_cast<double>(step) / static_cast<double>(ramp_end_step);
  return d_init + (d_final - d_init) * t;
}

std::vector<PseudoLabel> filter_pseudo_labels(const std::vector<Detection>& dets, double tau) {
  if (!(tau >= 0.0 && tau <= 1.0)) {
    throw InvalidArgument("filter_pseudo_labels: tau must be in [0, 1]");
  }
  std::vector<PseudoLabel> out;
  out.reserve(dets.size());
  for (const auto& d : dets) {
    if (d.score >= tau) out.push_back(d);
  }
  return out;
}

std::vector<Detection> nms(const std::vector<Detection>& dets, double iou_threshold) {
  if (!(iou_threshold > 0.0 && iou_threshold < 1.0)) {
    throw InvalidArgument("nms: iou_threshold must be in (0, 1)");
  }
  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (dets[a].score != dets[b].score) return dets[a].score > dets[b].score;
    return a < b;
  });

  std::vector<Detection> kept;
  for (const std::size_t idx : order) {
    const auto& cand = dets[idx];
    bool suppressed = false;
    for (const auto& k : kept) {
      if (k.class_id == cand.class_id && iou(k.box, cand.box) > iou_threshold) {
        suppressed = true;
        break;
      }
    }
    if (!suppressed) kept.push_back(cand);
  }
  return kept;
}

namespace {

void put_f32_le(std::ofstream& out, float v) {
  std::uint32_t bits = std::bit_cast<std::uint32_t>(v);
  const char bytes[4] = {static_cast<char>(bits & 0xff), static_cast<char>((bits >> 8) & 0xff),
                         static_cast<char>((bits >> 16) & 0xff),
                         static_cast<char>((bits >> 24) & 0xff)};
  out.write(bytes, 4);
}

float get_f32_le(const unsigned char* p) {
  const std::uint32_t bits = static_cast<std::uint32_t>(p[0]) |
                             (static_cast<std::uint32_t>(p[1]) << 8) |
                             (static_cast<std::uint32_t>(p[2]) << 16) |
                             (static_cast<std::uint32_t>(p[3]) << 24);
  return std::bit_cast<float>(bits);
}

}  // namespace

void save_checkpoint(const std::string& path, const ModelState& state, std::int64_t step,
                     double decay) {
  std::ofstream raw(path, std::ios::binary | std::ios::trunc);
  if (!raw) throw IoError("cannot open checkpoint file for writing: " + path);
  if constexpr (std::endian::native == std::endian::little) {
    raw.write(reinterpret_cast<const char*>(state.params.data()),
              static_cast<std::streamsize>(state.params.size() * sizeof(float)));
  } else {
    for (const float v : state.params) put_f32_le(raw, v);
  }
  raw.close();
  if (!raw) throw IoError("failed writing checkpoint file: " + path);

  nlohmann::json manifest;
  manifest["arch_id"] = state.arch_id;
  manifest["length"] = state.params.size();
  manifest["step"] = step;
  manifest["decay"] = decay;
  std::ofstream side(path + ".json", std::ios::trunc);
  if (!side) throw IoError("cannot open checkpoint manifest for writing: " + path + ".json");
  side << manifest.dump(2) << "\n";
  if (!side) throw IoError("failed writing checkpoint manifest: " + path + ".json");
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream side(path + ".json");
  if (!side) throw IoError("cannot open checkpoint manifest: " + path + ".json");
  nlohmann::json manifest;
  try {
    side >> manifest;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("checkpoint manifest is not valid JSON: ") + e.what());
  }

  Checkpoint ckpt;
  std::size_t length = 0;
  try {
    ckpt.state.arch_id = manifest.at("arch_id").get<std::string>();
    length = manifest.at("length").get<std::size_t>();
    ckpt.step = manifest.at("step").get<std::int64_t>();
    ckpt.decay = manifest.at("decay").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("checkpoint manifest is missing fields: ") + e.what());
  }

  std::ifstream raw(path, std::ios::binary);
  if (!raw) throw IoError("cannot open checkpoint file: " + path);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(raw)),
                                   std::istreambuf_iterator<char>());
  if (bytes.size() != length * sizeof(float)) {
    throw ValidationError("checkpoint length mismatch: manifest says " + std::to_string(length) +
                          " floats but file holds " + std::to_string(bytes.size()) + " bytes");
  }
  ckpt.state.params.resize(length);
  for (std::size_t i = 0; i < length; ++i) {
    ckpt.state.params[i] = get_f32_le(bytes.data() + i * 4);
  }
  return ckpt;
}

}  // namespace mum
