#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "errors.hpp"
#include "helpers.hpp"
#include "rng.hpp"
#include "teacher_student.hpp"

using namespace mum;

namespace {

ModelState make_state(std::vector<float> params, const std::string& arch = "test") {
  ModelState s;
  s.arch_id = arch;
  s.params = std::move(params);
  return s;
}

double l2_diff(const ModelState& a, const std::vector<double>& ref) {
  double acc = 0;
  for (std::size_t i = 0; i < a.params.size(); ++i) {
    const double d = static_cast<double>(a.params[i]) - ref[i];
    acc += d * d;
  }
  return std::sqrt(acc);
}

}  // namespace

TEST_CASE("ema_update endpoint and midpoint behavior") {
  const auto teacher = make_state({1.0f, 3.0f});
  const auto student = make_state({3.0f, 1.0f});

  const auto frozen = ema_update(teacher, student, 1.0);
  CHECK(frozen.params == std::vector<float>{1.0f, 3.0f});

  const auto copied = ema_update(teacher, student, 0.0);
  CHECK(copied.params == std::vector<float>{3.0f, 1.0f});

  const auto mid = ema_update(teacher, student, 0.5);
  CHECK(mid.params == std::vector<float>{2.0f, 2.0f});
}

TEST_CASE("ema_update rejects mismatched inputs") {
  CHECK_THROWS_AS(ema_update(make_state({1.f}), make_state({1.f, 2.f}), 0.5), InvalidArgument);
  CHECK_THROWS_AS(ema_update(make_state({1.f}, "a"), make_state({1.f}, "b"), 0.5), InvalidArgument);
  CHECK_THROWS_AS(ema_update(make_state({1.f}), make_state({2.f}), 1.5), InvalidArgument);
}

TEST_CASE("ema contraction toward a constant student") {
  // Zero student: every float rounding then scales with the shrinking
  // difference itself, so the geometric decay is visible to 1e-6 relative
  // even after many steps.
  SplitRng rng(17);
  std::vector<float> teacher_params(64);
  for (auto& v : teacher_params) v = static_cast<float>(rng.next_range(-2.0, 2.0));
  const auto student = make_state(std::vector<float>(64, 0.0f));
  const std::vector<double> student_ref(64, 0.0);

  for (const double delta : {0.5, 0.999, 0.9996}) {
    auto teacher = make_state(teacher_params);
    const double initial = l2_diff(teacher, student_ref);
    const int steps = 12;
    for (int t = 0; t < steps; ++t) teacher = ema_update(teacher, student, delta);
    const double expected = std::pow(delta, steps) * initial;
    CHECK(testutil::rel_error(l2_diff(teacher, student_ref), expected) < 1e-6);
  }

  // Nonzero target, mild decay: same law while the difference stays large.
  std::vector<float> target(64), offset_teacher(64);
  for (std::size_t i = 0; i < 64; ++i) {
    target[i] = static_cast<float>(rng.next_range(-1.0, 1.0));
    offset_teacher[i] = static_cast<float>(target[i] + rng.next_range(-2.0, 2.0));
  }
  const auto student2 = make_state(target);
  const std::vector<double> ref2(target.begin(), target.end());
  auto teacher2 = make_state(offset_teacher);
  const double initial2 = l2_diff(teacher2, ref2);
  for (int t = 0; t < 6; ++t) teacher2 = ema_update(teacher2, student2, 0.999);
  CHECK(testutil::rel_error(l2_diff(teacher2, ref2), std::pow(0.999, 6) * initial2) < 1e-6);
}

TEST_CASE("ema_update is affine") {
  SplitRng rng(18);
  std::vector<float> t(32), s(32);
  for (auto& v : t) v = static_cast<float>(rng.next_range(-1, 1));
  for (auto& v : s) v = static_cast<float>(rng.next_range(-1, 1));
  const double a = 2.5, b = -0.75, delta = 0.9;

  auto scale_shift = [&](const std::vector<float>& in) {
    std::vector<float> out(in.size());
    for (std::size_t i = 0; i < in.size(); ++i)
      out[i] = static_cast<float>(a * static_cast<double>(in[i]) + b);
    return out;
  };

  const auto direct = ema_update(make_state(scale_shift(t)), make_state(scale_shift(s)), delta);
  const auto base = ema_update(make_state(t), make_state(s), delta);
  for (std::size_t i = 0; i < 32; ++i) {
    const double expected = a * static_cast<double>(base.params[i]) + b;
    CHECK(testutil::rel_error(static_cast<double>(direct.params[i]), expected, 1e-6) < 1e-5);
  }
}

TEST_CASE("decay schedule endpoints, midpoint and clamp") {
  CHECK(decay_schedule(0, 1000) == 0.5);
  CHECK(decay_schedule(1000, 1000) == 0.9996);
  CHECK(decay_schedule(5000, 1000) == 0.9996);
  CHECK(decay_schedule(500, 1000) == doctest::Approx(0.7498).epsilon(1e-12));
  CHECK_THROWS_AS(decay_schedule(10, 0), InvalidArgument);
  CHECK_THROWS_AS(decay_schedule(-1, 100), InvalidArgument);
  CHECK_THROWS_AS(decay_schedule(1, 100, 0.9, 0.5), InvalidArgument);
}

TEST_CASE("pseudo-label filtering") {
  std::vector<Detection> dets = {{0, 0.9, {0, 0, 1, 1}}, {1, 0.7, {1, 1, 2, 2}}, {0, 0.5, {2, 2, 3, 3}}};

  const auto kept = filter_pseudo_labels(dets, 0.7);
  REQUIRE(kept.size() == 2);
  CHECK(kept[0].score == 0.9);
  CHECK(kept[1].score == 0.7);  // inclusive threshold

  CHECK(filter_pseudo_labels(dets, 0.0).size() == 3);
  CHECK(filter_pseudo_labels(dets, 1.0).empty());

  // Idempotent, and every survivor clears the threshold.
  const auto twice = filter_pseudo_labels(kept, 0.7);
  CHECK(twice.size() == kept.size());
  for (const auto& d : twice) CHECK(d.score >= 0.7);

  CHECK_THROWS_AS(filter_pseudo_labels(dets, 1.5), InvalidArgument);
}

TEST_CASE("nms") {
  SUBCASE("single box survives") {
    const std::vector<Detection> one = {{0, 0.8, {0, 0, 10, 10}}};
    CHECK(nms(one, 0.5).size() == 1);
  }

  SUBCASE("duplicate boxes keep only the stronger") {
    const std::vector<Detection> dets = {{0, 0.8, {0, 0, 10, 10}}, {0, 0.9, {0, 0, 10, 10}}};
    const auto kept = nms(dets, 0.5);
    REQUIRE(kept.size() == 1);
    CHECK(kept[0].score == 0.9);
  }

  SUBCASE("disjoint boxes all survive, sorted by score") {
    const std::vector<Detection> dets = {
        {0, 0.5, {0, 0, 5, 5}}, {0, 0.9, {20, 20, 25, 25}}, {0, 0.7, {40, 40, 45, 45}}};
    const auto kept = nms(dets, 0.5);
    REQUIRE(kept.size() == 3);
    CHECK(kept[0].score == 0.9);
    CHECK(kept[1].score == 0.7);
    CHECK(kept[2].score == 0.5);
  }

  SUBCASE("suppression is class-wise") {
    const std::vector<Detection> dets = {{0, 0.9, {0, 0, 10, 10}}, {1, 0.8, {0, 0, 10, 10}}};
    CHECK(nms(dets, 0.5).size() == 2);
  }

  SUBCASE("score ties break by input index") {
    const std::vector<Detection> dets = {{0, 0.8, {0, 0, 10, 10}}, {0, 0.8, {1, 1, 11, 11}}};
    const auto kept = nms(dets, 0.5);
    REQUIRE(kept.size() == 1);
    CHECK(kept[0].box.x_min == 0.0);
  }

  CHECK_THROWS_AS(nms({}, 0.0), InvalidArgument);
}

TEST_CASE("checkpoint round-trip") {
  namespace fs = std::filesystem;
  const auto dir = fs::temp_directory_path() / "mum_ckpt_test";
  fs::create_directories(dir);
  const auto path = (dir / "model.ckpt").string();

  SplitRng rng(23);
  std::vector<float> params(257);
  for (auto& v : params) v = static_cast<float>(rng.next_range(-2, 2));
  const auto state = make_state(params, "toydet/in64/nc3/c16-32-64");

  save_checkpoint(path, state, 1234, 0.9996);
  const auto loaded = load_checkpoint(path);
  CHECK(loaded.state.arch_id == state.arch_id);
  CHECK(loaded.state.params == state.params);
  CHECK(loaded.step == 1234);
  CHECK(loaded.decay == 0.9996);

  CHECK_THROWS_AS(load_checkpoint((dir / "missing.ckpt").string()), IoError);
  fs::remove_all(dir);
}
