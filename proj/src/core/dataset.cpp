#include "dataset.hpp"

#include <algorithm>
#include <cmath>

#include "errors.hpp"

namespace mum {

namespace {

constexpr double kPi = 3.14159265358979323846;

void paint_background(Tensor4& img, SplitRng& rng) {
  const std::int64_t s = img.h();
  for (std::int64_t c = 0; c < 3; ++c) {
    const float base = static_cast<float>(rng.next_range(0.10, 0.40));
    const float amp = static_cast<float>(rng.next_range(0.03, 0.10));
    const double fx = rng.next_range(0.5, 2.5) * 2.0 * kPi / static_cast<double>(s);
    const double fy = rng.next_range(0.5, 2.5) * 2.0 * kPi / static_cast<double>(s);
    const double phase = rng.next_range(0.0, 2.0 * kPi);
    float* plane = img.plane(0, c);
    for (std::int64_t y = 0; y < s; ++y) {
      for (std::int64_t x = 0; x < s; ++x) {
        const double wave = std::sin(fx * static_cast<double>(x) + fy * static_cast<double>(y) + phase);
        const double noise = rng.next_range(-0.02, 0.02);
        plane[y * s + x] = std::clamp(base + amp * static_cast<float>(wave) + static_cast<float>(noise), 0.0f, 1.0f);
      }
    }
  }
}

void paint_shape(Tensor4& img, ShapeClass shape, const Box& box, const float color[3]) {
  const std::int64_t s = img.h();
  const auto x0 = static_cast<std::int64_t>(std::lround(box.x_min));
  const auto y0 = static_cast<std::int64_t>(std::lround(box.y_min));
  const auto x1 = static_cast<std::int64_t>(std::lround(box.x_max));
  const auto y1 = static_cast<std::int64_t>(std::lround(box.y_max));
  const double cx = 0.5 * (box.x_min + box.x_max);
  const double cy = 0.5 * (box.y_min + box.y_max);
  const double rx = 0.5 * box.width();
  const double ry = 0.5 * box.height();

  for (std::int64_t y = std::max<std::int64_t>(0, y0); y < std::min(s, y1); ++y) {
    for (std::int64_t x = std::max<std::int64_t>(0, x0); x < std::min(s, x1); ++x) {
      const double px = static_cast<double>(x) + 0.5;
      const double py = static_cast<double>(y) + 0.5;
      bool inside = false;
      switch (shape) {
        case ShapeClass::kRectangle:
          inside = true;
          break;
        case ShapeClass::kDisk: {
          const double dx = (px - cx) / rx;
          const double dy = (py - cy) / ry;
          inside = dx * dx + dy * dy <= 1.0;
          break;
        }
        case ShapeClass::kTriangle: {
          // Upward isoceles triangle inscribed in the box.
          const double t = (py - box.y_min) / box.height();  // 0 at apex row
          const double half_width = 0.5 * box.width() * t;
          inside = t >= 0.0 && t <= 1.0 && std::abs(px - cx) <= half_width;
          break;
        }
      }
      if (!inside) continue;
      for (std::int64_t c = 0; c < 3; ++c) {
        img.plane(0, c)[y * s + x] = color[c];
      }
    }
  }
}

SyntheticScene make_scene(SplitRng& rng, int image_size) {
  SyntheticScene scene;
  scene.image = Tensor4(1, 3, image_size, image_size);
  paint_background(scene.image, rng);

  const int n_objects = 1 + static_cast<int>(rng.next_below(3));
  for (int i = 0; i < n_objects; ++i) {
    const auto shape = static_cast<ShapeClass>(rng.next_below(kNumShapeClasses));
    const double lo = std::max(8.0, 0.18 * image_size);
    const double hi = 0.42 * image_size;
    const double w = std::floor(rng.next_range(lo, hi));
    const double h = std::floor(rng.next_range(lo, hi));
    const double x0 = std::floor(rng.next_range(0.0, image_size - w));
    const double y0 = std::floor(rng.next_range(0.0, image_size - h));
    const Box box{x0, y0, x0 + w, y0 + h};

    float color[3];
    for (auto& v : color) v = static_cast<float>(rng.next_range(0.55, 1.0));
    // Dim one random channel for hue variety.
    color[rng.next_below(3)] = static_cast<float>(rng.next_range(0.0, 0.45));

    paint_shape(scene.image, shape, box, color);
    scene.objects.push_back({static_cast<int>(shape), box});
  }
  return scene;
}

}  // namespace

std::vector<SyntheticScene> generate_scenes(SplitRng& rng, std::int64_t count, int image_size) {
  if (count < 0) throw InvalidArgument("scene count must be >= 0");
  if (image_size < 16) throw InvalidArgument("image_size must be >= 16");
  std::vector<SyntheticScene> scenes;
  scenes.reserve(static_cast<std::size_t>(count));
  for (std::int64_t i = 0; i < count; ++i) {
    SplitRng scene_rng = rng.split();
    scenes.push_back(make_scene(scene_rng, image_size));
  }
  return scenes;
}

DatasetSplits generate_dataset(SplitRng& rng, std::int64_t n_labeled, std::int64_t n_unlabeled,
                               int image_size) {
  DatasetSplits splits;
  splits.labeled = generate_scenes(rng, n_labeled, image_size);
  splits.unlabeled = generate_scenes(rng, n_unlabeled, image_size);
  return splits;
}

}  // namespace mum
