#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

// Minimal 8-bit RGB PNG bridge for the CLI. Images travel as float32 [0, 1]
// planes in channel-major (RGB) order, value = byte / 255, so a decode ->
// encode round trip is lossless.

namespace pngio {

struct IoFailure : std::runtime_error {
  explicit IoFailure(const std::string& msg) : std::runtime_error(msg) {}
};

struct ImageF32 {
  std::int64_t height = 0;
  std::int64_t width = 0;
  std::vector<float> planes;  // 3 * height * width, RGB plane-major

  float* plane(int c) { return planes.data() + static_cast<std::size_t>(c) * height * width; }
  const float* plane(int c) const {
    return planes.data() + static_cast<std::size_t>(c) * height * width;
  }
};

ImageF32 read_png(const std::string& path);
void write_png(const std::string& path, const ImageF32& image);

}  // namespace pngio
