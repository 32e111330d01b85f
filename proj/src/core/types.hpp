#pragma once

#include <string>
#include <vector>

namespace mum {

/// Axis-aligned box in image pixels, corners (x_min, y_min) / (x_max, y_max).
struct Box {
  double x_min = 0, y_min = 0, x_max = 0, y_max = 0;

  double width() const { return x_max - x_min; }
  double height() const { return y_max - y_min; }
  double area() const { return width() * height(); }
  bool valid() const { return x_min < x_max && y_min < y_max; }

  bool operator==(const Box&) const = default;
};

/// Ground-truth object: class plus box.
struct ObjectLabel {
  int class_id = 0;
  Box box;
};

/// Scored detector output; doubles as a pseudo label once it clears the
/// confidence threshold.
struct Detection {
  int class_id = 0;
  double score = 0;
  Box box;
};

using PseudoLabel = Detection;
using LabelList = std::vector<ObjectLabel>;

}  // namespace mum
