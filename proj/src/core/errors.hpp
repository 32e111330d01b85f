#pragma once

#include <stdexcept>
#include <string>

namespace mum {

// Error taxonomy mirrored by the C API status codes.
struct InvalidArgument : std::runtime_error {
  explicit InvalidArgument(const std::string& msg) : std::runtime_error(msg) {}
};

// A tensor dimension does not satisfy a shape precondition (e.g. not
// divisible by the tile count). The message names the offending dimension.
struct ShapeError : std::runtime_error {
  explicit ShapeError(const std::string& msg) : std::runtime_error(msg) {}
};

// Structured data failed an integrity check (mask invariant, manifest, ...).
struct ValidationError : std::runtime_error {
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

struct IoError : std::runtime_error {
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace mum
