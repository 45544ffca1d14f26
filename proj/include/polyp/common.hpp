#pragma once

#include <stdexcept>
#include <string>

namespace polyp {

// Filesystem / environment problems: missing files, unreadable images, bad paths.
struct io_error : std::runtime_error {
  explicit io_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Semantic problems in otherwise readable data: duplicate ids, empty classes,
// label mismatches, unknown scales.
struct data_error : std::runtime_error {
  explicit data_error(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace polyp
