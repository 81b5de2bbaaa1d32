#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "neurodrive/error.hpp"

namespace testing {

// Code of the neurodrive::Error thrown by f, or nothing when f returns.
template <class F>
std::optional<neurodrive::ErrorCode> error_of(F&& f) {
  try {
    f();
  } catch (const neurodrive::Error& e) {
    return e.code();
  }
  return std::nullopt;
}

// Fresh directory under the build tree, removed first if it exists.
inline std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::path(ND_TEST_SCRATCH) / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace testing
