#pragma once

#include <gtest/gtest.h>

#include <filesystem>
#include <string>

#include "dawnfm/core/rng.hpp"
#include "dawnfm/io/tensor_io.hpp"

namespace testutil {

using dawnfm::SeededRng;
using dawnfm::Shape;
using dawnfm::Tensor;

inline Tensor random_tensor(SeededRng& rng, const Shape& shape, double lo = -1.0, double hi = 1.0) {
  Tensor t(shape);
  for (auto& v : t.values()) v = rng.uniform(lo, hi);
  return t;
}

/// Fresh empty directory under the system temp dir, unique per test.
inline std::filesystem::path scratch_dir(const std::string& tag) {
  const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
  auto dir = std::filesystem::temp_directory_path() / "dawnfm_unit" /
             (std::string(info->test_suite_name()) + "." + info->name() + "." + tag);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline bool same_bytes(const std::filesystem::path& a, const std::filesystem::path& b) {
  return dawnfm::io::read_file(a) == dawnfm::io::read_file(b);
}

}  // namespace testutil
