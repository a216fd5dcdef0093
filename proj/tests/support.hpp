#pragma once

#include <gtest/gtest.h>

#include <filesystem>
#include <string>
#include <vector>

#include "sinointerp/core.hpp"
#include "sinointerp/rng.hpp"

namespace testing_support {

inline sinointerp::ScanGeometry small_geometry(int n_angles, int n_detectors, int image_size = 64) {
  sinointerp::ScanGeometry g;
  g.n_angles = n_angles;
  g.angle_start_deg = 0.0;
  g.angle_step_deg = 180.0 / n_angles;
  g.n_detectors = n_detectors;
  g.detector_pitch = 1.0;
  g.image_size = image_size;
  return g;
}

inline sinointerp::Sinogram sinogram_from(int rows, int cols, std::vector<float> data) {
  return sinointerp::Sinogram(small_geometry(rows, cols), std::move(data));
}

inline std::vector<float> random_values(std::size_t n, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  sinointerp::XorShift64Star rng(seed);
  std::vector<float> v(n);
  for (auto& x : v) x = static_cast<float>(rng.uniform(lo, hi));
  return v;
}

/// Rows v(a) = base + a * slope, an affine function of the row index.
inline sinointerp::Sinogram affine_sinogram(int rows, int cols, std::uint64_t seed) {
  const auto base = random_values(static_cast<std::size_t>(cols), seed, 0.0, 1.0);
  const auto slope = random_values(static_cast<std::size_t>(cols), seed + 1, -0.01, 0.01);
  std::vector<float> data(static_cast<std::size_t>(rows) * cols);
  for (int a = 0; a < rows; ++a) {
    for (int d = 0; d < cols; ++d) data[static_cast<std::size_t>(a) * cols + d] = base[d] + a * slope[d];
  }
  return sinogram_from(rows, cols, std::move(data));
}

/// Fresh empty directory under the system temp dir, named after the test.
inline std::filesystem::path scratch_dir() {
  const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
  auto dir = std::filesystem::temp_directory_path() / "sinointerp_tests" /
             (std::string(info->test_suite_name()) + "." + info->name());
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace testing_support
