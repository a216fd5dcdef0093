#pragma once

#include <optional>
#include <span>
#include <vector>

#include "sinointerp/error.hpp"

namespace sinointerp {

/// Parallel-beam 2D scan description. Angles are equally spaced, in degrees.
struct ScanGeometry {
  int n_angles = 513;
  double angle_start_deg = 0.0;
  double angle_step_deg = 0.35;
  int n_detectors = 512;
  double detector_pitch = 1.0;  // in image-pixel units
  int image_size = 512;

  /// Throws BadGeometry if any field is out of range.
  void validate() const;

  double angle_deg(int index) const { return angle_start_deg + index * angle_step_deg; }

  bool operator==(const ScanGeometry&) const = default;
};

/// Pre-normalization extrema of a sinogram.
struct NormParams {
  double vmin = 0.0;
  double vmax = 1.0;

  bool operator==(const NormParams&) const = default;
};

/// Angle-major array of line integrals: rows are acquisitions, columns are
/// detector bins. Immutable after construction.
class Sinogram {
 public:
  Sinogram(ScanGeometry geometry, std::vector<float> data, std::optional<NormParams> norm = {});

  const ScanGeometry& geometry() const { return geometry_; }
  int rows() const { return geometry_.n_angles; }
  int cols() const { return geometry_.n_detectors; }
  const std::vector<float>& data() const { return data_; }
  const std::optional<NormParams>& norm() const { return norm_; }

  std::span<const float> row(int a) const {
    return {data_.data() + static_cast<std::size_t>(a) * cols(), static_cast<std::size_t>(cols())};
  }
  float at(int a, int d) const { return data_[static_cast<std::size_t>(a) * cols() + d]; }

 private:
  ScanGeometry geometry_;
  std::vector<float> data_;
  std::optional<NormParams> norm_;
};

/// Square attenuation map, row-major.
class Image {
 public:
  Image(int size, std::vector<float> data);
  static Image zeros(int size);

  int size() const { return size_; }
  const std::vector<float>& data() const { return data_; }
  float at(int row, int col) const { return data_[static_cast<std::size_t>(row) * size_ + col]; }

 private:
  int size_;
  std::vector<float> data_;
};

/// Index bookkeeping for up-sampling by a ratio R. References sit every R
/// rows of the dense sinogram; offset k in [1, R-1] lies between them.
class InterpolationPlan {
 public:
  explicit InterpolationPlan(int ratio);

  int ratio() const { return ratio_; }
  /// Weight of the lower reference for offset k: 1 - k/R.
  double weight(int offset) const { return 1.0 - static_cast<double>(offset) / ratio_; }
  int dense_rows(int scarce_rows) const { return (scarce_rows - 1) * ratio_ + 1; }
  /// Offset class shared by k and R-k.
  int offset_class(int offset) const { return offset < ratio_ - offset ? offset : ratio_ - offset; }
  int class_count() const { return ratio_ / 2; }

 private:
  int ratio_;
};

int number_of_networks(int ratio);

Sinogram normalize(const Sinogram& s);
Sinogram denormalize(const Sinogram& s);

/// Keeps rows 0, R, 2R, ..., n_angles-1. R = 1 returns a copy.
Sinogram subsample(const Sinogram& s, int ratio);

/// Copy of `s` with new data and the same geometry and norm record.
Sinogram with_data(const Sinogram& s, std::vector<float> data);

}  // namespace sinointerp
