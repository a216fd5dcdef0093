#include "sinointerp/core.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace sinointerp {

void ScanGeometry::validate() const {
  if (n_angles < 2) throw Error(ErrorCode::BadGeometry, "n_angles must be >= 2, got " + std::to_string(n_angles));
  if (!(angle_step_deg > 0.0)) throw Error(ErrorCode::BadGeometry, "angle_step_deg must be > 0");
  if (n_detectors < 1) throw Error(ErrorCode::BadGeometry, "n_detectors must be >= 1");
  if (!(detector_pitch > 0.0)) throw Error(ErrorCode::BadGeometry, "detector_pitch must be > 0");
  if (image_size < 1) throw Error(ErrorCode::BadGeometry, "image_size must be >= 1");
}

Sinogram::Sinogram(ScanGeometry geometry, std::vector<float> data, std::optional<NormParams> norm)
    : geometry_(geometry), data_(std::move(data)), norm_(norm) {
  geometry_.validate();
  const auto expected = static_cast<std::size_t>(geometry_.n_angles) * geometry_.n_detectors;
  if (data_.size() != expected) {
    throw Error(ErrorCode::DimensionMismatch, "sinogram payload has " + std::to_string(data_.size()) +
                                                  " values, geometry needs " + std::to_string(expected));
  }
  for (float v : data_) {
    if (!std::isfinite(v)) throw Error(ErrorCode::DimensionMismatch, "sinogram contains non-finite values");
  }
  if (norm_) {
    if (!(norm_->vmax > norm_->vmin)) throw Error(ErrorCode::ConstantSinogram, "norm record needs vmax > vmin");
    for (float v : data_) {
      if (v < -1e-6f || v > 1.0f + 1e-6f) {
        throw Error(ErrorCode::DimensionMismatch, "normalized sinogram value outside [0, 1]");
      }
    }
  }
}

Image::Image(int size, std::vector<float> data) : size_(size), data_(std::move(data)) {
  if (size_ < 1) throw Error(ErrorCode::SizeMismatch, "image size must be positive");
  if (data_.size() != static_cast<std::size_t>(size_) * size_) {
    throw Error(ErrorCode::DimensionMismatch, "image payload does not match " + std::to_string(size_) + "x" +
                                                  std::to_string(size_));
  }
  for (float v : data_) {
    if (!std::isfinite(v)) throw Error(ErrorCode::DimensionMismatch, "image contains non-finite values");
  }
}

Image Image::zeros(int size) {
  return Image(size, std::vector<float>(static_cast<std::size_t>(size) * size, 0.0f));
}

InterpolationPlan::InterpolationPlan(int ratio) : ratio_(ratio) {
  if (ratio < 2) throw Error(ErrorCode::BadRatio, "ratio must be >= 2, got " + std::to_string(ratio));
}

int number_of_networks(int ratio) { return InterpolationPlan(ratio).class_count(); }

Sinogram normalize(const Sinogram& s) {
  if (s.norm()) throw Error(ErrorCode::ConstantSinogram, "sinogram is already normalized");
  const auto [lo, hi] = std::minmax_element(s.data().begin(), s.data().end());
  const double vmin = *lo;
  const double vmax = *hi;
  if (!(vmax > vmin)) throw Error(ErrorCode::ConstantSinogram, "sinogram is constant, cannot normalize");
  const double scale = 1.0 / (vmax - vmin);
  std::vector<float> out(s.data().size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = static_cast<float>(std::clamp((s.data()[i] - vmin) * scale, 0.0, 1.0));
  }
  return Sinogram(s.geometry(), std::move(out), NormParams{vmin, vmax});
}

Sinogram denormalize(const Sinogram& s) {
  if (!s.norm()) return s;
  const auto [vmin, vmax] = *s.norm();
  std::vector<float> out(s.data().size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = static_cast<float>(vmin + s.data()[i] * (vmax - vmin));
  }
  return Sinogram(s.geometry(), std::move(out));
}

Sinogram subsample(const Sinogram& s, int ratio) {
  if (ratio < 1) throw Error(ErrorCode::BadRatio, "ratio must be >= 1");
  if ((s.rows() - 1) % ratio != 0) {
    throw Error(ErrorCode::IndivisibleAngles, std::to_string(s.rows() - 1) + " angle intervals not divisible by " +
                                                  std::to_string(ratio));
  }
  if (ratio == 1) return s;
  ScanGeometry g = s.geometry();
  g.n_angles = (s.rows() - 1) / ratio + 1;
  g.angle_step_deg *= ratio;
  std::vector<float> out;
  out.reserve(static_cast<std::size_t>(g.n_angles) * s.cols());
  for (int a = 0; a < s.rows(); a += ratio) {
    const auto r = s.row(a);
    out.insert(out.end(), r.begin(), r.end());
  }
  return Sinogram(g, std::move(out), s.norm());
}

Sinogram with_data(const Sinogram& s, std::vector<float> data) {
  return Sinogram(s.geometry(), std::move(data), s.norm());
}

}  // namespace sinointerp
