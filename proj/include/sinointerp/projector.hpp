#pragma once

#include <span>

#include "sinointerp/core.hpp"

namespace sinointerp {

struct ProjectorConfig {
  ScanGeometry geometry;
  double sampling_step = 0.5;  // ray-marching step, pixel units, in (0, 1]

  void validate() const;
};

/// Ray-driven parallel-beam projector with a matched scatter transpose.
///
/// Pixel (row, col) sits at x = col - (N-1)/2, y = row - (N-1)/2. The ray
/// for angle theta and detector offset t = (d - (n_detectors-1)/2) * pitch is
/// t*(cos, sin) + s*(-sin, cos); it is sampled at s = j*step for integer j,
/// each sample gathering the bilinearly interpolated image times step.
/// Samples whose bilinear footprint leaves the grid only see the in-grid
/// neighbours.
class Projector {
 public:
  explicit Projector(ProjectorConfig cfg);

  const ProjectorConfig& config() const { return cfg_; }
  std::size_t image_len() const;
  std::size_t sino_len() const;

  /// sino = A * image
  void forward(std::span<const float> image, std::span<float> sino) const;
  /// image = A^T * sino
  void backward(std::span<const float> sino, std::span<float> image) const;
  /// Forward projection of a single angle's rows, A_a * image.
  void forward_angle(int angle, std::span<const float> image, std::span<float> row) const;
  /// Adds A_a^T * row into `image_acc`.
  void backward_angle_add(int angle, std::span<const float> row, std::span<double> image_acc) const;

 private:
  template <typename Visit>
  void trace(int angle, int bin, Visit&& visit) const;

  ProjectorConfig cfg_;
  std::vector<double> cos_, sin_;
};

Sinogram forward_project(const Image& img, const ProjectorConfig& cfg);
Image back_project(const Sinogram& s, const ProjectorConfig& cfg);

}  // namespace sinointerp
