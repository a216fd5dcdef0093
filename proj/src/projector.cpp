#include "sinointerp/projector.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace sinointerp {

void ProjectorConfig::validate() const {
  geometry.validate();
  if (!(sampling_step > 0.0 && sampling_step <= 1.0)) {
    throw Error(ErrorCode::BadGeometry, "sampling_step must be in (0, 1]");
  }
}

Projector::Projector(ProjectorConfig cfg) : cfg_(cfg) {
  cfg_.validate();
  const auto& g = cfg_.geometry;
  cos_.resize(g.n_angles);
  sin_.resize(g.n_angles);
  for (int a = 0; a < g.n_angles; ++a) {
    const double theta = g.angle_deg(a) * std::numbers::pi / 180.0;
    cos_[a] = std::cos(theta);
    sin_[a] = std::sin(theta);
  }
}

std::size_t Projector::image_len() const {
  return static_cast<std::size_t>(cfg_.geometry.image_size) * cfg_.geometry.image_size;
}

std::size_t Projector::sino_len() const {
  return static_cast<std::size_t>(cfg_.geometry.n_angles) * cfg_.geometry.n_detectors;
}

// Calls visit(pixel_index, weight) for every nonzero bilinear contribution
// along one ray. Forward and backward share this routine, which is what makes
// them exact transposes.
template <typename Visit>
void Projector::trace(int angle, int bin, Visit&& visit) const {
  const auto& g = cfg_.geometry;
  const int n = g.image_size;
  const double c = (n - 1) / 2.0;
  const double h = cfg_.sampling_step;
  const double ct = cos_[angle], st = sin_[angle];
  const double t = (bin - (g.n_detectors - 1) / 2.0) * g.detector_pitch;

  // x(s) = t*ct - s*st, y(s) = t*st + s*ct must stay in (-c-1, c+1).
  const double bound = c + 1.0;
  double smin = -std::numeric_limits<double>::infinity();
  double smax = std::numeric_limits<double>::infinity();
  auto clip = [&](double p0, double dp) {
    if (std::abs(dp) < 1e-12) {
      if (std::abs(p0) >= bound) smax = smin - 1.0;
      return;
    }
    double s0 = (-bound - p0) / dp;
    double s1 = (bound - p0) / dp;
    if (s0 > s1) std::swap(s0, s1);
    smin = std::max(smin, s0);
    smax = std::min(smax, s1);
  };
  clip(t * ct, -st);
  clip(t * st, ct);
  if (!(smax > smin)) return;

  const long j0 = static_cast<long>(std::ceil(smin / h));
  const long j1 = static_cast<long>(std::floor(smax / h));
  for (long j = j0; j <= j1; ++j) {
    const double s = static_cast<double>(j) * h;
    const double fx = t * ct - s * st + c;
    const double fy = t * st + s * ct + c;
    const double flx = std::floor(fx), fly = std::floor(fy);
    const int ix = static_cast<int>(flx), iy = static_cast<int>(fly);
    const double wx = fx - flx, wy = fy - fly;
    const bool x0 = ix >= 0 && ix < n, x1 = ix + 1 >= 0 && ix + 1 < n;
    const bool y0 = iy >= 0 && iy < n, y1 = iy + 1 >= 0 && iy + 1 < n;
    const std::size_t base = static_cast<std::size_t>(iy) * n + ix;
    if (y0) {
      if (x0) visit(base, (1.0 - wx) * (1.0 - wy) * h);
      if (x1) visit(base + 1, wx * (1.0 - wy) * h);
    }
    if (y1) {
      if (x0) visit(base + n, (1.0 - wx) * wy * h);
      if (x1) visit(base + n + 1, wx * wy * h);
    }
  }
}

void Projector::forward_angle(int angle, std::span<const float> image, std::span<float> row) const {
  for (int d = 0; d < cfg_.geometry.n_detectors; ++d) {
    double acc = 0.0;
    trace(angle, d, [&](std::size_t idx, double w) { acc += w * image[idx]; });
    row[d] = static_cast<float>(acc);
  }
}

void Projector::backward_angle_add(int angle, std::span<const float> row, std::span<double> image_acc) const {
  for (int d = 0; d < cfg_.geometry.n_detectors; ++d) {
    const double v = row[d];
    if (v == 0.0) continue;
    trace(angle, d, [&](std::size_t idx, double w) { image_acc[idx] += w * v; });
  }
}

void Projector::forward(std::span<const float> image, std::span<float> sino) const {
  if (image.size() != image_len() || sino.size() != sino_len()) {
    throw Error(ErrorCode::SizeMismatch, "forward projection buffer sizes do not match the geometry");
  }
  const int nd = cfg_.geometry.n_detectors;
  for (int a = 0; a < cfg_.geometry.n_angles; ++a) {
    forward_angle(a, image, sino.subspan(static_cast<std::size_t>(a) * nd, nd));
  }
}

void Projector::backward(std::span<const float> sino, std::span<float> image) const {
  if (image.size() != image_len() || sino.size() != sino_len()) {
    throw Error(ErrorCode::SizeMismatch, "backprojection buffer sizes do not match the geometry");
  }
  const int nd = cfg_.geometry.n_detectors;
  std::vector<double> acc(image.size(), 0.0);
  for (int a = 0; a < cfg_.geometry.n_angles; ++a) {
    backward_angle_add(a, sino.subspan(static_cast<std::size_t>(a) * nd, nd), acc);
  }
  std::transform(acc.begin(), acc.end(), image.begin(), [](double v) { return static_cast<float>(v); });
}

Sinogram forward_project(const Image& img, const ProjectorConfig& cfg) {
  if (img.size() != cfg.geometry.image_size) {
    throw Error(ErrorCode::SizeMismatch, "image is " + std::to_string(img.size()) + " px, geometry expects " +
                                             std::to_string(cfg.geometry.image_size));
  }
  Projector p(cfg);
  std::vector<float> out(p.sino_len());
  p.forward(img.data(), out);
  return Sinogram(cfg.geometry, std::move(out));
}

Image back_project(const Sinogram& s, const ProjectorConfig& cfg) {
  if (s.rows() != cfg.geometry.n_angles || s.cols() != cfg.geometry.n_detectors) {
    throw Error(ErrorCode::SizeMismatch, "sinogram shape does not match the projector geometry");
  }
  Projector p(cfg);
  std::vector<float> out(p.image_len());
  p.backward(s.data(), out);
  return Image(cfg.geometry.image_size, std::move(out));
}

}  // namespace sinointerp
