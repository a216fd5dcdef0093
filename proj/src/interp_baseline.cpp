#include "sinointerp/interp_baseline.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace sinointerp {
namespace {

void require_rows(const Sinogram& s) {
  if (s.rows() < 2) throw Error(ErrorCode::ShapeMismatch, "need at least 2 reference rows");
}

}  // namespace

ScanGeometry dense_geometry(const ScanGeometry& scarce, int ratio) {
  ScanGeometry g = scarce;
  g.n_angles = (scarce.n_angles - 1) * ratio + 1;
  g.angle_step_deg = scarce.angle_step_deg / ratio;
  return g;
}

Sinogram linear_interpolate(const Sinogram& scarce, int ratio) {
  const InterpolationPlan plan(ratio);
  require_rows(scarce);
  const ScanGeometry g = dense_geometry(scarce.geometry(), ratio);
  const int nd = scarce.cols();
  std::vector<float> out(static_cast<std::size_t>(g.n_angles) * nd);
  for (int i = 0; i + 1 < scarce.rows(); ++i) {
    const auto lo = scarce.row(i), hi = scarce.row(i + 1);
    for (int k = 0; k < ratio; ++k) {
      float* dst = out.data() + static_cast<std::size_t>(i * ratio + k) * nd;
      if (k == 0) {
        std::copy(lo.begin(), lo.end(), dst);
        continue;
      }
      const double w = plan.weight(k);
      for (int d = 0; d < nd; ++d) dst[d] = static_cast<float>(w * lo[d] + (1.0 - w) * hi[d]);
    }
  }
  const auto last = scarce.row(scarce.rows() - 1);
  std::copy(last.begin(), last.end(), out.end() - nd);
  return Sinogram(g, std::move(out), scarce.norm());
}

Sinogram nearest_upsample(const Sinogram& scarce, int ratio) {
  if (ratio == 1) return scarce;
  const InterpolationPlan plan(ratio);
  require_rows(scarce);
  const ScanGeometry g = dense_geometry(scarce.geometry(), ratio);
  const int nd = scarce.cols();
  std::vector<float> out(static_cast<std::size_t>(g.n_angles) * nd);
  for (int j = 0; j < g.n_angles; ++j) {
    const int i = j / ratio;
    const int k = j % ratio;
    const int src = (2 * k <= ratio) ? i : i + 1;
    const auto r = scarce.row(src);
    std::copy(r.begin(), r.end(), out.begin() + static_cast<std::ptrdiff_t>(j) * nd);
  }
  return Sinogram(g, std::move(out), scarce.norm());
}

Sinogram bilinear_upsample(const Sinogram& scarce, int ratio) {
  const InterpolationPlan plan(ratio);
  require_rows(scarce);
  const ScanGeometry g = dense_geometry(scarce.geometry(), ratio);
  const int in_h = scarce.rows(), in_w = scarce.cols();
  const int out_h = g.n_angles, out_w = in_w;
  // Align-corners source coordinate: y_in = y_out * (in_h - 1) / (out_h - 1),
  // computed from integers so reference rows land exactly on the grid.
  std::vector<float> out(static_cast<std::size_t>(out_h) * out_w);
  for (int y = 0; y < out_h; ++y) {
    const double fy = static_cast<double>(static_cast<long>(y) * (in_h - 1)) / (out_h - 1);
    const int y0 = std::min(static_cast<int>(std::floor(fy)), in_h - 1);
    const int y1 = std::min(y0 + 1, in_h - 1);
    const double wy = fy - y0;
    for (int x = 0; x < out_w; ++x) {
      const double fx = out_w > 1 ? static_cast<double>(static_cast<long>(x) * (in_w - 1)) / (out_w - 1) : 0.0;
      const int x0 = std::min(static_cast<int>(std::floor(fx)), in_w - 1);
      const int x1 = std::min(x0 + 1, in_w - 1);
      const double wx = fx - x0;
      const double top = (1.0 - wx) * scarce.at(y0, x0) + wx * scarce.at(y0, x1);
      const double bot = (1.0 - wx) * scarce.at(y1, x0) + wx * scarce.at(y1, x1);
      out[static_cast<std::size_t>(y) * out_w + x] = static_cast<float>((1.0 - wy) * top + wy * bot);
    }
  }
  return Sinogram(g, std::move(out), scarce.norm());
}

}  // namespace sinointerp
