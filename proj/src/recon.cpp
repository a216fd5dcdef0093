#include "sinointerp/recon.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace sinointerp {
namespace {

void check_shapes(const Sinogram& s, const ProjectorConfig& cfg) {
  if (s.rows() != cfg.geometry.n_angles || s.cols() != cfg.geometry.n_detectors) {
    throw Error(ErrorCode::SizeMismatch, "sinogram is " + std::to_string(s.rows()) + "x" + std::to_string(s.cols()) +
                                             ", geometry expects " + std::to_string(cfg.geometry.n_angles) + "x" +
                                             std::to_string(cfg.geometry.n_detectors));
  }
}

double reciprocal(double v) { return v > 1e-12 ? 1.0 / v : 0.0; }

double l2(std::span<const float> b, std::span<const float> ax) {
  double acc = 0.0;
  for (std::size_t i = 0; i < b.size(); ++i) {
    const double r = static_cast<double>(b[i]) - ax[i];
    acc += r * r;
  }
  return std::sqrt(acc);
}

}  // namespace

void ReconConfig::validate() const {
  if (iterations < 1) throw Error(ErrorCode::BadSpec, "iterations must be >= 1");
  if (!(relaxation > 0.0 && relaxation < 2.0)) throw Error(ErrorCode::BadSpec, "relaxation must be in (0, 2)");
}

Image sirt(const Sinogram& s, const ProjectorConfig& cfg, const ReconConfig& rc, std::vector<double>* residuals) {
  check_shapes(s, cfg);
  rc.validate();
  const Projector proj(cfg);
  const std::size_t ni = proj.image_len(), ns = proj.sino_len();

  std::vector<float> row_w(ns), col_w(ni);
  {
    std::vector<float> ones_img(ni, 1.0f), ones_sino(ns, 1.0f);
    proj.forward(ones_img, row_w);
    proj.backward(ones_sino, col_w);
    for (auto& v : row_w) v = static_cast<float>(reciprocal(v));
    for (auto& v : col_w) v = static_cast<float>(reciprocal(v));
  }

  const auto& b = s.data();
  std::vector<float> x(ni, 0.0f), ax(ns), r(ns), upd(ni);
  if (residuals) residuals->clear();
  for (int it = 0; it < rc.iterations; ++it) {
    proj.forward(x, ax);
    if (residuals) residuals->push_back(l2(b, ax));
    for (std::size_t i = 0; i < ns; ++i) r[i] = (b[i] - ax[i]) * row_w[i];
    proj.backward(r, upd);
    for (std::size_t i = 0; i < ni; ++i) {
      x[i] += static_cast<float>(rc.relaxation * col_w[i] * upd[i]);
      if (rc.nonneg_clamp && x[i] < 0.0f) x[i] = 0.0f;
    }
  }
  if (residuals) {
    proj.forward(x, ax);
    residuals->push_back(l2(b, ax));
  }
  return Image(cfg.geometry.image_size, std::move(x));
}

Image sart(const Sinogram& s, const ProjectorConfig& cfg, const ReconConfig& rc) {
  check_shapes(s, cfg);
  rc.validate();
  const Projector proj(cfg);
  const std::size_t ni = proj.image_len();
  const int nd = cfg.geometry.n_detectors;

  // Per-angle row sums are cheap to keep; per-angle column sums are recomputed
  // on each visit to avoid an n_angles x N^2 table.
  std::vector<float> row_w(proj.sino_len());
  {
    std::vector<float> ones_img(ni, 1.0f);
    proj.forward(ones_img, row_w);
    for (auto& v : row_w) v = static_cast<float>(reciprocal(v));
  }
  const std::vector<float> ones_row(nd, 1.0f);

  std::vector<float> x(ni, 0.0f), ax(nd), r(nd);
  std::vector<double> upd(ni), colsum(ni);
  for (int it = 0; it < rc.iterations; ++it) {
    for (int a = 0; a < cfg.geometry.n_angles; ++a) {
      const auto b = s.row(a);
      proj.forward_angle(a, x, ax);
      for (int d = 0; d < nd; ++d) r[d] = (b[d] - ax[d]) * row_w[static_cast<std::size_t>(a) * nd + d];
      std::fill(upd.begin(), upd.end(), 0.0);
      std::fill(colsum.begin(), colsum.end(), 0.0);
      proj.backward_angle_add(a, r, upd);
      proj.backward_angle_add(a, ones_row, colsum);
      for (std::size_t i = 0; i < ni; ++i) {
        if (colsum[i] <= 1e-12) continue;
        x[i] += static_cast<float>(rc.relaxation * upd[i] / colsum[i]);
        if (rc.nonneg_clamp && x[i] < 0.0f) x[i] = 0.0f;
      }
    }
  }
  return Image(cfg.geometry.image_size, std::move(x));
}

double residual_norm(const Sinogram& b, const Image& x, const ProjectorConfig& cfg) {
  check_shapes(b, cfg);
  const Projector proj(cfg);
  std::vector<float> ax(proj.sino_len());
  proj.forward(x.data(), ax);
  return l2(b.data(), ax);
}

}  // namespace sinointerp
