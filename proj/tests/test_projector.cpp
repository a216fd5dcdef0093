#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "sinointerp/phantom.hpp"
#include "sinointerp/projector.hpp"
#include "support.hpp"

using namespace sinointerp;
using testing_support::random_values;
using testing_support::small_geometry;

namespace {

// Uniform disk rasterized by pixel-area coverage (8x8 sub-samples per pixel).
Image disk(int size, double radius) {
  constexpr int kSub = 8;
  std::vector<float> v(static_cast<std::size_t>(size) * size);
  const double c = (size - 1) / 2.0;
  for (int r = 0; r < size; ++r) {
    for (int col = 0; col < size; ++col) {
      int inside = 0;
      for (int i = 0; i < kSub; ++i) {
        for (int j = 0; j < kSub; ++j) {
          const double y = r - 0.5 + (i + 0.5) / kSub, x = col - 0.5 + (j + 0.5) / kSub;
          inside += std::hypot(y - c, x - c) <= radius;
        }
      }
      v[static_cast<std::size_t>(r) * size + col] = static_cast<float>(inside) / (kSub * kSub);
    }
  }
  return Image(size, std::move(v));
}

double dot(std::span<const float> a, std::span<const float> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += static_cast<double>(a[i]) * b[i];
  return acc;
}

double norm2(std::span<const float> a) { return std::sqrt(dot(a, a)); }

}  // namespace

TEST(Projector, ZeroInZeroOut) {
  const ProjectorConfig cfg{small_geometry(16, 32, 32)};
  const auto s = forward_project(Image::zeros(32), cfg);
  for (float v : s.data()) EXPECT_EQ(v, 0.0f);
  const auto img = back_project(Sinogram(cfg.geometry, std::vector<float>(16u * 32u, 0.0f)), cfg);
  for (float v : img.data()) EXPECT_EQ(v, 0.0f);
}

TEST(Projector, SizeMismatch) {
  const ProjectorConfig cfg{small_geometry(16, 32, 32)};
  try {
    forward_project(Image::zeros(33), cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SizeMismatch);
  }
  EXPECT_THROW(back_project(Sinogram(small_geometry(16, 31, 32), std::vector<float>(16u * 31u, 0.0f)), cfg), Error);
}

TEST(Projector, SamplingStepRange) {
  EXPECT_THROW(Projector({small_geometry(4, 8, 8), 0.0}), Error);
  EXPECT_THROW(Projector({small_geometry(4, 8, 8), 1.5}), Error);
  EXPECT_NO_THROW(Projector({small_geometry(4, 8, 8), 1.0}));
}

TEST(Projector, DiskCentralChordIsDiameter) {
  const double r = 20.0;
  const ProjectorConfig cfg{small_geometry(64, 65, 64)};
  const auto s = forward_project(disk(64, r), cfg);
  for (int a = 0; a < s.rows(); ++a) {
    // central bin sits on the grid centre for an odd bin count
    EXPECT_NEAR(s.at(a, 32), 2 * r, 0.02 * 2 * r) << "angle " << a;
  }
}

TEST(Projector, DiskRowsAreAngleIndependent) {
  // bilinear edge spill is about one pixel-length whatever the radius, so the
  // disk must be large enough for that to stay under 2% of the peak
  const ProjectorConfig cfg{small_geometry(90, 128, 128)};
  const auto s = forward_project(disk(128, 48.0), cfg);
  double peak = 0.0, worst = 0.0;
  for (float v : s.data()) peak = std::max(peak, static_cast<double>(v));
  for (int a = 1; a < s.rows(); ++a) {
    for (int d = 0; d < s.cols(); ++d) worst = std::max(worst, std::abs(double(s.at(a, d)) - s.at(0, d)));
  }
  EXPECT_LT(worst, 0.02 * peak);
}

TEST(Projector, CentrePixelOnlyHitsCentralBins) {
  const int n = 33;
  std::vector<float> v(static_cast<std::size_t>(n) * n, 0.0f);
  v[static_cast<std::size_t>(16) * n + 16] = 1.0f;
  const ProjectorConfig cfg{small_geometry(36, 33, n)};
  const auto s = forward_project(Image(n, v), cfg);
  for (int a = 0; a < s.rows(); ++a) {
    EXPECT_GT(s.at(a, 16), 0.0f);
    for (int d = 0; d < s.cols(); ++d) {
      if (std::abs(d - 16) > 2) EXPECT_NEAR(s.at(a, d), 0.0f, 1e-7);
    }
  }
}

TEST(Projector, AdjointIdentity) {
  const ProjectorConfig cfg{small_geometry(64, 64, 64)};
  const Projector p(cfg);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto x = random_values(p.image_len(), 100 + seed);
    const auto y = random_values(p.sino_len(), 200 + seed);
    std::vector<float> ax(p.sino_len()), aty(p.image_len());
    p.forward(x, ax);
    p.backward(y, aty);
    const double rel = std::abs(dot(ax, y) - dot(x, aty)) / (norm2(ax) * norm2(y));
    EXPECT_LT(rel, 1e-5) << "seed " << seed;
  }
}

TEST(Projector, OneHotSinogramSmearsAlongItsRay) {
  const int n = 48;
  const ProjectorConfig cfg{small_geometry(8, 48, n)};
  const Projector p(cfg);
  const int angle = 3, bin = 30;
  std::vector<float> y(p.sino_len(), 0.0f);
  y[static_cast<std::size_t>(angle) * 48 + bin] = 1.0f;
  std::vector<float> img(p.image_len());
  p.backward(y, img);
  const double th = cfg.geometry.angle_deg(angle) * std::numbers::pi / 180.0;
  const double t = bin - (48 - 1) / 2.0;
  const double c = (n - 1) / 2.0;
  int nonzero = 0;
  for (int r = 0; r < n; ++r) {
    for (int col = 0; col < n; ++col) {
      if (img[static_cast<std::size_t>(r) * n + col] == 0.0f) continue;
      ++nonzero;
      const double dist = std::abs((col - c) * std::cos(th) + (r - c) * std::sin(th) - t);
      EXPECT_LT(dist, std::sqrt(2.0)) << r << "," << col;
    }
  }
  EXPECT_GT(nonzero, n / 2);
}

TEST(Projector, Linearity) {
  const ProjectorConfig cfg{small_geometry(32, 48, 48)};
  const Projector p(cfg);
  const auto x = random_values(p.image_len(), 1), y = random_values(p.image_len(), 2);
  const float alpha = 1.7f, beta = -0.6f;
  std::vector<float> mix(p.image_len());
  for (std::size_t i = 0; i < mix.size(); ++i) mix[i] = alpha * x[i] + beta * y[i];
  std::vector<float> ax(p.sino_len()), ay(p.sino_len()), am(p.sino_len());
  p.forward(x, ax);
  p.forward(y, ay);
  p.forward(mix, am);
  std::vector<float> combo(p.sino_len());
  for (std::size_t i = 0; i < combo.size(); ++i) combo[i] = alpha * ax[i] + beta * ay[i];
  double diff = 0.0;
  for (std::size_t i = 0; i < combo.size(); ++i) diff += (double(am[i]) - combo[i]) * (double(am[i]) - combo[i]);
  EXPECT_LT(std::sqrt(diff), 1e-6 * norm2(combo));
}

TEST(Projector, PerAngleOpsAgreeWithFullOps) {
  const ProjectorConfig cfg{small_geometry(12, 40, 32)};
  const Projector p(cfg);
  const auto x = random_values(p.image_len(), 8);
  std::vector<float> full(p.sino_len());
  p.forward(x, full);
  std::vector<float> row(40);
  for (int a = 0; a < 12; ++a) {
    p.forward_angle(a, x, row);
    for (int d = 0; d < 40; ++d) ASSERT_EQ(row[d], full[static_cast<std::size_t>(a) * 40 + d]);
  }
}

TEST(Projector, Deterministic) {
  const ProjectorConfig cfg{small_geometry(20, 64, 64)};
  const Image img = generate_phantom({3, 5, 0.1, 1.0, 64});
  EXPECT_EQ(forward_project(img, cfg).data(), forward_project(img, cfg).data());
  const auto s = forward_project(img, cfg);
  EXPECT_EQ(back_project(s, cfg).data(), back_project(s, cfg).data());
}
