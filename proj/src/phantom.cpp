#include "sinointerp/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "sinointerp/rng.hpp"

namespace sinointerp {

Image generate_phantom(const PhantomSpec& spec) {
  if (spec.size < 32) throw Error(ErrorCode::BadSpec, "phantom size must be >= 32, got " + std::to_string(spec.size));
  if (spec.n_ellipses < 3 || spec.n_ellipses > 12) {
    throw Error(ErrorCode::BadSpec, "n_ellipses must be in [3, 12], got " + std::to_string(spec.n_ellipses));
  }
  if (!(spec.intensity_min >= 0.1 && spec.intensity_max <= 1.0 && spec.intensity_min <= spec.intensity_max)) {
    throw Error(ErrorCode::BadSpec, "intensity range must lie within [0.1, 1.0]");
  }

  const int n = spec.size;
  const double centre = (n - 1) / 2.0;
  const double radius = n / 2.0 - 1.0;
  XorShift64Star rng(spec.seed);
  std::vector<double> acc(static_cast<std::size_t>(n) * n, 0.0);

  for (int e = 0; e < spec.n_ellipses; ++e) {
    const bool body = e == 0;
    const double lo = body ? 0.55 : 0.05;
    const double hi = body ? 0.85 : 0.30;
    const double a = radius * rng.uniform(lo, hi);
    const double b = radius * rng.uniform(lo, hi);
    const double phi = rng.uniform(0.0, std::numbers::pi);
    const double reach = radius - std::max(a, b);
    const double cr = reach * std::sqrt(rng.uniform());
    const double ca = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double value = rng.uniform(spec.intensity_min, spec.intensity_max);
    const double cx = cr * std::cos(ca);
    const double cy = cr * std::sin(ca);
    const double c = std::cos(phi), s = std::sin(phi);

    for (int row = 0; row < n; ++row) {
      const double y = row - centre - cy;
      for (int col = 0; col < n; ++col) {
        const double x = col - centre - cx;
        const double u = (c * x + s * y) / a;
        const double v = (-s * x + c * y) / b;
        if (u * u + v * v <= 1.0) acc[static_cast<std::size_t>(row) * n + col] += value;
      }
    }
  }

  std::vector<float> data(acc.size());
  std::transform(acc.begin(), acc.end(), data.begin(), [](double v) { return static_cast<float>(std::max(v, 0.0)); });
  return Image(n, std::move(data));
}

PhantomSpec phantom_spec_for(std::uint64_t run_seed, int index, int size) {
  const std::uint64_t seed = splitmix64(run_seed * 0x100000001B3ULL + static_cast<std::uint64_t>(index));
  PhantomSpec spec;
  spec.seed = seed;
  spec.n_ellipses = 3 + static_cast<int>(splitmix64(seed) % 10);
  spec.size = size;
  return spec;
}

}  // namespace sinointerp
