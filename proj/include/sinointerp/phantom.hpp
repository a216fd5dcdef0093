#pragma once

#include <cstdint>

#include "sinointerp/core.hpp"

namespace sinointerp {

struct PhantomSpec {
  std::uint64_t seed = 1;
  int n_ellipses = 6;  // in [3, 12]
  double intensity_min = 0.1;
  double intensity_max = 1.0;
  int size = 256;  // >= 32
};

/// Additive superposition of rotated ellipses drawn from XorShift64Star(seed).
///
/// The first ellipse is a large "body" (semi-axes 0.55..0.85 of the usable
/// radius); the rest are smaller inclusions. For each ellipse the draws are,
/// in order: semi-axis a, semi-axis b, rotation, centre radius, centre angle,
/// intensity. Every ellipse fits inside the circle of radius size/2 - 1
/// around the grid centre.
Image generate_phantom(const PhantomSpec& spec);

/// Per-sample phantom spec derived from a run seed, so datasets can be
/// regenerated from (seed, index) alone.
PhantomSpec phantom_spec_for(std::uint64_t run_seed, int index, int size);

}  // namespace sinointerp
