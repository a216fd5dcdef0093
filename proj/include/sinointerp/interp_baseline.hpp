#pragma once

#include "sinointerp/core.hpp"

namespace sinointerp {

// All three return (M-1)*R+1 rows and reproduce the scarce rows exactly at
// dense indices 0, R, 2R, ... The dense geometry keeps angle_start and
// divides angle_step by R.

/// Row at offset k from reference i: (1 - k/R) * A_i + (k/R) * A_{i+R}.
Sinogram linear_interpolate(const Sinogram& scarce, int ratio);

/// Copies the angularly closest reference; the tie at k = R/2 goes to the
/// lower index. R = 1 is the identity.
Sinogram nearest_upsample(const Sinogram& scarce, int ratio);

/// Image resize of the angular axis with align-corners bilinear weights,
/// treating the sinogram as a 2D image (the detector axis maps 1:1).
Sinogram bilinear_upsample(const Sinogram& scarce, int ratio);

/// Geometry of the dense sinogram obtained by up-sampling `scarce` by R.
ScanGeometry dense_geometry(const ScanGeometry& scarce, int ratio);

}  // namespace sinointerp
