#pragma once

#include <vector>

#include "sinointerp/core.hpp"
#include "sinointerp/projector.hpp"

namespace sinointerp {

struct ReconConfig {
  int iterations = 10;
  double relaxation = 1.0;  // in (0, 2)
  bool nonneg_clamp = false;

  void validate() const;
};

/// SIRT from x0 = 0: x += lambda * C * A^T * W * (b - A x), W and C being the
/// reciprocal row and column sums of A (zero sums map to zero). If
/// `residuals` is given it receives ||b - A x_k|| for k = 0..iterations.
Image sirt(const Sinogram& s, const ProjectorConfig& cfg, const ReconConfig& rc,
           std::vector<double>* residuals = nullptr);

/// SART: the SIRT update restricted to one angle at a time, angles swept in
/// ascending order every iteration.
Image sart(const Sinogram& s, const ProjectorConfig& cfg, const ReconConfig& rc);

/// ||b - A x||_2
double residual_norm(const Sinogram& b, const Image& x, const ProjectorConfig& cfg);

}  // namespace sinointerp
