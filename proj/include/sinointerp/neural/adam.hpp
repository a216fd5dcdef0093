#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "sinointerp/error.hpp"

namespace sinointerp::nn {

struct AdamState {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  long step = 0;
  std::vector<std::vector<double>> first;   // one moment array per parameter block
  std::vector<std::vector<double>> second;
};

/// Bias-corrected Adam, in place:
///   m = b1 m + (1-b1) g;  v = b2 v + (1-b2) g^2
///   p -= lr * (m / (1-b1^t)) / (sqrt(v / (1-b2^t)) + eps)
/// Moment arrays are created on the first call and must keep their shapes.
template <typename T>
void adam_step(std::span<const std::span<T>> params, std::span<const std::span<const T>> grads, AdamState& st) {
  if (params.size() != grads.size()) throw Error(ErrorCode::ShapeMismatch, "adam: parameter/gradient block count");
  if (st.first.empty()) {
    for (const auto& p : params) {
      st.first.emplace_back(p.size(), 0.0);
      st.second.emplace_back(p.size(), 0.0);
    }
  }
  if (st.first.size() != params.size()) throw Error(ErrorCode::ShapeMismatch, "adam: state has different block count");
  ++st.step;
  const double c1 = 1.0 - std::pow(st.beta1, static_cast<double>(st.step));
  const double c2 = 1.0 - std::pow(st.beta2, static_cast<double>(st.step));
  for (std::size_t b = 0; b < params.size(); ++b) {
    auto p = params[b];
    auto g = grads[b];
    auto& m = st.first[b];
    auto& v = st.second[b];
    if (p.size() != g.size() || p.size() != m.size()) {
      throw Error(ErrorCode::ShapeMismatch, "adam: block size mismatch");
    }
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double gi = g[i];
      m[i] = st.beta1 * m[i] + (1.0 - st.beta1) * gi;
      v[i] = st.beta2 * v[i] + (1.0 - st.beta2) * gi * gi;
      const double mh = m[i] / c1;
      const double vh = v[i] / c2;
      p[i] = static_cast<T>(p[i] - st.learning_rate * mh / (std::sqrt(vh) + st.epsilon));
    }
  }
}

}  // namespace sinointerp::nn
