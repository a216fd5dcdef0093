#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "sinointerp/neural/layers.hpp"
#include "sinointerp/rng.hpp"

namespace gradcheck {

using sinointerp::nn::Tensor;

/// ||analytic - numeric|| / max(||analytic||, ||numeric||), 0 when both vanish.
inline double relative_error(const std::vector<double>& analytic, const std::vector<double>& numeric) {
  double diff = 0.0, na = 0.0, nn = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    diff += (analytic[i] - numeric[i]) * (analytic[i] - numeric[i]);
    na += analytic[i] * analytic[i];
    nn += numeric[i] * numeric[i];
  }
  const double scale = std::sqrt(std::max(na, nn));
  return scale == 0.0 ? 0.0 : std::sqrt(diff) / scale;
}

/// Central differences of a scalar function over every entry of `v`.
inline std::vector<double> numeric_gradient(std::vector<double>& v, const std::function<double()>& f, double h) {
  std::vector<double> g(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double keep = v[i];
    v[i] = keep + h;
    const double up = f();
    v[i] = keep - h;
    const double down = f();
    v[i] = keep;
    g[i] = (up - down) / (2 * h);
  }
  return g;
}

inline double weighted_sum(const Tensor<double>& y, const Tensor<double>& u) {
  double acc = 0.0;
  for (std::size_t i = 0; i < y.values.size(); ++i) acc += y.values[i] * u.values[i];
  return acc;
}

inline void fill_uniform(std::vector<double>& v, sinointerp::XorShift64Star& rng, double lo = -1.0, double hi = 1.0) {
  for (auto& x : v) x = rng.uniform(lo, hi);
}

struct LayerCheck {
  double input = 0.0, weight = 0.0, bias = 0.0;
  double worst() const { return std::max({input, weight, bias}); }
};

/// Checks conv_backward of `layer` at a random input against central
/// differences of L = sum(u * forward(x)).
inline LayerCheck check_layer(sinointerp::nn::ConvLayer<double> layer, Tensor<double> x, std::uint64_t seed,
                              double h = 1e-4) {
  sinointerp::XorShift64Star rng(seed);
  const Tensor<double> y0 = layer.forward(x);
  Tensor<double> u(y0.n, y0.c, y0.h, y0.w);
  fill_uniform(u.values, rng);
  const auto grads = sinointerp::nn::conv_backward(x, layer, u);
  auto loss = [&] { return weighted_sum(layer.forward(x), u); };
  LayerCheck r;
  r.input = relative_error(grads.input.values, numeric_gradient(x.values, loss, h));
  r.weight = relative_error(grads.weight, numeric_gradient(layer.weights, loss, h));
  r.bias = relative_error(grads.bias, numeric_gradient(layer.bias, loss, h));
  return r;
}

/// Random layer hyper-parameters and input of a valid shape.
struct RandomCase {
  sinointerp::nn::LayerSpec spec;
  Tensor<double> x;
  sinointerp::nn::ConvLayer<double> layer;
  std::string describe() const;
};

inline RandomCase random_case(std::uint64_t seed, sinointerp::nn::LayerKind kind) {
  using namespace sinointerp::nn;
  sinointerp::XorShift64Star rng(seed);
  LayerSpec s;
  s.kind = kind;
  s.dims = rng.below(4) == 0 ? 2 : 1;
  s.in_ch = 1 + static_cast<int>(rng.below(3));
  s.out_ch = 1 + static_cast<int>(rng.below(3));
  const int shapes[][3] = {{3, 1, 1}, {4, 2, 1}, {1, 1, 0}, {5, 1, 2}, {3, 2, 1}, {2, 2, 0}};
  const auto& pick = shapes[rng.below(6)];
  s.kernel = pick[0];
  s.stride = pick[1];
  s.padding = pick[2];
  s.act = rng.below(3) == 0 ? Activation::None : Activation::LeakyRelu;
  const int len = s.dims == 2 ? 4 + static_cast<int>(rng.below(3)) : 6 + static_cast<int>(rng.below(11));
  const int batch = 1 + static_cast<int>(rng.below(2));
  Tensor<double> x(batch, s.in_ch, s.dims == 2 ? len : 1, len);
  fill_uniform(x.values, rng);
  ConvLayer<double> layer(s);
  fill_uniform(layer.weights, rng, -0.5, 0.5);
  fill_uniform(layer.bias, rng, -0.2, 0.2);
  if (s.act == Activation::LeakyRelu) {
    // Redraw the input until no pre-activation sits within 1e-3 of the kink,
    // where central differences with h = 1e-4 are not defined.
    LayerSpec linear = s;
    linear.act = Activation::None;
    ConvLayer<double> pre(linear);
    pre.weights = layer.weights;
    pre.bias = layer.bias;
    for (int attempt = 0; attempt < 1000; ++attempt) {
      const auto z = pre.forward(x);
      if (std::all_of(z.values.begin(), z.values.end(), [](double v) { return std::abs(v) > 1e-3; })) break;
      fill_uniform(x.values, rng);
    }
  }
  return {s, std::move(x), std::move(layer)};
}

inline std::string RandomCase::describe() const {
  return std::string(spec.kind == sinointerp::nn::LayerKind::Conv ? "C" : "CT") + "(" + std::to_string(spec.in_ch) +
         "," + std::to_string(spec.out_ch) + "," + std::to_string(spec.kernel) + "," + std::to_string(spec.stride) +
         "," + std::to_string(spec.padding) + ")" + (spec.dims == 2 ? " 2d" : " 1d") +
         (spec.act == sinointerp::nn::Activation::None ? "" : " lrelu") + " on " + sinointerp::nn::shape_string(x);
}

/// LeakyReLU as a stand-alone map.
inline double check_leaky(std::uint64_t seed, double h = 1e-4) {
  sinointerp::XorShift64Star rng(seed);
  Tensor<double> x = Tensor<double>::make1d(2, 3, 7);
  // keep away from the kink so central differences are well defined
  for (auto& v : x.values) v = (rng.below(2) ? 1.0 : -1.0) * rng.uniform(0.01, 1.0);
  Tensor<double> u(x.n, x.c, x.h, x.w);
  fill_uniform(u.values, rng);
  const auto g = sinointerp::nn::leaky_relu_backward(x, u);
  auto loss = [&] { return weighted_sum(sinointerp::nn::leaky_relu(x), u); };
  return relative_error(g.values, numeric_gradient(x.values, loss, h));
}

inline double check_mse(std::uint64_t seed, double h = 1e-4) {
  sinointerp::XorShift64Star rng(seed);
  Tensor<double> a = Tensor<double>::make1d(2, 1 + static_cast<int>(rng.below(2)), 5 + static_cast<int>(rng.below(8)));
  Tensor<double> b(a.n, a.c, a.h, a.w);
  fill_uniform(a.values, rng);
  fill_uniform(b.values, rng);
  const auto g = sinointerp::nn::mse_grad(a, b);
  auto loss = [&] { return sinointerp::nn::mse(a, b); };
  return relative_error(g.values, numeric_gradient(a.values, loss, h));
}

}  // namespace gradcheck
