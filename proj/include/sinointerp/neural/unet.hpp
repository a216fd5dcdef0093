#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "sinointerp/neural/layers.hpp"
#include "sinointerp/rng.hpp"

namespace sinointerp::nn {

/// Encoder-decoder with skip connections.
///
///   C(in, w0, 3) - C(w0, w0, 3)
///   D_{w(i-1), w(i)} for i = 1..depth, D = C(m, m, 4, 2, 1) - C(m, n, 3) - C(n, n, 3)
///   U_{w(i), w(i-1)} for i = depth..1, U = CT(m, m, 4, 2, 1) - C(m, n, 3) - C(2n, n, 3)
///   C(w0, 2, 3) - C(2 + in, 1, 3)
///
/// with w(i) = min(base_width * 2^i, width_cap). The last layer of each U
/// sees its own features concatenated with the matching encoder level; the
/// final layer sees C(w0, 2, 3)'s output concatenated with the raw network
/// input. Every layer ends with LeakyReLU(0.1).
struct UNetConfig {
  int in_channels = 2;
  int depth = 4;
  int base_width = 8;
  int width_cap = 128;
  int dims = 1;

  void validate() const {
    if (in_channels < 1 || depth < 1 || base_width < 1 || width_cap < base_width || (dims != 1 && dims != 2)) {
      throw Error(ErrorCode::BadWidths, "invalid U-net widths: in=" + std::to_string(in_channels) +
                                            " depth=" + std::to_string(depth) + " base=" + std::to_string(base_width) +
                                            " cap=" + std::to_string(width_cap));
    }
  }

  int width(int level) const {
    long w = base_width;
    for (int i = 0; i < level; ++i) w = std::min<long>(w * 2, width_cap);
    return static_cast<int>(w);
  }

  int length_divisor() const { return 1 << depth; }
  bool operator==(const UNetConfig&) const = default;
};

template <typename T>
class UNet {
 public:
  explicit UNet(UNetConfig cfg) : cfg_(cfg) {
    cfg_.validate();
    const int d = cfg_.dims;
    add(conv_spec(cfg_.in_channels, cfg_.width(0), 3, 1, 1, d));
    add(conv_spec(cfg_.width(0), cfg_.width(0), 3, 1, 1, d));
    for (int i = 1; i <= cfg_.depth; ++i) {
      const int m = cfg_.width(i - 1), n = cfg_.width(i);
      add(conv_spec(m, m, 4, 2, 1, d));
      add(conv_spec(m, n, 3, 1, 1, d));
      add(conv_spec(n, n, 3, 1, 1, d));
    }
    for (int i = cfg_.depth; i >= 1; --i) {
      const int m = cfg_.width(i), n = cfg_.width(i - 1);
      add(transposed_spec(m, m, 4, 2, 1, d));
      add(conv_spec(m, n, 3, 1, 1, d));
      add(conv_spec(2 * n, n, 3, 1, 1, d));
    }
    add(conv_spec(cfg_.width(0), 2, 3, 1, 1, d));
    add(conv_spec(2 + cfg_.in_channels, 1, 3, 1, 1, d));
  }

  const UNetConfig& config() const { return cfg_; }
  std::vector<ConvLayer<T>>& layers() { return layers_; }
  const std::vector<ConvLayer<T>>& layers() const { return layers_; }

  std::vector<LayerSpec> topology() const {
    std::vector<LayerSpec> out;
    for (const auto& l : layers_) out.push_back(l.spec());
    return out;
  }

  /// Input channels followed by the output width of every encoder stage.
  std::vector<int> encoder_channels() const {
    std::vector<int> ch{cfg_.in_channels, layers_[0].spec().out_ch, layers_[1].spec().out_ch};
    for (int i = 1; i <= cfg_.depth; ++i) ch.push_back(layers_[down(i) + 2].spec().out_ch);
    return ch;
  }

  /// Output width of every decoder stage, then the two output layers.
  std::vector<int> decoder_channels() const {
    std::vector<int> ch;
    for (int i = cfg_.depth; i >= 1; --i) ch.push_back(layers_[up(i) + 2].spec().out_ch);
    ch.push_back(layers_[final0()].spec().out_ch);
    ch.push_back(layers_[final1()].spec().out_ch);
    return ch;
  }

  void check_input(const Tensor<T>& x) const {
    if (x.c != cfg_.in_channels) {
      throw Error(ErrorCode::ShapeMismatch, "network expects " + std::to_string(cfg_.in_channels) +
                                                " input channels, got " + shape_string(x));
    }
    const int div = cfg_.length_divisor();
    if (x.w % div != 0 || (cfg_.dims == 2 && x.h % div != 0) || x.w < div) {
      throw Error(ErrorCode::LengthNotDivisible, "input " + shape_string(x) + " not divisible by 2^" +
                                                     std::to_string(cfg_.depth) + " = " + std::to_string(div));
    }
  }

  /// Uniform(-b, b) with b = sqrt(1 / (fan_in)), fan_in = in_ch * kernel
  /// area; weights then bias, layer by layer, from one XorShift64Star stream.
  void initialize(std::uint64_t seed) {
    XorShift64Star rng(seed);
    for (auto& l : layers_) {
      const double b = std::sqrt(1.0 / static_cast<double>(l.spec().in_ch * l.spec().kernel_area()));
      for (auto& v : l.weights) v = static_cast<T>(rng.uniform(-b, b));
      for (auto& v : l.bias) v = static_cast<T>(rng.uniform(-b, b));
    }
  }

  /// Makes the network start from a fixed linear combination of its raw
  /// input: the final layer's weights on the learned channels and its bias
  /// are zeroed, and its weights on the raw input channels become a centred
  /// single-tap stencil with the given per-channel gains.
  void anchor_output(std::span<const double> gains) {
    if (gains.size() != static_cast<std::size_t>(cfg_.in_channels)) {
      throw Error(ErrorCode::ShapeMismatch, "anchor needs one gain per input channel");
    }
    auto& l = layers_[final1()];
    const auto& s = l.spec();
    std::fill(l.weights.begin(), l.weights.end(), T(0));
    std::fill(l.bias.begin(), l.bias.end(), T(0));
    const std::size_t area = s.kernel_area();
    const std::size_t centre = static_cast<std::size_t>(s.kh() / 2) * s.kernel + s.kernel / 2;
    for (int c = 0; c < cfg_.in_channels; ++c) {
      l.weights[static_cast<std::size_t>(2 + c) * area + centre] = static_cast<T>(gains[c]);
    }
  }

  /// Like anchor_output, but with a full kernel per raw input channel
  /// (in_channels x kernel area, channel-major) and an output bias.
  void anchor_output_kernels(std::span<const double> kernels, double bias) {
    auto& l = layers_[final1()];
    const std::size_t area = l.spec().kernel_area();
    if (kernels.size() != static_cast<std::size_t>(cfg_.in_channels) * area) {
      throw Error(ErrorCode::ShapeMismatch, "anchor needs one kernel per input channel");
    }
    std::fill(l.weights.begin(), l.weights.end(), T(0));
    for (std::size_t i = 0; i < kernels.size(); ++i) l.weights[2 * area + i] = static_cast<T>(kernels[i]);
    std::fill(l.bias.begin(), l.bias.end(), static_cast<T>(bias));
  }

  void zero_grad() {
    for (auto& l : layers_) l.zero_grad();
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers_) n += l.weights.size() + l.bias.size();
    return n;
  }

  std::vector<std::span<T>> parameter_blocks() {
    std::vector<std::span<T>> out;
    for (auto& l : layers_) {
      out.emplace_back(l.weights);
      out.emplace_back(l.bias);
    }
    return out;
  }

  std::vector<std::span<const T>> gradient_blocks() const {
    std::vector<std::span<const T>> out;
    for (const auto& l : layers_) {
      out.emplace_back(l.weight_grad);
      out.emplace_back(l.bias_grad);
    }
    return out;
  }

  /// Forward pass that keeps activations for backward().
  Tensor<T> forward(const Tensor<T>& x) {
    check_input(x);
    cache_.inputs.assign(layers_.size(), {});
    cache_.outputs.assign(layers_.size(), {});
    cache_.raw_channels = x.c;
    return run(x, &cache_);
  }

  /// Forward pass without caching.
  Tensor<T> predict(const Tensor<T>& x) const {
    check_input(x);
    return run(x, nullptr);
  }

  /// Backpropagates d loss / d output through the last forward() call,
  /// accumulating parameter gradients. Returns d loss / d input.
  Tensor<T> backward(const Tensor<T>& grad_out) {
    if (cache_.outputs.empty()) throw Error(ErrorCode::ShapeMismatch, "backward() without a cached forward()");
    Tensor<T> g, ga, gb;
    g = back(final1(), grad_out);
    split_channels(g, 2, ga, gb);
    Tensor<T> g_raw = gb;
    g = back(final0(), ga);

    std::vector<Tensor<T>> skip_grads(cfg_.depth);
    for (int i = 1; i <= cfg_.depth; ++i) {
      g = back(up(i) + 2, g);
      const int n = cfg_.width(i - 1);
      split_channels(g, n, ga, gb);
      skip_grads[i - 1] = std::move(gb);
      g = back(up(i) + 1, ga);
      g = back(up(i), g);
    }
    for (int i = cfg_.depth; i >= 1; --i) {
      if (i < cfg_.depth) add_into(g, skip_grads[i]);
      g = back(down(i) + 2, g);
      g = back(down(i) + 1, g);
      g = back(down(i), g);
    }
    add_into(g, skip_grads[0]);
    g = back(1, g);
    g = back(0, g);
    add_into(g, g_raw);
    return g;
  }

 private:
  struct Cache {
    std::vector<Tensor<T>> inputs;
    std::vector<Tensor<T>> outputs;
    int raw_channels = 0;
  };

  void add(LayerSpec s) { layers_.emplace_back(s); }

  int down(int i) const { return 2 + 3 * (i - 1); }
  int up(int i) const { return 2 + 3 * cfg_.depth + 3 * (cfg_.depth - i); }
  int final0() const { return 2 + 6 * cfg_.depth; }
  int final1() const { return 3 + 6 * cfg_.depth; }

  Tensor<T> step(int l, Tensor<T> in, Cache* cache) const {
    Tensor<T> out = layers_[l].forward(in);
    if (cache) {
      cache->inputs[l] = std::move(in);
      cache->outputs[l] = out;
    }
    return out;
  }

  Tensor<T> run(const Tensor<T>& x, Cache* cache) const {
    std::vector<Tensor<T>> skips(cfg_.depth);
    Tensor<T> h = step(0, x, cache);
    h = step(1, std::move(h), cache);
    for (int i = 1; i <= cfg_.depth; ++i) {
      skips[i - 1] = h;
      h = step(down(i), std::move(h), cache);
      h = step(down(i) + 1, std::move(h), cache);
      h = step(down(i) + 2, std::move(h), cache);
    }
    for (int i = cfg_.depth; i >= 1; --i) {
      h = step(up(i), std::move(h), cache);
      h = step(up(i) + 1, std::move(h), cache);
      h = step(up(i) + 2, concat_channels(h, skips[i - 1]), cache);
    }
    h = step(final0(), std::move(h), cache);
    return step(final1(), concat_channels(h, x), cache);
  }

  Tensor<T> back(int l, const Tensor<T>& g) {
    return layers_[l].backward(cache_.inputs[l], cache_.outputs[l], g);
  }

  UNetConfig cfg_;
  std::vector<ConvLayer<T>> layers_;
  Cache cache_;
};

}  // namespace sinointerp::nn
