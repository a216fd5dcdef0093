#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "sinointerp/error.hpp"

namespace sinointerp::nn {

/// Dense batch x channels x height x width array. 1D signals use height 1.
template <typename T>
struct Tensor {
  int n = 0, c = 0, h = 1, w = 0;
  std::vector<T> values;
  std::vector<T> grad;  // empty unless requested

  Tensor() = default;
  Tensor(int batch, int channels, int height, int width, T fill = T(0))
      : n(batch), c(channels), h(height), w(width),
        values(static_cast<std::size_t>(batch) * channels * height * width, fill) {}

  static Tensor make1d(int batch, int channels, int length, T fill = T(0)) {
    return Tensor(batch, channels, 1, length, fill);
  }

  std::vector<int> shape() const { return h == 1 ? std::vector<int>{n, c, w} : std::vector<int>{n, c, h, w}; }
  std::size_t size() const { return values.size(); }
  std::size_t plane() const { return static_cast<std::size_t>(h) * w; }
  std::size_t sample_size() const { return static_cast<std::size_t>(c) * plane(); }

  T* sample(int i) { return values.data() + i * sample_size(); }
  const T* sample(int i) const { return values.data() + i * sample_size(); }
  T* channel(int i, int ch) { return sample(i) + ch * plane(); }
  const T* channel(int i, int ch) const { return sample(i) + ch * plane(); }

  T& at(int i, int ch, int x) { return channel(i, ch)[x]; }
  T at(int i, int ch, int x) const { return channel(i, ch)[x]; }

  bool same_shape(const Tensor& o) const { return n == o.n && c == o.c && h == o.h && w == o.w; }

  void ensure_grad() {
    if (grad.size() != values.size()) grad.assign(values.size(), T(0));
  }
};

template <typename T>
std::string shape_string(const Tensor<T>& t) {
  return "[" + std::to_string(t.n) + "," + std::to_string(t.c) + "," + std::to_string(t.h) + "," +
         std::to_string(t.w) + "]";
}

/// Channel-wise concatenation [a | b] for every batch item.
template <typename T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.n != b.n || a.h != b.h || a.w != b.w) {
    throw Error(ErrorCode::ShapeMismatch, "concat of " + shape_string(a) + " and " + shape_string(b));
  }
  Tensor<T> out(a.n, a.c + b.c, a.h, a.w);
  for (int i = 0; i < a.n; ++i) {
    std::copy(a.sample(i), a.sample(i) + a.sample_size(), out.sample(i));
    std::copy(b.sample(i), b.sample(i) + b.sample_size(), out.sample(i) + a.sample_size());
  }
  return out;
}

/// Splits a gradient over [a | b] back into its two parts.
template <typename T>
void split_channels(const Tensor<T>& g, int first_channels, Tensor<T>& ga, Tensor<T>& gb) {
  ga = Tensor<T>(g.n, first_channels, g.h, g.w);
  gb = Tensor<T>(g.n, g.c - first_channels, g.h, g.w);
  for (int i = 0; i < g.n; ++i) {
    std::copy(g.sample(i), g.sample(i) + ga.sample_size(), ga.sample(i));
    std::copy(g.sample(i) + ga.sample_size(), g.sample(i) + g.sample_size(), gb.sample(i));
  }
}

template <typename T>
void add_into(Tensor<T>& dst, const Tensor<T>& src) {
  if (!dst.same_shape(src)) throw Error(ErrorCode::ShapeMismatch, "add of mismatched tensors");
  for (std::size_t i = 0; i < dst.values.size(); ++i) dst.values[i] += src.values[i];
}

}  // namespace sinointerp::nn
