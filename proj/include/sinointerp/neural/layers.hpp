#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "sinointerp/neural/tensor.hpp"

namespace sinointerp::nn {

enum class LayerKind { Conv, Transposed };
enum class Activation { None, LeakyRelu };

inline constexpr double kLeakySlope = 0.1;

/// C(in, out, k, s, p) or CT(in, out, k, s, p). `dims` selects 1D kernels
/// (k taps along the width axis) or 2D kernels (k x k, same stride and
/// padding on both axes).
struct LayerSpec {
  LayerKind kind = LayerKind::Conv;
  int in_ch = 1;
  int out_ch = 1;
  int kernel = 3;
  int stride = 1;
  int padding = 1;
  Activation act = Activation::LeakyRelu;
  int dims = 1;

  int kh() const { return dims == 2 ? kernel : 1; }
  int sh() const { return dims == 2 ? stride : 1; }
  int ph() const { return dims == 2 ? padding : 0; }
  std::size_t kernel_area() const { return static_cast<std::size_t>(kh()) * kernel; }
  std::size_t weight_count() const { return static_cast<std::size_t>(in_ch) * out_ch * kernel_area(); }

  int out_width(int len) const {
    return kind == LayerKind::Conv ? (len + 2 * padding - kernel) / stride + 1 : (len - 1) * stride - 2 * padding + kernel;
  }
  int out_height(int len) const {
    if (dims == 1) return len;
    return out_width(len);
  }

  bool operator==(const LayerSpec&) const = default;
};

inline LayerSpec conv_spec(int in, int out, int k, int s = 1, int p = 1, int dims = 1,
                           Activation act = Activation::LeakyRelu) {
  return {LayerKind::Conv, in, out, k, s, p, act, dims};
}

inline LayerSpec transposed_spec(int in, int out, int k, int s = 1, int p = 1, int dims = 1,
                                 Activation act = Activation::LeakyRelu) {
  return {LayerKind::Transposed, in, out, k, s, p, act, dims};
}

template <typename T>
inline T leaky(T v, T slope = T(kLeakySlope)) {
  return v >= T(0) ? v : slope * v;
}

/// Derivative from the activation's output; y >= 0 exactly when the input was
/// >= 0 because the slope is positive. The derivative at 0 is 1.
template <typename T>
inline T leaky_grad_from_output(T y, T slope = T(kLeakySlope)) {
  return y >= T(0) ? T(1) : slope;
}

template <typename T>
Tensor<T> leaky_relu(const Tensor<T>& x, double slope = kLeakySlope) {
  Tensor<T> y = x;
  y.grad.clear();
  for (auto& v : y.values) v = leaky(v, static_cast<T>(slope));
  return y;
}

template <typename T>
Tensor<T> leaky_relu_backward(const Tensor<T>& x, const Tensor<T>& upstream, double slope = kLeakySlope) {
  Tensor<T> g = upstream;
  for (std::size_t i = 0; i < g.values.size(); ++i) g.values[i] *= x.values[i] >= T(0) ? T(1) : static_cast<T>(slope);
  return g;
}

/// Mean squared error over all elements.
template <typename T>
double mse(const Tensor<T>& a, const Tensor<T>& b) {
  if (!a.same_shape(b)) throw Error(ErrorCode::ShapeMismatch, "mse of " + shape_string(a) + " and " + shape_string(b));
  if (a.values.empty()) throw Error(ErrorCode::EmptyInput, "mse of empty tensors");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    const double d = static_cast<double>(a.values[i]) - static_cast<double>(b.values[i]);
    acc += d * d;
  }
  return acc / static_cast<double>(a.values.size());
}

/// d mse / d a = 2 (a - b) / N
template <typename T>
Tensor<T> mse_grad(const Tensor<T>& a, const Tensor<T>& b) {
  if (!a.same_shape(b)) throw Error(ErrorCode::ShapeMismatch, "mse of " + shape_string(a) + " and " + shape_string(b));
  Tensor<T> g(a.n, a.c, a.h, a.w);
  const T scale = static_cast<T>(2.0 / static_cast<double>(a.values.size()));
  for (std::size_t i = 0; i < g.values.size(); ++i) g.values[i] = scale * (a.values[i] - b.values[i]);
  return g;
}

/// One convolution or transposed convolution with bias and optional
/// LeakyReLU. Weight layout: conv [out][in][kh][kw], transposed
/// [in][out][kh][kw]. Gradients accumulate until zero_grad().
template <typename T>
class ConvLayer {
 public:
  ConvLayer() = default;
  explicit ConvLayer(LayerSpec spec)
      : weights(spec.weight_count(), T(0)), bias(spec.out_ch, T(0)),
        weight_grad(spec.weight_count(), T(0)), bias_grad(spec.out_ch, T(0)), spec_(spec) {
    if (spec.kernel < 1 || spec.stride < 1 || spec.padding < 0 || spec.in_ch < 1 || spec.out_ch < 1 ||
        (spec.dims != 1 && spec.dims != 2)) {
      throw Error(ErrorCode::ShapeMismatch, "invalid layer hyperparameters");
    }
  }

  const LayerSpec& spec() const { return spec_; }

  void zero_grad() {
    std::fill(weight_grad.begin(), weight_grad.end(), T(0));
    std::fill(bias_grad.begin(), bias_grad.end(), T(0));
  }

  Tensor<T> forward(const Tensor<T>& x) const {
    check_input(x);
    return spec_.kind == LayerKind::Conv ? conv_fwd(x) : tconv_fwd(x);
  }

  /// Returns d loss / d x and adds the parameter gradients. `y` must be the
  /// output forward() produced for `x`.
  Tensor<T> backward(const Tensor<T>& x, const Tensor<T>& y, const Tensor<T>& gy) {
    check_input(x);
    if (!y.same_shape(gy)) throw Error(ErrorCode::ShapeMismatch, "upstream gradient shape " + shape_string(gy));
    Tensor<T> gpre = gy;
    gpre.grad.clear();
    if (spec_.act == Activation::LeakyRelu) {
      for (std::size_t i = 0; i < gpre.values.size(); ++i) gpre.values[i] *= leaky_grad_from_output(y.values[i]);
    }
    for (int i = 0; i < gpre.n; ++i) {
      for (int o = 0; o < spec_.out_ch; ++o) {
        const T* g = gpre.channel(i, o);
        T acc = T(0);
        for (std::size_t p = 0; p < gpre.plane(); ++p) acc += g[p];
        bias_grad[o] += acc;
      }
    }
    return spec_.kind == LayerKind::Conv ? conv_bwd(x, gpre) : tconv_bwd(x, gpre);
  }

  std::vector<T> weights;
  std::vector<T> bias;
  std::vector<T> weight_grad;
  std::vector<T> bias_grad;

 private:
  void check_input(const Tensor<T>& x) const {
    if (x.c != spec_.in_ch) {
      throw Error(ErrorCode::ShapeMismatch, "layer expects " + std::to_string(spec_.in_ch) + " channels, got " +
                                                shape_string(x));
    }
    if (spec_.dims == 1 && x.h != 1) throw Error(ErrorCode::ShapeMismatch, "1D layer given 2D input " + shape_string(x));
    if (spec_.kind == LayerKind::Conv) {
      if (x.w + 2 * spec_.padding < spec_.kernel || x.h + 2 * spec_.ph() < spec_.kh()) {
        throw Error(ErrorCode::ShapeMismatch, "padded input " + shape_string(x) + " shorter than kernel");
      }
    } else if (spec_.out_width(x.w) < 1 || spec_.out_height(x.h) < 1) {
      throw Error(ErrorCode::ShapeMismatch, "transposed conv output would be empty for " + shape_string(x));
    }
  }

  void apply_bias_act(Tensor<T>& y) const {
    for (int i = 0; i < y.n; ++i) {
      for (int o = 0; o < y.c; ++o) {
        T* p = y.channel(i, o);
        const T b = bias[o];
        if (spec_.act == Activation::LeakyRelu) {
          for (std::size_t q = 0; q < y.plane(); ++q) p[q] = leaky(p[q] + b);
        } else {
          for (std::size_t q = 0; q < y.plane(); ++q) p[q] += b;
        }
      }
    }
  }

  using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  using MapM = Eigen::Map<Mat>;
  using CMapM = Eigen::Map<const Mat>;

  // Geometry of one layer application: the zero-padded (conv) or full
  // (transposed) plane is `Hp x Wp`, the strided kernel grid over it is
  // `Hg x Wg`.
  struct Grid {
    int kh, kw, sh, sw, ph, pw;
    int Hp, Wp, Hg, Wg;
    std::size_t rows(int ch) const { return static_cast<std::size_t>(ch) * kh * kw; }
    std::size_t cols() const { return static_cast<std::size_t>(Hg) * Wg; }
  };

  Grid conv_grid(const Tensor<T>& x) const {
    Grid g{spec_.kh(), spec_.kernel, spec_.sh(), spec_.stride, spec_.ph(), spec_.padding, 0, 0, 0, 0};
    g.Hp = x.h + 2 * g.ph;
    g.Wp = x.w + 2 * g.pw;
    g.Hg = (g.Hp - g.kh) / g.sh + 1;
    g.Wg = (g.Wp - g.kw) / g.sw + 1;
    return g;
  }

  Grid tconv_grid(const Tensor<T>& x) const {
    Grid g{spec_.kh(), spec_.kernel, spec_.sh(), spec_.stride, spec_.ph(), spec_.padding, 0, 0, x.h, x.w};
    g.Hp = (x.h - 1) * g.sh + g.kh;
    g.Wp = (x.w - 1) * g.sw + g.kw;
    return g;
  }

  // cols[(c, ky, kx), (yy, xx)] = P[c, yy*sh + ky, xx*sw + kx]
  static void im2col(const T* P, int C, const Grid& g, T* cols) {
    const std::size_t n = g.cols();
    for (int c = 0; c < C; ++c) {
      const T* Pc = P + static_cast<std::size_t>(c) * g.Hp * g.Wp;
      for (int ky = 0; ky < g.kh; ++ky) {
        for (int kx = 0; kx < g.kw; ++kx) {
          T* dst = cols + ((static_cast<std::size_t>(c) * g.kh + ky) * g.kw + kx) * n;
          for (int yy = 0; yy < g.Hg; ++yy) {
            const T* src = Pc + static_cast<std::size_t>(yy * g.sh + ky) * g.Wp + kx;
            T* d = dst + static_cast<std::size_t>(yy) * g.Wg;
            if (g.sw == 1) {
              std::copy(src, src + g.Wg, d);
            } else {
              for (int xx = 0; xx < g.Wg; ++xx) d[xx] = src[xx * g.sw];
            }
          }
        }
      }
    }
  }

  // Adjoint of im2col: P[c, yy*sh + ky, xx*sw + kx] += cols[(c, ky, kx), (yy, xx)]
  static void col2im(const T* cols, int C, const Grid& g, T* P) {
    const std::size_t n = g.cols();
    for (int c = 0; c < C; ++c) {
      T* Pc = P + static_cast<std::size_t>(c) * g.Hp * g.Wp;
      for (int ky = 0; ky < g.kh; ++ky) {
        for (int kx = 0; kx < g.kw; ++kx) {
          const T* src = cols + ((static_cast<std::size_t>(c) * g.kh + ky) * g.kw + kx) * n;
          for (int yy = 0; yy < g.Hg; ++yy) {
            T* d = Pc + static_cast<std::size_t>(yy * g.sh + ky) * g.Wp + kx;
            const T* s = src + static_cast<std::size_t>(yy) * g.Wg;
            for (int xx = 0; xx < g.Wg; ++xx) d[xx * g.sw] += s[xx];
          }
        }
      }
    }
  }

  // Copies channel planes of sample i of `x` into the interior of a
  // zero-filled C x Hp x Wp buffer at offset (oy, ox).
  static void embed(const Tensor<T>& x, int i, int Hp, int Wp, int oy, int ox, std::vector<T>& P) {
    std::fill(P.begin(), P.end(), T(0));
    for (int c = 0; c < x.c; ++c) {
      for (int yy = 0; yy < x.h; ++yy) {
        const T* src = x.channel(i, c) + static_cast<std::size_t>(yy) * x.w;
        std::copy(src, src + x.w,
                  P.data() + static_cast<std::size_t>(c) * Hp * Wp + static_cast<std::size_t>(yy + oy) * Wp + ox);
      }
    }
  }

  // Inverse of embed: crops the interior into sample i of `y`.
  static void extract(const std::vector<T>& P, int Hp, int Wp, int oy, int ox, Tensor<T>& y, int i) {
    for (int c = 0; c < y.c; ++c) {
      for (int yy = 0; yy < y.h; ++yy) {
        const T* src = P.data() + static_cast<std::size_t>(c) * Hp * Wp + static_cast<std::size_t>(yy + oy) * Wp + ox;
        std::copy(src, src + y.w, y.channel(i, c) + static_cast<std::size_t>(yy) * y.w);
      }
    }
  }

  // Conv: Y_i = W * im2col(pad(X_i)), W viewed as [out x (in*kh*kw)].
  Tensor<T> conv_fwd(const Tensor<T>& x) const {
    const Grid g = conv_grid(x);
    const int Ci = spec_.in_ch, Co = spec_.out_ch;
    Tensor<T> y(x.n, Co, g.Hg, g.Wg);
    std::vector<T> P(static_cast<std::size_t>(Ci) * g.Hp * g.Wp);
    std::vector<T> cols(g.rows(Ci) * g.cols());
    const CMapM W(weights.data(), Co, static_cast<Eigen::Index>(g.rows(Ci)));
    for (int i = 0; i < x.n; ++i) {
      embed(x, i, g.Hp, g.Wp, g.ph, g.pw, P);
      im2col(P.data(), Ci, g, cols.data());
      MapM(y.sample(i), Co, static_cast<Eigen::Index>(g.cols())).noalias() =
          W * CMapM(cols.data(), static_cast<Eigen::Index>(g.rows(Ci)), static_cast<Eigen::Index>(g.cols()));
    }
    apply_bias_act(y);
    return y;
  }

  Tensor<T> conv_bwd(const Tensor<T>& x, const Tensor<T>& gpre) {
    const Grid g = conv_grid(x);
    const int Ci = spec_.in_ch, Co = spec_.out_ch;
    const auto K = static_cast<Eigen::Index>(g.rows(Ci));
    const auto n = static_cast<Eigen::Index>(g.cols());
    Tensor<T> gx(x.n, Ci, x.h, x.w);
    std::vector<T> P(static_cast<std::size_t>(Ci) * g.Hp * g.Wp);
    std::vector<T> cols(g.rows(Ci) * g.cols()), gcols(cols.size());
    const CMapM W(weights.data(), Co, K);
    MapM gW(weight_grad.data(), Co, K);
    for (int i = 0; i < x.n; ++i) {
      const CMapM G(gpre.sample(i), Co, n);
      embed(x, i, g.Hp, g.Wp, g.ph, g.pw, P);
      im2col(P.data(), Ci, g, cols.data());
      gW.noalias() += G * CMapM(cols.data(), K, n).transpose();
      MapM(gcols.data(), K, n).noalias() = W.transpose() * G;
      std::fill(P.begin(), P.end(), T(0));
      col2im(gcols.data(), Ci, g, P.data());
      extract(P, g.Hp, g.Wp, g.ph, g.pw, gx, i);
    }
    return gx;
  }

  // Transposed conv: full = col2im(Wt^T * X_i), W viewed as [in x (out*kh*kw)],
  // then the padding border is cropped.
  Tensor<T> tconv_fwd(const Tensor<T>& x) const {
    const Grid g = tconv_grid(x);
    const int Ci = spec_.in_ch, Co = spec_.out_ch;
    const auto K = static_cast<Eigen::Index>(g.rows(Co));
    const auto n = static_cast<Eigen::Index>(g.cols());
    Tensor<T> y(x.n, Co, g.Hp - 2 * g.ph, g.Wp - 2 * g.pw);
    std::vector<T> F(static_cast<std::size_t>(Co) * g.Hp * g.Wp);
    std::vector<T> cols(g.rows(Co) * g.cols());
    const CMapM W(weights.data(), Ci, K);
    for (int i = 0; i < x.n; ++i) {
      MapM(cols.data(), K, n).noalias() = W.transpose() * CMapM(x.sample(i), Ci, n);
      std::fill(F.begin(), F.end(), T(0));
      col2im(cols.data(), Co, g, F.data());
      extract(F, g.Hp, g.Wp, g.ph, g.pw, y, i);
    }
    apply_bias_act(y);
    return y;
  }

  Tensor<T> tconv_bwd(const Tensor<T>& x, const Tensor<T>& gpre) {
    const Grid g = tconv_grid(x);
    const int Ci = spec_.in_ch, Co = spec_.out_ch;
    const auto K = static_cast<Eigen::Index>(g.rows(Co));
    const auto n = static_cast<Eigen::Index>(g.cols());
    Tensor<T> gx(x.n, Ci, x.h, x.w);
    std::vector<T> GF(static_cast<std::size_t>(Co) * g.Hp * g.Wp);
    std::vector<T> cols(g.rows(Co) * g.cols());
    const CMapM W(weights.data(), Ci, K);
    MapM gW(weight_grad.data(), Ci, K);
    for (int i = 0; i < x.n; ++i) {
      embed(gpre, i, g.Hp, g.Wp, g.ph, g.pw, GF);
      im2col(GF.data(), Co, g, cols.data());
      const CMapM Gc(cols.data(), K, n);
      const CMapM X(x.sample(i), Ci, n);
      gW.noalias() += X * Gc.transpose();
      MapM(gx.sample(i), Ci, n).noalias() = W * Gc;
    }
    return gx;
  }

  LayerSpec spec_;
};

template <typename T>
struct ConvGradients {
  Tensor<T> input;
  std::vector<T> weight;
  std::vector<T> bias;
};

template <typename T>
Tensor<T> conv_forward(const Tensor<T>& x, const ConvLayer<T>& layer) {
  return layer.forward(x);
}

/// Gradients of sum(upstream * forward(x)) with respect to the input and the
/// layer parameters. Works for both layer kinds.
template <typename T>
ConvGradients<T> conv_backward(const Tensor<T>& x, const ConvLayer<T>& layer, const Tensor<T>& upstream) {
  ConvLayer<T> scratch = layer;
  scratch.zero_grad();
  const Tensor<T> y = scratch.forward(x);
  Tensor<T> gx = scratch.backward(x, y, upstream);
  return {std::move(gx), std::move(scratch.weight_grad), std::move(scratch.bias_grad)};
}

}  // namespace sinointerp::nn
