#include <gtest/gtest.h>

#include <fstream>

#include "gradcheck.hpp"
#include "sinointerp/neural/adam.hpp"
#include "sinointerp/neural/layers.hpp"
#include "sinointerp/neural/unet.hpp"
#include "sinointerp/neural/weights_io.hpp"
#include "support.hpp"

using namespace sinointerp;
using namespace sinointerp::nn;

namespace {

ConvLayer<double> linear_layer(LayerSpec s, std::vector<double> w, std::vector<double> b = {}) {
  s.act = Activation::None;
  ConvLayer<double> l(s);
  l.weights = std::move(w);
  if (!b.empty()) l.bias = std::move(b);
  return l;
}

Tensor<double> signal(std::vector<double> v, int channels = 1) {
  Tensor<double> t = Tensor<double>::make1d(1, channels, static_cast<int>(v.size()) / channels);
  t.values = std::move(v);
  return t;
}

/// Dense matrix of a linear layer acting on a single 1-channel signal.
std::vector<std::vector<double>> matrix_of(const ConvLayer<double>& l, int len) {
  std::vector<std::vector<double>> cols;
  for (int j = 0; j < len; ++j) {
    std::vector<double> e(len, 0.0);
    e[j] = 1.0;
    cols.push_back(l.forward(signal(e)).values);
  }
  std::vector<std::vector<double>> m(cols.front().size(), std::vector<double>(len));
  for (int j = 0; j < len; ++j) {
    for (std::size_t i = 0; i < m.size(); ++i) m[i][j] = cols[j][i];
  }
  return m;
}

}  // namespace

TEST(Conv, HandComputedCrossCorrelation) {
  const auto l = linear_layer(conv_spec(1, 1, 3, 1, 1), {1, 0, -1});
  EXPECT_EQ(l.forward(signal({1, 2, 3})).values, (std::vector<double>{-2, -2, 2}));
}

TEST(Conv, IdentityKernel) {
  const auto l = linear_layer(conv_spec(1, 1, 3, 1, 1), {0, 1, 0});
  const std::vector<double> x{0.5, -1, 3, 7, 2};
  EXPECT_EQ(l.forward(signal(x)).values, x);
}

TEST(Conv, LengthFormula) {
  const ConvLayer<float> l(conv_spec(1, 1, 4, 2, 1));
  EXPECT_EQ(l.forward(Tensor<float>::make1d(1, 1, 8)).w, 4);
  for (int L = 4; L <= 40; ++L) {
    for (auto [k, s, p] : {std::tuple{3, 1, 1}, {4, 2, 1}, {5, 2, 2}, {2, 3, 0}}) {
      const ConvLayer<float> c(conv_spec(1, 1, k, s, p));
      EXPECT_EQ(c.forward(Tensor<float>::make1d(1, 1, L)).w, (L + 2 * p - k) / s + 1);
    }
  }
}

TEST(Conv, BiasAndActivation) {
  ConvLayer<double> l(conv_spec(1, 2, 1, 1, 0));
  l.weights = {1.0, -1.0};
  l.bias = {0.0, 0.5};
  const auto y = l.forward(signal({2.0, -3.0}));
  EXPECT_DOUBLE_EQ(y.at(0, 0, 0), 2.0);
  EXPECT_DOUBLE_EQ(y.at(0, 0, 1), -0.3);
  EXPECT_DOUBLE_EQ(y.at(0, 1, 0), -0.15);
  EXPECT_DOUBLE_EQ(y.at(0, 1, 1), 3.5);
}

TEST(Conv, ShapeMismatch) {
  const ConvLayer<float> l(conv_spec(2, 3, 3));
  try {
    l.forward(Tensor<float>::make1d(1, 1, 8));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ShapeMismatch);
  }
  EXPECT_THROW(ConvLayer<float>(conv_spec(1, 1, 7, 1, 0)).forward(Tensor<float>::make1d(1, 1, 5)), Error);
  ConvLayer<double> c(conv_spec(1, 1, 3));
  const auto x = Tensor<double>::make1d(1, 1, 8);
  EXPECT_THROW(conv_backward(x, c, Tensor<double>::make1d(1, 1, 7)), Error);
}

TEST(Conv, ZeroUpstreamGivesZeroGradients) {
  auto rc = gradcheck::random_case(5, LayerKind::Conv);
  const auto y = rc.layer.forward(rc.x);
  const auto g = conv_backward(rc.x, rc.layer, Tensor<double>(y.n, y.c, y.h, y.w));
  for (double v : g.input.values) EXPECT_EQ(v, 0.0);
  for (double v : g.weight) EXPECT_EQ(v, 0.0);
  for (double v : g.bias) EXPECT_EQ(v, 0.0);
}

TEST(Conv, InputGradientIsFullCorrelationWithFlippedKernel) {
  // linear 3-tap conv, p=1: dx = A^T u where A is the explicit conv matrix
  const auto l = linear_layer(conv_spec(1, 1, 3, 1, 1), {0.5, -2.0, 3.0});
  const int L = 6;
  const auto A = matrix_of(l, L);
  const std::vector<double> u{1, -1, 2, 0.5, -3, 4};
  const auto g = conv_backward(signal(std::vector<double>(L, 0.3)), l, signal(u));
  for (int j = 0; j < L; ++j) {
    double expect = 0.0;
    for (int i = 0; i < L; ++i) expect += A[i][j] * u[i];
    EXPECT_NEAR(g.input.values[j], expect, 1e-12);
  }
}

TEST(TransposedConv, DoublesLength) {
  const ConvLayer<float> l(transposed_spec(1, 1, 4, 2, 1));
  EXPECT_EQ(l.forward(Tensor<float>::make1d(1, 1, 4)).w, 8);
  for (int L = 1; L <= 33; ++L) EXPECT_EQ(l.forward(Tensor<float>::make1d(1, 1, L)).w, 2 * L);
}

TEST(TransposedConv, ZeroWeightsZeroOutput) {
  const ConvLayer<double> l(transposed_spec(2, 3, 4, 2, 1, 1, Activation::None));
  Tensor<double> x = Tensor<double>::make1d(1, 2, 5, 1.0);
  for (double v : l.forward(x).values) EXPECT_EQ(v, 0.0);
}

TEST(TransposedConv, IsMatrixTransposeOfConv) {
  const std::vector<double> w{0.3, -1.2, 0.7, 2.0};
  const auto conv = linear_layer(conv_spec(1, 1, 4, 2, 1), w);
  const auto tconv = linear_layer(transposed_spec(1, 1, 4, 2, 1), w);
  const auto A = matrix_of(conv, 8);   // 4 x 8
  const auto B = matrix_of(tconv, 4);  // 8 x 4
  ASSERT_EQ(A.size(), 4u);
  ASSERT_EQ(B.size(), 8u);
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 8; ++j) EXPECT_NEAR(A[i][j], B[j][i], 1e-15);
  }
}

TEST(LeakyRelu, Values) {
  EXPECT_DOUBLE_EQ(leaky(-1.0), -0.1);
  EXPECT_DOUBLE_EQ(leaky(2.0), 2.0);
  EXPECT_DOUBLE_EQ(leaky(0.0), 0.0);
  EXPECT_DOUBLE_EQ(leaky_grad_from_output(0.0), 1.0);
  const auto g = leaky_relu_backward(signal({-1, 0, 1}), signal({1, 1, 1}));
  EXPECT_EQ(g.values, (std::vector<double>{0.1, 1.0, 1.0}));
}

TEST(Mse, Values) {
  EXPECT_EQ(mse(signal({1, 2}), signal({1, 2})), 0.0);
  EXPECT_DOUBLE_EQ(mse(signal({0, 2}), signal({0, 0})), 2.0);
  EXPECT_EQ(mse_grad(signal({0, 2}), signal({0, 0})).values, (std::vector<double>{0, 2}));
  EXPECT_THROW(mse(signal({1}), signal({1, 2})), Error);
  try {
    mse(Tensor<double>(), Tensor<double>());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyInput);
  }
}

TEST(GradCheck, ConvOnTwoChannelLength16) {
  ConvLayer<double> l(conv_spec(2, 3, 3));
  XorShift64Star rng(42);
  gradcheck::fill_uniform(l.weights, rng, -0.5, 0.5);
  gradcheck::fill_uniform(l.bias, rng, -0.2, 0.2);
  auto x = Tensor<double>::make1d(1, 2, 16);
  gradcheck::fill_uniform(x.values, rng);
  const auto r = gradcheck::check_layer(l, x, 7);
  EXPECT_LT(r.worst(), 1e-3);
}

TEST(GradCheck, RandomizedLayers) {
  for (std::uint64_t seed = 0; seed < 24; ++seed) {
    const auto kind = seed % 2 ? LayerKind::Transposed : LayerKind::Conv;
    auto rc = gradcheck::random_case(1000 + seed, kind);
    const auto r = gradcheck::check_layer(rc.layer, rc.x, seed);
    EXPECT_LT(r.input, 1e-3) << rc.describe();
    EXPECT_LT(r.weight, 1e-3) << rc.describe();
    EXPECT_LT(r.bias, 1e-3) << rc.describe();
  }
}

TEST(GradCheck, LeakyAndMse) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    EXPECT_LT(gradcheck::check_leaky(seed), 1e-3);
    EXPECT_LT(gradcheck::check_mse(seed), 1e-3);
  }
}

TEST(GradCheck, WholeUNet) {
  UNet<double> net({2, 2, 3, 8, 1});
  net.initialize(3);
  XorShift64Star rng(9);
  auto x = Tensor<double>::make1d(2, 2, 8);
  gradcheck::fill_uniform(x.values, rng);
  auto t = Tensor<double>::make1d(2, 1, 8);
  gradcheck::fill_uniform(t.values, rng);
  net.zero_grad();
  const auto y = net.forward(x);
  const auto gx = net.backward(mse_grad(y, t));
  auto loss = [&] { return mse(net.predict(x), t); };
  std::vector<double> analytic, numeric;
  for (std::size_t l = 0; l < net.layers().size(); ++l) {
    auto& layer = net.layers()[l];
    const auto nw = gradcheck::numeric_gradient(layer.weights, loss, 1e-4);
    const auto nb = gradcheck::numeric_gradient(layer.bias, loss, 1e-4);
    EXPECT_LT(gradcheck::relative_error(layer.weight_grad, nw), 1e-3) << "layer " << l;
    EXPECT_LT(gradcheck::relative_error(layer.bias_grad, nb), 1e-3) << "layer " << l;
  }
  EXPECT_LT(gradcheck::relative_error(gx.values, gradcheck::numeric_gradient(x.values, loss, 1e-4)), 1e-3);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  std::vector<double> p{0.5, -2.0};
  const std::vector<double> g{1.0, 1.0};
  AdamState st;
  std::vector<std::span<double>> ps{p};
  std::vector<std::span<const double>> gs{g};
  adam_step<double>(ps, gs, st);
  // m_hat = 1, v_hat = 1, so the step is lr / (1 + eps)
  EXPECT_NEAR(p[0], 0.5 - 1e-4, 1e-7);
  EXPECT_NEAR(p[1], -2.0 - 1e-4, 1e-7);
  EXPECT_EQ(st.step, 1);
}

TEST(Adam, ZeroGradientLeavesParameters) {
  std::vector<float> p{1.0f, 2.0f, 3.0f};
  const std::vector<float> g(3, 0.0f);
  AdamState st;
  std::vector<std::span<float>> ps{p};
  std::vector<std::span<const float>> gs{g};
  for (int i = 0; i < 3; ++i) adam_step<float>(ps, gs, st);
  EXPECT_EQ(p, (std::vector<float>{1.0f, 2.0f, 3.0f}));
}

TEST(Adam, MatchesClosedFormOverSeveralSteps) {
  double p = 0.0, m = 0.0, v = 0.0;
  std::vector<double> pv{0.0};
  AdamState st;
  st.learning_rate = 0.01;
  const double grads[] = {0.3, -1.2, 2.5, 0.0, 0.7};
  for (int t = 1; t <= 5; ++t) {
    const double g = grads[t - 1];
    m = 0.9 * m + 0.1 * g;
    v = 0.999 * v + 0.001 * g * g;
    p -= 0.01 * (m / (1 - std::pow(0.9, t))) / (std::sqrt(v / (1 - std::pow(0.999, t))) + 1e-8);
    const std::vector<double> gv{g};
    std::vector<std::span<double>> ps{pv};
    std::vector<std::span<const double>> gs{gv};
    adam_step<double>(ps, gs, st);
    EXPECT_NEAR(pv[0], p, 1e-15);
  }
}

TEST(Adam, DeterministicAndShapeChecked) {
  std::vector<float> a{1, 2}, b{1, 2};
  const std::vector<float> g{0.3f, -0.7f};
  AdamState sa, sb;
  std::vector<std::span<float>> pa{a}, pb{b};
  std::vector<std::span<const float>> gs{g};
  adam_step<float>(pa, gs, sa);
  adam_step<float>(pb, gs, sb);
  EXPECT_EQ(a, b);
  std::vector<float> c{1, 2, 3};
  std::vector<std::span<float>> pc{c};
  EXPECT_THROW(adam_step<float>(pc, gs, sa), Error);
}

TEST(UNetShape, DownThenUpRestoresLength) {
  const ConvLayer<float> down(conv_spec(1, 1, 4, 2, 1));
  const ConvLayer<float> up(transposed_spec(1, 1, 4, 2, 1));
  for (int L = 2; L <= 64; L += 2) {
    EXPECT_EQ(up.forward(down.forward(Tensor<float>::make1d(1, 1, L))).w, L);
  }
}

TEST(UNetShape, SmallNetForward) {
  UNet<float> net({2, 2, 4, 64, 1});
  net.initialize(1);
  const auto y = net.predict(Tensor<float>::make1d(3, 2, 64, 0.5f));
  EXPECT_EQ(y.shape(), (std::vector<int>{3, 1, 64}));
}

TEST(UNetShape, TwoDimensionalNet) {
  UNet<float> net({1, 2, 4, 16, 2});
  net.initialize(1);
  const auto y = net.predict(Tensor<float>(2, 1, 16, 16, 0.25f));
  EXPECT_EQ(y.shape(), (std::vector<int>{2, 1, 16, 16}));
}

TEST(UNetShape, Errors) {
  EXPECT_THROW(UNet<float>({2, 3, 8, 4, 1}), Error);
  UNet<float> net({2, 7, 32, 1024, 1});
  try {
    net.check_input(Tensor<float>::make1d(1, 2, 100));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::LengthNotDivisible);
  }
  EXPECT_THROW(net.check_input(Tensor<float>::make1d(1, 3, 128)), Error);
}

TEST(UNetInit, SeededAndBounded) {
  UNet<float> a({2, 3, 4, 32, 1}), b({2, 3, 4, 32, 1}), c({2, 3, 4, 32, 1});
  a.initialize(11);
  b.initialize(11);
  c.initialize(12);
  EXPECT_EQ(a.layers()[5].weights, b.layers()[5].weights);
  EXPECT_NE(a.layers()[5].weights, c.layers()[5].weights);
  for (const auto& l : a.layers()) {
    const double bound = std::sqrt(1.0 / (l.spec().in_ch * l.spec().kernel_area()));
    for (float w : l.weights) ASSERT_LE(std::abs(w), bound);
  }
}

TEST(UNetInit, AnchoredOutputReproducesInputBlend) {
  UNet<double> net({2, 2, 4, 16, 1});
  net.initialize(5);
  const double gains[] = {0.75, 0.25};
  net.anchor_output(gains);
  XorShift64Star rng(3);
  auto x = Tensor<double>::make1d(2, 2, 16);
  gradcheck::fill_uniform(x.values, rng, 0.0, 1.0);
  const auto y = net.predict(x);
  for (int i = 0; i < 2; ++i) {
    for (int p = 0; p < 16; ++p) EXPECT_NEAR(y.at(i, 0, p), 0.75 * x.at(i, 0, p) + 0.25 * x.at(i, 1, p), 1e-12);
  }
}

TEST(Weights, RoundTripIsBitExact) {
  const auto dir = testing_support::scratch_dir();
  UNet<float> net({2, 2, 4, 16, 1});
  net.initialize(8);
  save_weights(net, dir / "n.wts");
  UNet<float> back({2, 2, 4, 16, 1});
  load_weights(dir / "n.wts", back);
  for (std::size_t l = 0; l < net.layers().size(); ++l) {
    EXPECT_EQ(back.layers()[l].weights, net.layers()[l].weights);
    EXPECT_EQ(back.layers()[l].bias, net.layers()[l].bias);
  }
  EXPECT_EQ(read_topology(dir / "n.wts"), net.topology());
}

TEST(Weights, HeaderLayout) {
  const auto dir = testing_support::scratch_dir();
  UNet<float> net({2, 1, 2, 4, 1});
  save_weights(net, dir / "h.wts");
  std::ifstream f(dir / "h.wts", std::ios::binary);
  std::string line;
  std::getline(f, line);
  EXPECT_EQ(line, "WTS1 " + std::to_string(net.layers().size()));
  std::getline(f, line);
  EXPECT_EQ(line, "conv1d 2 2 3 1 1 lrelu");
  EXPECT_EQ(parse_layer_line("tconv1d 4 4 4 2 1 lrelu"), transposed_spec(4, 4, 4, 2, 1));
  EXPECT_EQ(layer_line(conv_spec(8, 1, 3, 1, 1, 2, Activation::None)), "conv2d 8 1 3 1 1 none");
}

TEST(Weights, WrongArchitecture) {
  const auto dir = testing_support::scratch_dir();
  UNet<float> net({2, 2, 4, 16, 1});
  save_weights(net, dir / "n.wts");
  UNet<float> other({2, 2, 8, 16, 1});
  try {
    load_weights(dir / "n.wts", other);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::TopologyMismatch);
  }
}

TEST(Weights, CorruptFiles) {
  const auto dir = testing_support::scratch_dir();
  UNet<float> net({2, 1, 2, 4, 1});
  save_weights(net, dir / "n.wts");
  std::string bytes;
  {
    std::ifstream f(dir / "n.wts", std::ios::binary);
    bytes.assign(std::istreambuf_iterator<char>(f), {});
  }
  auto code = [&](const std::string& content) {
    std::ofstream(dir / "x.wts", std::ios::binary | std::ios::trunc) << content;
    try {
      UNet<float> n2({2, 1, 2, 4, 1});
      load_weights(dir / "x.wts", n2);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::Io;
  };
  EXPECT_EQ(code("WTS9" + bytes.substr(4)), ErrorCode::BadMagic);
  EXPECT_EQ(code(bytes.substr(0, bytes.size() - 8)), ErrorCode::TruncatedPayload);
  EXPECT_EQ(code(bytes + "abcd"), ErrorCode::TruncatedPayload);
}
