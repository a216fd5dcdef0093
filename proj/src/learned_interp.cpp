#include "sinointerp/learned_interp.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>

#include <Eigen/Dense>

#include "sinointerp/interp_baseline.hpp"
#include "sinointerp/neural/adam.hpp"
#include "sinointerp/neural/weights_io.hpp"
#include "sinointerp/rng.hpp"

namespace sinointerp {
namespace {

std::uint64_t network_seed(std::uint64_t seed, int offset_class) {
  return splitmix64(seed * 0x9E3779B97F4A7C15ULL + static_cast<std::uint64_t>(offset_class));
}

/// Generic minibatch loop. `fill(indices, input, target)` writes one batch.
template <typename Fill>
std::vector<double> fit(nn::UNet<float>& net, std::size_t count, const TrainingHyper& h, std::uint64_t order_seed,
                        Fill&& fill) {
  if (count == 0) throw Error(ErrorCode::EmptyDataset, "no training samples");
  if (h.epochs < 1 || h.batch_size < 1 || !(h.learning_rate > 0.0)) {
    throw Error(ErrorCode::BadSpec, "epochs, batch size and learning rate must be positive");
  }
  nn::AdamState adam;
  adam.learning_rate = h.learning_rate;
  XorShift64Star order_rng(order_seed);
  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<double> losses;

  for (int epoch = 0; epoch < h.epochs; ++epoch) {
    for (std::size_t i = count; i > 1; --i) std::swap(order[i - 1], order[order_rng.below(i)]);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < count; start += static_cast<std::size_t>(h.batch_size)) {
      const std::size_t end = std::min(count, start + static_cast<std::size_t>(h.batch_size));
      const std::span<const std::size_t> idx(order.data() + start, end - start);
      nn::Tensor<float> input, target;
      fill(idx, input, target);
      net.zero_grad();
      const auto out = net.forward(input);
      loss_sum += nn::mse(out, target) * static_cast<double>(idx.size());
      net.backward(nn::mse_grad(out, target));
      const auto params = net.parameter_blocks();
      const auto grads = net.gradient_blocks();
      nn::adam_step<float>(params, grads, adam);
    }
    losses.push_back(loss_sum / static_cast<double>(count));
  }
  return losses;
}

void clamp_unit(std::vector<float>& v) {
  for (auto& x : v) x = std::clamp(x, 0.0f, 1.0f);
}

std::string join(const std::vector<double>& v) {
  std::string out;
  char buf[64];
  for (std::size_t i = 0; i < v.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%s%.17g", i ? "," : "", v[i]);
    out += buf;
  }
  return out;
}

/// Least-squares fit of the output layer's raw-input kernels and bias to the
/// class's training pairs, solved in double precision from normal equations.
void fit_output_head(nn::UNet<float>& net, const PairDataset& ds) {
  const int L = ds.length;
  const int K = net.layers().back().spec().kernel;
  const int pad = net.layers().back().spec().padding;
  const int n = 2 * K + 1;
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd f(n);
  for (std::size_t s = 0; s < ds.size(); ++s) {
    const float* in = ds.inputs.data() + s * 2 * L;
    const float* target = ds.targets.data() + s * L;
    for (int d = 0; d < L; ++d) {
      for (int c = 0; c < 2; ++c) {
        for (int t = 0; t < K; ++t) {
          const int x = d + t - pad;
          f[c * K + t] = x >= 0 && x < L ? in[c * L + x] : 0.0;
        }
      }
      f[n - 1] = 1.0;
      A.selfadjointView<Eigen::Lower>().rankUpdate(f);
      b += f * static_cast<double>(target[d]);
    }
  }
  A.triangularView<Eigen::StrictlyUpper>() = A.transpose();
  const Eigen::VectorXd w = A.ldlt().solve(b);
  if (!w.allFinite()) return;  // keep the linear anchor
  const std::vector<double> kernels(w.data(), w.data() + n - 1);
  net.anchor_output_kernels(kernels, w[n - 1]);
}

}  // namespace

const char* init_name(InitScheme s) {
  switch (s) {
    case InitScheme::FanIn: return "fanin";
    case InitScheme::Anchored: return "anchored";
    case InitScheme::Fitted: return "fitted";
  }
  return "fitted";
}

InitScheme parse_init(const std::string& name) {
  if (name == "fanin") return InitScheme::FanIn;
  if (name == "anchored") return InitScheme::Anchored;
  if (name == "fitted") return InitScheme::Fitted;
  throw Error(ErrorCode::BadSpec, "init must be 'fitted', 'anchored' or 'fanin', got '" + name + "'");
}

nn::UNet<float> build_interp_net(const InterpNetConfig& cfg) { return nn::UNet<float>(cfg.unet()); }

PairDataset make_training_pairs(const std::vector<Sinogram>& dense, int ratio, int offset) {
  const InterpolationPlan plan(ratio);
  if (offset < 1 || offset > plan.class_count()) {
    throw Error(ErrorCode::BadOffset, "offset " + std::to_string(offset) + " outside [1, " +
                                          std::to_string(plan.class_count()) + "]");
  }
  PairDataset ds;
  if (dense.empty()) return ds;
  ds.length = dense.front().cols();
  const auto L = static_cast<std::size_t>(ds.length);
  auto emit = [&](int s, const Sinogram& sino, int near, int far, int target) {
    const auto a = sino.row(near), b = sino.row(far), t = sino.row(target);
    ds.inputs.insert(ds.inputs.end(), a.begin(), a.end());
    ds.inputs.insert(ds.inputs.end(), b.begin(), b.end());
    ds.targets.insert(ds.targets.end(), t.begin(), t.end());
    ds.sources.push_back({s, near, far, target});
  };
  for (int s = 0; s < static_cast<int>(dense.size()); ++s) {
    const Sinogram& sino = dense[s];
    if (static_cast<std::size_t>(sino.cols()) != L) {
      throw Error(ErrorCode::ShapeMismatch, "training sinograms must share a detector length");
    }
    if ((sino.rows() - 1) % ratio != 0) {
      throw Error(ErrorCode::IndivisibleAngles, "dense sinogram with " + std::to_string(sino.rows()) +
                                                    " rows is not (M-1)*" + std::to_string(ratio) + "+1");
    }
    for (int i = 0; i + ratio < sino.rows(); i += ratio) {
      emit(s, sino, i, i + ratio, i + offset);
      if (2 * offset != ratio) emit(s, sino, i + ratio, i, i + ratio - offset);
    }
  }
  return ds;
}

const TrainedNetwork& ModelBundle::for_offset(int offset) const {
  if (offset < 1 || offset >= ratio) throw Error(ErrorCode::BadOffset, "offset " + std::to_string(offset));
  const int cls = std::min(offset, ratio - offset);
  auto it = networks.find(cls);
  if (it == networks.end()) throw Error(ErrorCode::BadOffset, "bundle has no network for class " + std::to_string(cls));
  return it->second;
}

ModelBundle make_bundle(int ratio, const InterpNetConfig& cfg, const TrainingHyper& hyper) {
  const InterpolationPlan plan(ratio);
  ModelBundle b;
  b.ratio = ratio;
  b.net_cfg = cfg;
  b.hyper = hyper;
  for (int k = 1; k <= plan.class_count(); ++k) {
    auto net = build_interp_net(cfg);
    net.initialize(network_seed(hyper.seed, k));
    if (hyper.init != InitScheme::FanIn) {
      const double gains[2] = {plan.weight(k), 1.0 - plan.weight(k)};
      net.anchor_output(gains);
    }
    b.networks.emplace(k, TrainedNetwork{k, {}, std::move(net)});
  }
  return b;
}

ModelBundle train_bundle(const std::vector<Sinogram>& train, int ratio, const InterpNetConfig& cfg,
                         const TrainingHyper& hyper) {
  if (train.empty()) throw Error(ErrorCode::EmptyDataset, "no training sinograms");
  ModelBundle bundle = make_bundle(ratio, cfg, hyper);
  const int div = cfg.unet().length_divisor();
  if (train.front().cols() % div != 0) {
    throw Error(ErrorCode::LengthNotDivisible, "detector length " + std::to_string(train.front().cols()) +
                                                   " not divisible by 2^" + std::to_string(cfg.depth));
  }
  for (auto& [k, entry] : bundle.networks) {
    const PairDataset ds = make_training_pairs(train, ratio, k);
    if (hyper.init == InitScheme::Fitted) fit_output_head(entry.net, ds);
    const int L = ds.length;
    auto fill = [&](std::span<const std::size_t> idx, nn::Tensor<float>& in, nn::Tensor<float>& target) {
      const int B = static_cast<int>(idx.size());
      in = nn::Tensor<float>::make1d(B, 2, L);
      target = nn::Tensor<float>::make1d(B, 1, L);
      for (int b = 0; b < B; ++b) {
        const std::size_t s = idx[b];
        std::copy_n(ds.inputs.data() + s * 2 * L, 2 * L, in.sample(b));
        std::copy_n(ds.targets.data() + s * L, L, target.sample(b));
      }
    };
    entry.epoch_loss = fit(entry.net, ds.size(), hyper, network_seed(hyper.seed, k) ^ 0x5DEECE66DULL, fill);
  }
  return bundle;
}

Sinogram interpolate_learned(const Sinogram& scarce, int ratio, const ModelBundle& bundle, bool midpoint_average) {
  const InterpolationPlan plan(ratio);
  if (bundle.ratio != ratio) {
    throw Error(ErrorCode::RatioMismatch, "bundle trained for R=" + std::to_string(bundle.ratio) + ", asked for R=" +
                                              std::to_string(ratio));
  }
  if (scarce.rows() < 2) throw Error(ErrorCode::ShapeMismatch, "need at least 2 reference rows");
  const ScanGeometry g = dense_geometry(scarce.geometry(), ratio);
  const int L = scarce.cols();
  const int pairs = scarce.rows() - 1;
  std::vector<float> out(static_cast<std::size_t>(g.n_angles) * L, 0.0f);
  for (int i = 0; i < scarce.rows(); ++i) {
    const auto r = scarce.row(i);
    std::copy(r.begin(), r.end(), out.begin() + static_cast<std::ptrdiff_t>(i) * ratio * L);
  }

  auto place = [&](int dense_row, const float* src, float scale, bool accumulate) {
    float* dst = out.data() + static_cast<std::size_t>(dense_row) * L;
    for (int d = 0; d < L; ++d) dst[d] = (accumulate ? dst[d] : 0.0f) + scale * src[d];
  };

  for (const auto& [cls, entry] : bundle.networks) {
    // Inputs ordered (closer, farther): forward orientation targets i*R+cls,
    // reversed orientation targets i*R+R-cls.
    const bool midpoint = 2 * cls == ratio;
    const bool need_reverse = !midpoint || midpoint_average;
    const int per_pair = need_reverse ? 2 : 1;
    auto in = nn::Tensor<float>::make1d(pairs * per_pair, 2, L);
    for (int i = 0; i < pairs; ++i) {
      const auto lo = scarce.row(i), hi = scarce.row(i + 1);
      float* fwd = in.sample(i * per_pair);
      std::copy(lo.begin(), lo.end(), fwd);
      std::copy(hi.begin(), hi.end(), fwd + L);
      if (need_reverse) {
        float* rev = in.sample(i * per_pair + 1);
        std::copy(hi.begin(), hi.end(), rev);
        std::copy(lo.begin(), lo.end(), rev + L);
      }
    }
    const auto pred = entry.net.predict(in);
    for (int i = 0; i < pairs; ++i) {
      const float* f = pred.sample(i * per_pair);
      if (midpoint) {
        const int row = i * ratio + cls;
        if (midpoint_average) {
          place(row, f, 0.5f, false);
          place(row, pred.sample(i * per_pair + 1), 0.5f, true);
        } else {
          place(row, f, 1.0f, false);
        }
      } else {
        place(i * ratio + cls, f, 1.0f, false);
        place(i * ratio + ratio - cls, pred.sample(i * per_pair + 1), 1.0f, false);
      }
    }
  }

  if (scarce.norm()) {
    for (int j = 0; j < g.n_angles; ++j) {
      if (j % ratio == 0) continue;
      auto* row = out.data() + static_cast<std::size_t>(j) * L;
      for (int d = 0; d < L; ++d) row[d] = std::clamp(row[d], 0.0f, 1.0f);
    }
  }
  return Sinogram(g, std::move(out), scarce.norm());
}

void save_bundle(const ModelBundle& bundle, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ostringstream meta;
  char lr[64];
  std::snprintf(lr, sizeof lr, "%.17g", bundle.hyper.learning_rate);
  meta << "ratio = " << bundle.ratio << "\n"
       << "depth = " << bundle.net_cfg.depth << "\n"
       << "base_width = " << bundle.net_cfg.base_width << "\n"
       << "width_cap = " << bundle.net_cfg.width_cap << "\n"
       << "seed = " << bundle.hyper.seed << "\n"
       << "epochs = " << bundle.hyper.epochs << "\n"
       << "lr = " << lr << "\n"
       << "batch = " << bundle.hyper.batch_size << "\n"
       << "init = " << init_name(bundle.hyper.init) << "\n";
  for (const auto& [k, entry] : bundle.networks) {
    meta << "loss_k" << k << " = " << join(entry.epoch_loss) << "\n";
  }
  std::ofstream f(dir / "bundle.meta", std::ios::trunc);
  if (!f) throw Error(ErrorCode::Io, "cannot write " + (dir / "bundle.meta").string());
  f << meta.str();
  for (const auto& [k, entry] : bundle.networks) {
    nn::save_weights(entry.net, dir / ("k" + std::to_string(k) + ".wts"));
  }
}

ModelBundle load_bundle(const std::filesystem::path& dir) {
  std::ifstream f(dir / "bundle.meta");
  if (!f) throw Error(ErrorCode::Io, "cannot open " + (dir / "bundle.meta").string());
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(f, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t");
      const auto b = s.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  auto get = [&](const std::string& key) -> const std::string& {
    auto it = kv.find(key);
    if (it == kv.end()) throw Error(ErrorCode::BadMagic, (dir / "bundle.meta").string() + ": missing '" + key + "'");
    return it->second;
  };
  try {
    InterpNetConfig cfg{std::stoi(get("depth")), std::stoi(get("base_width")), std::stoi(get("width_cap"))};
    TrainingHyper hyper;
    hyper.seed = std::stoull(get("seed"));
    hyper.epochs = std::stoi(get("epochs"));
    hyper.learning_rate = std::stod(get("lr"));
    hyper.batch_size = std::stoi(get("batch"));
    hyper.init = parse_init(get("init"));
    ModelBundle b = make_bundle(std::stoi(get("ratio")), cfg, hyper);
    for (auto& [k, entry] : b.networks) {
      nn::load_weights(dir / ("k" + std::to_string(k) + ".wts"), entry.net);
      if (auto it = kv.find("loss_k" + std::to_string(k)); it != kv.end()) {
        std::stringstream ss(it->second);
        std::string item;
        while (std::getline(ss, item, ',')) entry.epoch_loss.push_back(std::stod(item));
      }
    }
    return b;
  } catch (const std::invalid_argument&) {
    throw Error(ErrorCode::BadMagic, (dir / "bundle.meta").string() + ": malformed value");
  } catch (const std::out_of_range&) {
    throw Error(ErrorCode::BadMagic, (dir / "bundle.meta").string() + ": value out of range");
  }
}

// ---------------------------------------------------------------------------

nn::UNet<float> build_enhance_net(const EnhanceConfig& cfg) { return nn::UNet<float>(cfg.unet()); }

std::vector<int> patch_starts(int extent, int patch, int overlap) {
  if (extent < patch) {
    throw Error(ErrorCode::TooSmall, "extent " + std::to_string(extent) + " smaller than patch " + std::to_string(patch));
  }
  const int stride = patch - overlap;
  if (stride < 1) throw Error(ErrorCode::BadSpec, "overlap must be smaller than the patch");
  std::vector<int> starts;
  for (int s = 0; s + patch <= extent; s += stride) starts.push_back(s);
  if (starts.back() + patch < extent) starts.push_back(extent - patch);
  return starts;
}

EnhanceModel make_enhance_model(const EnhanceConfig& cfg, const TrainingHyper& hyper) {
  auto net = build_enhance_net(cfg);
  net.initialize(network_seed(hyper.seed, 0x454E48));
  if (hyper.init != InitScheme::FanIn) {
    const double gain[1] = {1.0};
    net.anchor_output(gain);
  }
  return EnhanceModel{cfg, {}, std::move(net)};
}

EnhanceModel train_enhance_net(const std::vector<Sinogram>& inputs, const std::vector<Sinogram>& targets,
                               const EnhanceConfig& cfg, const TrainingHyper& hyper) {
  if (inputs.empty()) throw Error(ErrorCode::EmptyDataset, "no enhancement training sinograms");
  if (inputs.size() != targets.size()) throw Error(ErrorCode::ShapeMismatch, "inputs and targets differ in count");
  EnhanceModel model = make_enhance_model(cfg, hyper);
  const int P = cfg.patch;
  if (P % cfg.unet().length_divisor() != 0) {
    throw Error(ErrorCode::LengthNotDivisible, "patch size not divisible by 2^depth");
  }
  struct Patch {
    int sino, r0, c0;
  };
  std::vector<Patch> patches;
  for (int s = 0; s < static_cast<int>(inputs.size()); ++s) {
    if (inputs[s].rows() != targets[s].rows() || inputs[s].cols() != targets[s].cols()) {
      throw Error(ErrorCode::ShapeMismatch, "input/target sinogram shapes differ");
    }
    for (int r : patch_starts(inputs[s].rows(), P, cfg.overlap)) {
      for (int c : patch_starts(inputs[s].cols(), P, cfg.overlap)) patches.push_back({s, r, c});
    }
  }
  auto fill = [&](std::span<const std::size_t> idx, nn::Tensor<float>& in, nn::Tensor<float>& target) {
    const int B = static_cast<int>(idx.size());
    in = nn::Tensor<float>(B, 1, P, P);
    target = nn::Tensor<float>(B, 1, P, P);
    for (int b = 0; b < B; ++b) {
      const Patch& p = patches[idx[b]];
      for (int y = 0; y < P; ++y) {
        const auto src = inputs[p.sino].row(p.r0 + y).subspan(p.c0, P);
        const auto tgt = targets[p.sino].row(p.r0 + y).subspan(p.c0, P);
        std::copy(src.begin(), src.end(), in.sample(b) + static_cast<std::size_t>(y) * P);
        std::copy(tgt.begin(), tgt.end(), target.sample(b) + static_cast<std::size_t>(y) * P);
      }
    }
  };
  model.epoch_loss = fit(model.net, patches.size(), hyper, network_seed(hyper.seed, 0x454E48) ^ 0x5DEECE66DULL, fill);
  return model;
}

Sinogram enhance_sinogram(const Sinogram& dense, const EnhanceModel& model) {
  const int P = model.cfg.patch;
  if (dense.rows() < P || dense.cols() < P) {
    throw Error(ErrorCode::TooSmall, "sinogram " + std::to_string(dense.rows()) + "x" + std::to_string(dense.cols()) +
                                         " smaller than " + std::to_string(P) + "x" + std::to_string(P) + " patches");
  }
  const auto rows = patch_starts(dense.rows(), P, model.cfg.overlap);
  const auto cols = patch_starts(dense.cols(), P, model.cfg.overlap);
  std::vector<double> sum(dense.data().size(), 0.0);
  std::vector<int> count(dense.data().size(), 0);
  const int W = dense.cols();
  for (int r0 : rows) {
    auto in = nn::Tensor<float>(static_cast<int>(cols.size()), 1, P, P);
    for (std::size_t b = 0; b < cols.size(); ++b) {
      for (int y = 0; y < P; ++y) {
        const auto src = dense.row(r0 + y).subspan(cols[b], P);
        std::copy(src.begin(), src.end(), in.sample(static_cast<int>(b)) + static_cast<std::size_t>(y) * P);
      }
    }
    const auto pred = model.net.predict(in);
    for (std::size_t b = 0; b < cols.size(); ++b) {
      for (int y = 0; y < P; ++y) {
        const float* p = pred.sample(static_cast<int>(b)) + static_cast<std::size_t>(y) * P;
        const std::size_t base = static_cast<std::size_t>(r0 + y) * W + cols[b];
        for (int x = 0; x < P; ++x) {
          sum[base + x] += p[x];
          count[base + x] += 1;
        }
      }
    }
  }
  std::vector<float> out(sum.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<float>(sum[i] / count[i]);
  if (dense.norm()) clamp_unit(out);
  return Sinogram(dense.geometry(), std::move(out), dense.norm());
}

}  // namespace sinointerp
