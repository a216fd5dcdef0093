#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <vector>

#include "sinointerp/core.hpp"
#include "sinointerp/neural/unet.hpp"

namespace sinointerp {

/// Interpolation U-net shape. The full-size network is depth 7, base width
/// 32, width cap 1024.
struct InterpNetConfig {
  int depth = 4;
  int base_width = 8;
  int width_cap = 128;

  nn::UNetConfig unet() const { return {2, depth, base_width, width_cap, 1}; }
  static InterpNetConfig full() { return {7, 32, 1024}; }
};

nn::UNet<float> build_interp_net(const InterpNetConfig& cfg);

enum class InitScheme {
  FanIn,     // every layer uniform(+-sqrt(1/fan_in))
  Anchored,  // FanIn, then the output layer starts as the linear-interpolation weights
  Fitted,    // Anchored, then the output layer's raw-input kernels and bias are the
             // least-squares fit to the training pairs of the class
};

const char* init_name(InitScheme s);
/// "fanin", "anchored" or "fitted"; throws BadSpec otherwise.
InitScheme parse_init(const std::string& name);

struct TrainingHyper {
  int epochs = 4;
  double learning_rate = 1e-4;
  int batch_size = 16;
  std::uint64_t seed = 0;
  InitScheme init = InitScheme::Fitted;
};

/// Samples for one offset class, stored as [count x 2 x L] inputs and
/// [count x L] targets. Channel 0 always holds the reference closer to the
/// target row.
struct PairDataset {
  int length = 0;
  std::vector<float> inputs;
  std::vector<float> targets;
  struct Source {
    int sinogram;
    int near_row;
    int far_row;
    int target_row;
  };
  std::vector<Source> sources;

  std::size_t size() const { return sources.size(); }
};

/// For every reference pair (A_i, A_{i+R}) of each dense sinogram: emits
/// ((A_i, A_{i+R}) -> A_{i+k}) and ((A_{i+R}, A_i) -> A_{i+R-k}) when k < R/2,
/// and only the first when k == R/2.
PairDataset make_training_pairs(const std::vector<Sinogram>& dense, int ratio, int offset);

struct TrainedNetwork {
  int offset_class = 0;
  std::vector<double> epoch_loss;
  nn::UNet<float> net;
};

struct ModelBundle {
  int ratio = 2;
  InterpNetConfig net_cfg;
  TrainingHyper hyper;
  std::map<int, TrainedNetwork> networks;  // keyed by offset class 1..floor(R/2)

  /// Network serving dense offset k in [1, R-1].
  const TrainedNetwork& for_offset(int offset) const;
};

/// Freshly initialized (untrained) bundle.
ModelBundle make_bundle(int ratio, const InterpNetConfig& cfg, const TrainingHyper& hyper);

/// Trains one network per offset class on normalized dense sinograms. Each
/// class is trained independently and deterministically from hyper.seed.
ModelBundle train_bundle(const std::vector<Sinogram>& train, int ratio, const InterpNetConfig& cfg,
                         const TrainingHyper& hyper);

/// Dense sinogram whose reference rows are copied from `scarce` and whose
/// other rows come from the bundle's networks, fed (closer, farther). When
/// `midpoint_average` is set the midpoint row averages both input orders.
/// Inferred rows of a normalized sinogram are clamped to [0, 1].
Sinogram interpolate_learned(const Sinogram& scarce, int ratio, const ModelBundle& bundle,
                             bool midpoint_average = false);

/// Writes bundle.meta and k<offset>.wts into `dir`.
void save_bundle(const ModelBundle& bundle, const std::filesystem::path& dir);
ModelBundle load_bundle(const std::filesystem::path& dir);

// ---------------------------------------------------------------------------
// Patch-based 2D enhancement of a dense sinogram.

struct EnhanceConfig {
  int depth = 3;
  int base_width = 8;
  int width_cap = 128;
  int patch = 64;
  int overlap = 32;

  nn::UNetConfig unet() const { return {1, depth, base_width, width_cap, 2}; }
  static EnhanceConfig full() { return {5, 32, 1024, 64, 32}; }
};

nn::UNet<float> build_enhance_net(const EnhanceConfig& cfg);

/// Top-left corners along one axis: 0, patch-overlap, ... and a final patch
/// flush with the far edge. Throws TooSmall if extent < patch.
std::vector<int> patch_starts(int extent, int patch, int overlap);

struct EnhanceModel {
  EnhanceConfig cfg;
  std::vector<double> epoch_loss;
  nn::UNet<float> net;
};

EnhanceModel make_enhance_model(const EnhanceConfig& cfg, const TrainingHyper& hyper);

/// Trains on aligned (interpolated, ground-truth) dense sinogram pairs.
EnhanceModel train_enhance_net(const std::vector<Sinogram>& inputs, const std::vector<Sinogram>& targets,
                               const EnhanceConfig& cfg, const TrainingHyper& hyper);

/// Runs the net over the patch grid and averages overlapping predictions.
Sinogram enhance_sinogram(const Sinogram& dense, const EnhanceModel& model);

}  // namespace sinointerp
