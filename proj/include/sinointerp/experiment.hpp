#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "sinointerp/core.hpp"
#include "sinointerp/learned_interp.hpp"
#include "sinointerp/metrics.hpp"
#include "sinointerp/recon.hpp"

namespace sinointerp {

/// Everything `evaluate` needs; all randomness flows from `seed`.
struct ExperimentConfig {
  ScanGeometry geometry;  // dense scan
  double sampling_step = 0.5;
  std::vector<int> ratios{16};
  int n_train = 40;
  int n_test = 5;
  InterpNetConfig net;
  TrainingHyper hyper;
  bool enhance = false;
  EnhanceConfig enhance_cfg;
  bool midpoint_average = false;
  int sirt_iterations = 10;
  bool image_metrics = true;
  std::uint64_t seed = 1;

  void validate() const;
};

/// Flat `key = value` rendering, one key per line, in a fixed order.
std::string config_to_text(const ExperimentConfig& cfg);
/// Applies one key; throws BadSpec for unknown keys or malformed values.
void apply_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& value);
/// Applies every `key = value` line of a config file ('#' starts a comment).
void apply_config_file(ExperimentConfig& cfg, const std::filesystem::path& path);

/// Desk-scale dense geometry: 257 angles over 180 degrees, 256 bins, 256 px.
ScanGeometry desk_geometry();
/// Reads a geometry file (`key = value`: n_angles, angle_start_deg,
/// angle_step_deg, n_detectors, detector_pitch, image_size).
ScanGeometry load_geometry(const std::filesystem::path& path);

struct Dataset {
  std::vector<Image> phantoms;
  std::vector<Sinogram> dense;  // normalized
};

/// Phantoms first_index .. first_index+count-1 of the run and their
/// normalized dense sinograms.
Dataset make_dataset(const ExperimentConfig& cfg, int first_index, int count);

struct ExperimentResult {
  std::vector<MetricsRow> rows;  // per-sample rows followed by mean rows
  std::map<int, ModelBundle> bundles;
  Dataset test;
  /// Estimated dense sinograms of the first test sample, by "<method>_R<R>".
  std::map<std::string, Sinogram> showcase;
};

ExperimentResult run_experiment(const ExperimentConfig& cfg, std::ostream* log = nullptr);

/// run_experiment plus the run directory: config.txt, bundle/R<R>/,
/// sinograms/, images/, metrics.csv, plots/.
ExperimentResult run_evaluate(const ExperimentConfig& cfg, const std::filesystem::path& out_dir,
                              std::ostream* log = nullptr);

}  // namespace sinointerp
