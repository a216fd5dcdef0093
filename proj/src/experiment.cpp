#include "sinointerp/experiment.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>

#include "sinointerp/container.hpp"
#include "sinointerp/interp_baseline.hpp"
#include "sinointerp/phantom.hpp"
#include "sinointerp/projector.hpp"

namespace sinointerp {
namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t");
  const auto b = s.find_last_not_of(" \t\r\n");
  return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
}

std::vector<std::pair<std::string, std::string>> read_kv(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::vector<std::pair<std::string, std::string>> out;
  std::string line;
  int lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::BadSpec, path.string() + ":" + std::to_string(lineno) + ": expected 'key = value'");
    }
    out.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return out;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <typename F>
auto parse_or_throw(const std::string& key, const std::string& value, F&& f) {
  try {
    std::size_t used = 0;
    auto v = f(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorCode::BadSpec, "bad value '" + value + "' for '" + key + "'");
  }
}

int to_int(const std::string& key, const std::string& v) {
  return parse_or_throw(key, v, [](const std::string& s, std::size_t* u) { return std::stoi(s, u); });
}
double to_double(const std::string& key, const std::string& v) {
  return parse_or_throw(key, v, [](const std::string& s, std::size_t* u) { return std::stod(s, u); });
}
bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "on") return true;
  if (v == "false" || v == "0" || v == "off") return false;
  throw Error(ErrorCode::BadSpec, "bad boolean '" + v + "' for '" + key + "'");
}

bool apply_geometry_value(ScanGeometry& g, const std::string& key, const std::string& value) {
  if (key == "n_angles") g.n_angles = to_int(key, value);
  else if (key == "angle_start_deg") g.angle_start_deg = to_double(key, value);
  else if (key == "angle_step_deg") g.angle_step_deg = to_double(key, value);
  else if (key == "n_detectors") g.n_detectors = to_int(key, value);
  else if (key == "detector_pitch") g.detector_pitch = to_double(key, value);
  else if (key == "image_size") g.image_size = to_int(key, value);
  else return false;
  return true;
}

}  // namespace

void ExperimentConfig::validate() const {
  geometry.validate();
  if (ratios.empty()) throw Error(ErrorCode::BadSpec, "at least one ratio is required");
  for (int R : ratios) {
    InterpolationPlan{R};
    if ((geometry.n_angles - 1) % R != 0) {
      throw Error(ErrorCode::IndivisibleAngles, std::to_string(geometry.n_angles - 1) +
                                                    " angle intervals not divisible by R=" + std::to_string(R));
    }
  }
  if (n_train < 1) throw Error(ErrorCode::EmptyDataset, "need at least one training phantom");
  if (n_test < 1) throw Error(ErrorCode::EmptyDataset, "need at least one test phantom");
  if (geometry.n_detectors % net.unet().length_divisor() != 0) {
    throw Error(ErrorCode::LengthNotDivisible, "n_detectors " + std::to_string(geometry.n_detectors) +
                                                   " not divisible by 2^" + std::to_string(net.depth));
  }
  if (sirt_iterations < 1) throw Error(ErrorCode::BadSpec, "sirt_iterations must be >= 1");
}

std::string config_to_text(const ExperimentConfig& c) {
  std::ostringstream o;
  std::string ratios;
  for (std::size_t i = 0; i < c.ratios.size(); ++i) ratios += (i ? "," : "") + std::to_string(c.ratios[i]);
  o << "seed = " << c.seed << "\n"
    << "n_angles = " << c.geometry.n_angles << "\n"
    << "angle_start_deg = " << fmt(c.geometry.angle_start_deg) << "\n"
    << "angle_step_deg = " << fmt(c.geometry.angle_step_deg) << "\n"
    << "n_detectors = " << c.geometry.n_detectors << "\n"
    << "detector_pitch = " << fmt(c.geometry.detector_pitch) << "\n"
    << "image_size = " << c.geometry.image_size << "\n"
    << "sampling_step = " << fmt(c.sampling_step) << "\n"
    << "ratios = " << ratios << "\n"
    << "train = " << c.n_train << "\n"
    << "test = " << c.n_test << "\n"
    << "depth = " << c.net.depth << "\n"
    << "width = " << c.net.base_width << "\n"
    << "width_cap = " << c.net.width_cap << "\n"
    << "epochs = " << c.hyper.epochs << "\n"
    << "lr = " << fmt(c.hyper.learning_rate) << "\n"
    << "batch = " << c.hyper.batch_size << "\n"
    << "init = " << init_name(c.hyper.init) << "\n"
    << "enhance = " << (c.enhance ? "true" : "false") << "\n"
    << "enhance_depth = " << c.enhance_cfg.depth << "\n"
    << "enhance_width = " << c.enhance_cfg.base_width << "\n"
    << "midpoint_avg = " << (c.midpoint_average ? "true" : "false") << "\n"
    << "sirt_iterations = " << c.sirt_iterations << "\n"
    << "image_metrics = " << (c.image_metrics ? "true" : "false") << "\n";
  return o.str();
}

void apply_config_value(ExperimentConfig& c, const std::string& key, const std::string& value) {
  if (apply_geometry_value(c.geometry, key, value)) return;
  if (key == "seed") {
    c.seed = parse_or_throw(key, value, [](const std::string& s, std::size_t* u) { return std::stoull(s, u); });
  } else if (key == "sampling_step") {
    c.sampling_step = to_double(key, value);
  } else if (key == "ratios" || key == "ratio") {
    c.ratios.clear();
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) c.ratios.push_back(to_int(key, trim(item)));
  } else if (key == "train") {
    c.n_train = to_int(key, value);
  } else if (key == "test") {
    c.n_test = to_int(key, value);
  } else if (key == "depth") {
    c.net.depth = to_int(key, value);
  } else if (key == "width") {
    c.net.base_width = to_int(key, value);
  } else if (key == "width_cap") {
    c.net.width_cap = to_int(key, value);
  } else if (key == "epochs") {
    c.hyper.epochs = to_int(key, value);
  } else if (key == "lr") {
    c.hyper.learning_rate = to_double(key, value);
  } else if (key == "batch") {
    c.hyper.batch_size = to_int(key, value);
  } else if (key == "init") {
    c.hyper.init = parse_init(value);
  } else if (key == "enhance") {
    c.enhance = to_bool(key, value);
  } else if (key == "enhance_depth") {
    c.enhance_cfg.depth = to_int(key, value);
  } else if (key == "enhance_width") {
    c.enhance_cfg.base_width = to_int(key, value);
  } else if (key == "midpoint_avg") {
    c.midpoint_average = to_bool(key, value);
  } else if (key == "sirt_iterations") {
    c.sirt_iterations = to_int(key, value);
  } else if (key == "image_metrics") {
    c.image_metrics = to_bool(key, value);
  } else {
    throw Error(ErrorCode::BadSpec, "unknown config key '" + key + "'");
  }
}

void apply_config_file(ExperimentConfig& cfg, const std::filesystem::path& path) {
  for (const auto& [k, v] : read_kv(path)) apply_config_value(cfg, k, v);
}

ScanGeometry desk_geometry() {
  ScanGeometry g;
  g.n_angles = 257;
  g.angle_start_deg = 0.0;
  g.angle_step_deg = 180.0 / 256.0;
  g.n_detectors = 256;
  g.detector_pitch = 1.0;
  g.image_size = 256;
  return g;
}

ScanGeometry load_geometry(const std::filesystem::path& path) {
  ScanGeometry g;
  for (const auto& [k, v] : read_kv(path)) {
    if (!apply_geometry_value(g, k, v)) throw Error(ErrorCode::BadSpec, path.string() + ": unknown key '" + k + "'");
  }
  g.validate();
  return g;
}

Dataset make_dataset(const ExperimentConfig& cfg, int first_index, int count) {
  Dataset ds;
  const ProjectorConfig pc{cfg.geometry, cfg.sampling_step};
  for (int i = 0; i < count; ++i) {
    ds.phantoms.push_back(generate_phantom(phantom_spec_for(cfg.seed, first_index + i, cfg.geometry.image_size)));
    ds.dense.push_back(normalize(forward_project(ds.phantoms.back(), pc)));
  }
  return ds;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, std::ostream* log) {
  cfg.validate();
  auto say = [&](const std::string& s) {
    if (log) *log << s << std::endl;
  };
  const ProjectorConfig pc{cfg.geometry, cfg.sampling_step};
  const ReconConfig rc{cfg.sirt_iterations, 1.0, false};

  say("generating " + std::to_string(cfg.n_train) + " training and " + std::to_string(cfg.n_test) + " test phantoms");
  const Dataset train = make_dataset(cfg, 0, cfg.n_train);
  ExperimentResult result;
  result.test = make_dataset(cfg, cfg.n_train, cfg.n_test);
  const Dataset& test = result.test;

  std::vector<double> full_image_psnr(test.dense.size());
  if (cfg.image_metrics) {
    for (std::size_t t = 0; t < test.dense.size(); ++t) {
      full_image_psnr[t] = image_psnr(test.dense[t], test.phantoms[t], pc, rc);
    }
  }

  std::vector<MetricsRow> rows;
  for (int R : cfg.ratios) {
    say("R=" + std::to_string(R) + ": training " + std::to_string(number_of_networks(R)) + " network(s)");
    ModelBundle bundle = train_bundle(train.dense, R, cfg.net, cfg.hyper);
    for (const auto& [k, entry] : bundle.networks) {
      std::string line = "  k=" + std::to_string(k) + " epoch loss:";
      for (double l : entry.epoch_loss) line += " " + format_db(l);
      say(line);
    }

    using Method = std::pair<std::string, std::function<Sinogram(const Sinogram&)>>;
    const std::vector<Method> methods{
        {"linear", [&](const Sinogram& s) { return linear_interpolate(s, R); }},
        {"nearest", [&](const Sinogram& s) { return nearest_upsample(s, R); }},
        {"bilinear", [&](const Sinogram& s) { return bilinear_upsample(s, R); }},
        {"learned", [&](const Sinogram& s) { return interpolate_learned(s, R, bundle, cfg.midpoint_average); }},
    };

    std::map<std::string, EnhanceModel> enhancers;
    if (cfg.enhance) {
      for (const auto& [name, fn] : methods) {
        say("R=" + std::to_string(R) + ": training enhancement net on " + name + " inputs");
        std::vector<Sinogram> inputs;
        for (const auto& d : train.dense) inputs.push_back(fn(subsample(d, R)));
        enhancers.emplace(name, train_enhance_net(inputs, train.dense, cfg.enhance_cfg, cfg.hyper));
      }
    }

    for (std::size_t t = 0; t < test.dense.size(); ++t) {
      const std::string sample_id = "test" + std::to_string(t);
      const Sinogram& truth = test.dense[t];
      const Sinogram scarce = subsample(truth, R);

      MetricsRow full{sample_id, "full", R, std::nullopt, std::numeric_limits<double>::infinity(), std::nullopt};
      if (cfg.image_metrics) full.image_psnr = full_image_psnr[t];
      rows.push_back(full);

      auto record = [&](const std::string& name, const Sinogram& est) {
        MetricsRow agg{sample_id, name, R, std::nullopt, psnr(est, truth), std::nullopt};
        if (cfg.image_metrics) agg.image_psnr = image_psnr(est, test.phantoms[t], pc, rc);
        rows.push_back(agg);
        for (const auto& [k, db] : angular_psnr(est, truth, R)) {
          rows.push_back({sample_id, name, R, k, db, std::nullopt});
        }
        if (t == 0) result.showcase.insert_or_assign(name + "_R" + std::to_string(R), est);
      };
      for (const auto& [name, fn] : methods) {
        const Sinogram est = fn(scarce);
        record(name, est);
        if (cfg.enhance) record(name + "+enhance", enhance_sinogram(est, enhancers.at(name)));
      }
    }
    say("R=" + std::to_string(R) + ": evaluated " + std::to_string(test.dense.size()) + " test phantoms");
    result.bundles.emplace(R, std::move(bundle));
  }
  result.rows = with_means(rows);
  return result;
}

ExperimentResult run_evaluate(const ExperimentConfig& cfg, const std::filesystem::path& out_dir, std::ostream* log) {
  std::filesystem::create_directories(out_dir);
  {
    std::ofstream f(out_dir / "config.txt", std::ios::trunc);
    if (!f) throw Error(ErrorCode::Io, "cannot write " + (out_dir / "config.txt").string());
    f << config_to_text(cfg);
  }
  ExperimentResult result = run_experiment(cfg, log);
  for (const auto& [R, bundle] : result.bundles) save_bundle(bundle, out_dir / "bundle" / ("R" + std::to_string(R)));
  save_container(result.test.dense.front(), out_dir / "sinograms" / "truth.sct");
  write_pgm(result.test.dense.front(), out_dir / "sinograms" / "truth.pgm");
  for (const auto& [name, sino] : result.showcase) {
    save_container(sino, out_dir / "sinograms" / (name + ".sct"));
    write_pgm(sino, out_dir / "sinograms" / (name + ".pgm"));
  }
  save_container(result.test.phantoms.front(), out_dir / "images" / "phantom.sct");
  write_pgm(result.test.phantoms.front(), out_dir / "images" / "phantom.pgm");
  write_csv(result.rows, out_dir / "metrics.csv");
  write_plots(result.rows, out_dir / "plots");
  return result;
}

}  // namespace sinointerp
