#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "sinointerp/container.hpp"
#include "sinointerp/core.hpp"
#include "sinointerp/error.hpp"
#include "sinointerp/experiment.hpp"
#include "sinointerp/interp_baseline.hpp"
#include "sinointerp/learned_interp.hpp"
#include "sinointerp/metrics.hpp"
#include "sinointerp/neural/weights_io.hpp"
#include "sinointerp/phantom.hpp"
#include "sinointerp/projector.hpp"
#include "sinointerp/recon.hpp"

namespace fs = std::filesystem;
using namespace sinointerp;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Flag values override the config file, which overrides built-in defaults.
struct ExperimentFlags {
  std::optional<std::string> config;
  std::optional<std::string> geometry;
  std::optional<std::string> ratio;
  std::optional<int> train;
  std::optional<int> test;
  std::optional<int> depth;
  std::optional<int> width;
  std::optional<int> epochs;
  std::optional<double> lr;
  std::optional<int> batch;
  std::optional<std::string> init;
  bool enhance = false;
  bool midpoint_avg = false;
  bool no_image_metrics = false;

  void attach(CLI::App* app, bool with_eval_flags) {
    app->add_option("--config", config, "key = value config file");
    app->add_option("--geometry", geometry, "geometry file, 'default' (513x512) or 'desk' (257x256)");
    app->add_option("--ratio", ratio, "subsampling ratio, or a comma list");
    app->add_option("--train", train, "number of training phantoms");
    app->add_option("--depth", depth, "U-net depth");
    app->add_option("--width", width, "U-net base width");
    app->add_option("--epochs", epochs);
    app->add_option("--lr", lr, "Adam learning rate");
    app->add_option("--batch", batch);
    app->add_option("--init", init, "fitted|anchored|fanin");
    if (with_eval_flags) {
      app->add_option("--test", test, "number of test phantoms");
      app->add_flag("--enhance", enhance, "also run the 2D enhancement stage");
      app->add_flag("--midpoint-avg", midpoint_avg, "average both input orders at the midpoint row");
      app->add_flag("--no-image-metrics", no_image_metrics, "skip SIRT reconstructions");
    }
  }

  ExperimentConfig resolve(std::uint64_t seed, bool seed_given) const {
    ExperimentConfig cfg;
    cfg.geometry = ScanGeometry{};
    if (config) apply_config_file(cfg, *config);
    if (geometry) {
      if (*geometry == "default") cfg.geometry = ScanGeometry{};
      else if (*geometry == "desk") cfg.geometry = desk_geometry();
      else cfg.geometry = load_geometry(*geometry);
    }
    if (seed_given) cfg.seed = seed;
    if (ratio) apply_config_value(cfg, "ratios", *ratio);
    if (train) cfg.n_train = *train;
    if (test) cfg.n_test = *test;
    if (depth) cfg.net.depth = *depth;
    if (width) cfg.net.base_width = *width;
    if (epochs) cfg.hyper.epochs = *epochs;
    if (lr) cfg.hyper.learning_rate = *lr;
    if (batch) cfg.hyper.batch_size = *batch;
    if (init) apply_config_value(cfg, "init", *init);
    if (enhance) cfg.enhance = true;
    if (midpoint_avg) cfg.midpoint_average = true;
    if (no_image_metrics) cfg.image_metrics = false;
    cfg.hyper.seed = cfg.seed;
    return cfg;
  }
};

ScanGeometry geometry_from_flag(const std::string& flag) {
  if (flag == "default") return ScanGeometry{};
  if (flag == "desk") return desk_geometry();
  return load_geometry(flag);
}

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::Io:
    case ErrorCode::BadMagic:
    case ErrorCode::TruncatedPayload:
    case ErrorCode::DimensionMismatch:
    case ErrorCode::TopologyMismatch:
      return 1;
    default:
      return 2;
  }
}

void save_enhance_model(const EnhanceModel& m, const fs::path& dir) {
  fs::create_directories(dir);
  std::ofstream meta(dir / "enhance.meta", std::ios::trunc);
  if (!meta) throw Error(ErrorCode::Io, "cannot write " + (dir / "enhance.meta").string());
  meta << "depth = " << m.cfg.depth << "\nbase_width = " << m.cfg.base_width << "\nwidth_cap = " << m.cfg.width_cap
       << "\npatch = " << m.cfg.patch << "\noverlap = " << m.cfg.overlap << "\n";
  nn::save_weights(m.net, dir / "net.wts");
}

EnhanceModel load_enhance_model(const fs::path& dir) {
  std::ifstream meta(dir / "enhance.meta");
  if (!meta) throw Error(ErrorCode::Io, "cannot open " + (dir / "enhance.meta").string());
  EnhanceConfig cfg;
  std::string key, eq;
  int value = 0;
  while (meta >> key >> eq >> value) {
    if (key == "depth") cfg.depth = value;
    else if (key == "base_width") cfg.base_width = value;
    else if (key == "width_cap") cfg.width_cap = value;
    else if (key == "patch") cfg.patch = value;
    else if (key == "overlap") cfg.overlap = value;
  }
  EnhanceModel m{cfg, {}, build_enhance_net(cfg)};
  nn::load_weights(dir / "net.wts", m.net);
  return m;
}

Sinogram run_method(const std::string& method, const Sinogram& scarce, int ratio, const ModelBundle* bundle,
                    bool midpoint_avg) {
  if (method == "linear") return linear_interpolate(scarce, ratio);
  if (method == "nearest") return nearest_upsample(scarce, ratio);
  if (method == "bilinear") return bilinear_upsample(scarce, ratio);
  if (method == "learned") {
    if (!bundle) throw UsageError("--method learned needs --bundle");
    return interpolate_learned(scarce, ratio, *bundle, midpoint_avg);
  }
  throw UsageError("unknown --method '" + method + "'");
}

std::string default_run_name() {
  const std::time_t now = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y%m%d-%H%M%S", std::localtime(&now));
  return buf;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse-view sinogram interpolation toolkit"};
  app.require_subcommand(1);
  std::uint64_t seed = 1;
  auto* seed_opt = app.add_option("--seed", seed, "run seed")->capture_default_str();
  bool quiet = false;
  app.add_flag("-q,--quiet", quiet, "no progress output");

  // phantom
  auto* c_phantom = app.add_subcommand("phantom", "generate a random ellipse phantom");
  int ph_size = 256, ph_index = 0;
  std::optional<int> ph_ellipses;
  std::string ph_out;
  bool ph_pgm = false;
  c_phantom->add_option("--size", ph_size)->capture_default_str();
  c_phantom->add_option("--index", ph_index, "phantom index within the run")->capture_default_str();
  c_phantom->add_option("--ellipses", ph_ellipses);
  c_phantom->add_option("--out", ph_out)->required();
  c_phantom->add_flag("--pgm", ph_pgm, "also write a .pgm preview");

  // project
  auto* c_project = app.add_subcommand("project", "forward-project an image into a sinogram");
  std::string pr_in, pr_out, pr_geometry = "default";
  double pr_step = 0.5;
  bool pr_normalize = false;
  c_project->add_option("--in", pr_in)->required();
  c_project->add_option("--out", pr_out)->required();
  c_project->add_option("--geometry", pr_geometry)->capture_default_str();
  c_project->add_option("--step", pr_step, "ray sampling step in pixels")->capture_default_str();
  c_project->add_flag("--normalize", pr_normalize, "min-max normalize to [0, 1]");

  // subsample
  auto* c_sub = app.add_subcommand("subsample", "keep every R-th projection");
  std::string sb_in, sb_out;
  int sb_ratio = 16;
  c_sub->add_option("--in", sb_in)->required();
  c_sub->add_option("--out", sb_out)->required();
  c_sub->add_option("--ratio", sb_ratio)->capture_default_str();

  // interpolate
  auto* c_interp = app.add_subcommand("interpolate", "restore a dense sinogram from a scarce one");
  std::string ip_in, ip_out, ip_method = "linear", ip_bundle;
  int ip_ratio = 16;
  bool ip_mid = false;
  c_interp->add_option("--in", ip_in)->required();
  c_interp->add_option("--out", ip_out)->required();
  c_interp->add_option("--ratio", ip_ratio)->capture_default_str();
  c_interp->add_option("--method", ip_method, "linear|nearest|bilinear|learned")->capture_default_str();
  c_interp->add_option("--bundle", ip_bundle, "model bundle directory (learned)");
  c_interp->add_flag("--midpoint-avg", ip_mid);

  // train
  auto* c_train = app.add_subcommand("train", "train one network per offset class on generated phantoms");
  ExperimentFlags tr_flags;
  std::string tr_out;
  tr_flags.attach(c_train, false);
  c_train->add_option("--out", tr_out, "bundle directory")->required();

  // enhance
  auto* c_enh = app.add_subcommand("enhance", "2D patch enhancement of a dense sinogram");
  ExperimentFlags en_flags;
  std::string en_in, en_out, en_model, en_save, en_method = "linear";
  en_flags.attach(c_enh, false);
  c_enh->add_option("--in", en_in)->required();
  c_enh->add_option("--out", en_out)->required();
  c_enh->add_option("--model", en_model, "load a trained enhancement model instead of training");
  c_enh->add_option("--save-model", en_save, "write the trained model here");
  c_enh->add_option("--method", en_method, "interpolator that produces the training inputs")->capture_default_str();

  // reconstruct
  auto* c_rec = app.add_subcommand("reconstruct", "SIRT/SART reconstruction");
  std::string rc_in, rc_out, rc_solver = "sirt";
  ReconConfig rc_cfg;
  double rc_step = 0.5;
  bool rc_pgm = false;
  c_rec->add_option("--in", rc_in)->required();
  c_rec->add_option("--out", rc_out)->required();
  c_rec->add_option("--solver", rc_solver, "sirt|sart")->capture_default_str();
  c_rec->add_option("--iterations", rc_cfg.iterations)->capture_default_str();
  c_rec->add_option("--relaxation", rc_cfg.relaxation)->capture_default_str();
  c_rec->add_flag("--nonneg", rc_cfg.nonneg_clamp, "clamp negative pixels after each update");
  c_rec->add_option("--step", rc_step, "ray sampling step in pixels")->capture_default_str();
  c_rec->add_flag("--pgm", rc_pgm, "also write a .pgm preview");

  // evaluate
  auto* c_eval = app.add_subcommand("evaluate", "full comparison run with CSV and plots");
  ExperimentFlags ev_flags;
  std::string ev_out;
  ev_flags.attach(c_eval, true);
  c_eval->add_option("--out", ev_out, "run directory (default runs/<timestamp>)");

  // report
  auto* c_report = app.add_subcommand("report", "regenerate plots and a summary from metrics.csv");
  std::string rp_in, rp_out;
  c_report->add_option("--in", rp_in, "metrics.csv")->required();
  c_report->add_option("--out", rp_out, "plot directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  std::ostream* log = quiet ? nullptr : &std::cerr;
  const bool seed_given = seed_opt->count() > 0;

  try {
    if (*c_phantom) {
      PhantomSpec spec = phantom_spec_for(seed, ph_index, ph_size);
      if (ph_ellipses) spec.n_ellipses = *ph_ellipses;
      const Image img = generate_phantom(spec);
      save_container(img, ph_out);
      if (ph_pgm) write_pgm(img, fs::path(ph_out).replace_extension(".pgm"));
    } else if (*c_project) {
      const Image img = load_image(pr_in);
      ScanGeometry g = geometry_from_flag(pr_geometry);
      g.image_size = img.size();
      Sinogram s = forward_project(img, ProjectorConfig{g, pr_step});
      if (pr_normalize) s = normalize(s);
      save_container(s, pr_out);
    } else if (*c_sub) {
      save_container(subsample(load_sinogram(sb_in), sb_ratio), sb_out);
    } else if (*c_interp) {
      std::optional<ModelBundle> bundle;
      if (!ip_bundle.empty()) bundle = load_bundle(ip_bundle);
      const Sinogram scarce = load_sinogram(ip_in);
      save_container(run_method(ip_method, scarce, ip_ratio, bundle ? &*bundle : nullptr, ip_mid), ip_out);
    } else if (*c_train) {
      ExperimentConfig cfg = tr_flags.resolve(seed, seed_given);
      cfg.n_test = 1;
      cfg.validate();
      if (cfg.ratios.size() != 1) throw UsageError("train takes a single --ratio");
      if (log) *log << "generating " << cfg.n_train << " training phantoms" << std::endl;
      const Dataset ds = make_dataset(cfg, 0, cfg.n_train);
      const ModelBundle b = train_bundle(ds.dense, cfg.ratios.front(), cfg.net, cfg.hyper);
      save_bundle(b, tr_out);
      if (log) {
        for (const auto& [k, n] : b.networks) {
          *log << "k=" << k << " final loss " << format_db(n.epoch_loss.empty() ? 0.0 : n.epoch_loss.back()) << "\n";
        }
      }
    } else if (*c_enh) {
      const Sinogram dense = load_sinogram(en_in);
      std::optional<EnhanceModel> model;
      if (!en_model.empty()) {
        model = load_enhance_model(en_model);
      } else {
        ExperimentConfig cfg = en_flags.resolve(seed, seed_given);
        cfg.n_test = 1;
        cfg.validate();
        if (cfg.ratios.size() != 1) throw UsageError("enhance takes a single --ratio");
        const int R = cfg.ratios.front();
        if (log) *log << "generating " << cfg.n_train << " training phantoms" << std::endl;
        const Dataset ds = make_dataset(cfg, 0, cfg.n_train);
        std::optional<ModelBundle> bundle;
        if (en_method == "learned") bundle = train_bundle(ds.dense, R, cfg.net, cfg.hyper);
        std::vector<Sinogram> inputs;
        for (const auto& d : ds.dense) {
          inputs.push_back(run_method(en_method, subsample(d, R), R, bundle ? &*bundle : nullptr, false));
        }
        model = train_enhance_net(inputs, ds.dense, cfg.enhance_cfg, cfg.hyper);
        if (!en_save.empty()) save_enhance_model(*model, en_save);
      }
      save_container(enhance_sinogram(dense, *model), en_out);
    } else if (*c_rec) {
      const Sinogram s = load_sinogram(rc_in);
      const Sinogram raw = s.norm() ? denormalize(s) : s;
      const ProjectorConfig pc{raw.geometry(), rc_step};
      Image img = rc_solver == "sirt"   ? sirt(raw, pc, rc_cfg)
                  : rc_solver == "sart" ? sart(raw, pc, rc_cfg)
                                        : throw UsageError("unknown --solver '" + rc_solver + "'");
      save_container(img, rc_out);
      if (rc_pgm) write_pgm(img, fs::path(rc_out).replace_extension(".pgm"));
    } else if (*c_eval) {
      const ExperimentConfig cfg = ev_flags.resolve(seed, seed_given);
      const fs::path out = ev_out.empty() ? fs::path("runs") / default_run_name() : fs::path(ev_out);
      const ExperimentResult r = run_evaluate(cfg, out, log);
      std::cout << summary_table(r.rows);
      if (log) *log << "wrote " << (out / "metrics.csv").string() << std::endl;
    } else if (*c_report) {
      const auto rows = read_csv(rp_in);
      write_plots(rows, rp_out);
      std::cout << summary_table(rows);
    }
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
