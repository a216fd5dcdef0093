#include "sinointerp/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

#include "sinointerp/container.hpp"

namespace sinointerp {

double psnr(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::ShapeMismatch, "psnr of arrays with " + std::to_string(a.size()) + " and " +
                                              std::to_string(b.size()) + " values");
  }
  if (a.empty()) throw Error(ErrorCode::EmptyInput, "psnr of empty arrays");
  double peak = -std::numeric_limits<double>::infinity();
  double sq = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    peak = std::max({peak, static_cast<double>(a[i]), static_cast<double>(b[i])});
    const double d = static_cast<double>(a[i]) - b[i];
    sq += d * d;
  }
  if (sq == 0.0) return std::numeric_limits<double>::infinity();
  if (peak <= 0.0) {
    // Non-positive data has no meaningful peak; fall back to the largest magnitude.
    peak = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) peak = std::max({peak, std::abs(double(a[i])), std::abs(double(b[i]))});
  }
  const double mse = sq / static_cast<double>(a.size());
  return 20.0 * std::log10(peak) - 10.0 * std::log10(mse);
}

double psnr(const Sinogram& a, const Sinogram& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw Error(ErrorCode::ShapeMismatch, "sinogram shapes differ");
  return psnr(a.data(), b.data());
}

double psnr(const Image& a, const Image& b) {
  if (a.size() != b.size()) throw Error(ErrorCode::ShapeMismatch, "image sizes differ");
  return psnr(a.data(), b.data());
}

std::vector<std::pair<int, double>> angular_psnr(const Sinogram& estimated, const Sinogram& truth, int ratio) {
  if (estimated.rows() != truth.rows() || estimated.cols() != truth.cols()) {
    throw Error(ErrorCode::ShapeMismatch, "estimated and true sinograms differ in shape");
  }
  const InterpolationPlan plan(ratio);
  if ((truth.rows() - 1) % ratio != 0) {
    throw Error(ErrorCode::ShapeMismatch, std::to_string(truth.rows()) + " rows do not fit R=" + std::to_string(ratio));
  }
  std::vector<std::pair<int, double>> out;
  std::vector<float> ea, ta;
  for (int k = 1; k < ratio; ++k) {
    ea.clear();
    ta.clear();
    for (int j = k; j < truth.rows(); j += ratio) {
      const auto e = estimated.row(j), t = truth.row(j);
      ea.insert(ea.end(), e.begin(), e.end());
      ta.insert(ta.end(), t.begin(), t.end());
    }
    out.emplace_back(k, psnr(ea, ta));
  }
  return out;
}

double image_psnr(const Sinogram& estimated, const Image& truth, const ProjectorConfig& cfg, const ReconConfig& rc) {
  const Image rec = sirt(denormalize(estimated), cfg, rc);
  return psnr(rec, truth);
}

std::vector<MetricsRow> with_means(const std::vector<MetricsRow>& rows) {
  using Key = std::tuple<std::string, int, int>;  // method, R, offset (-1 = aggregate)
  struct Acc {
    double sino = 0.0, image = 0.0;
    int n_sino = 0, n_image = 0;
  };
  std::map<Key, Acc> groups;
  std::vector<Key> order;
  for (const auto& r : rows) {
    if (r.sample_id == "mean") continue;
    const Key key{r.method, r.ratio, r.offset.value_or(-1)};
    auto [it, inserted] = groups.try_emplace(key);
    if (inserted) order.push_back(key);
    if (r.sinogram_psnr) {
      it->second.sino += *r.sinogram_psnr;
      ++it->second.n_sino;
    }
    if (r.image_psnr) {
      it->second.image += *r.image_psnr;
      ++it->second.n_image;
    }
  }
  std::vector<MetricsRow> out;
  for (const auto& r : rows) {
    if (r.sample_id != "mean") out.push_back(r);
  }
  for (const auto& key : order) {
    const Acc& a = groups.at(key);
    MetricsRow m;
    m.sample_id = "mean";
    m.method = std::get<0>(key);
    m.ratio = std::get<1>(key);
    if (std::get<2>(key) >= 0) m.offset = std::get<2>(key);
    if (a.n_sino) m.sinogram_psnr = a.sino / a.n_sino;
    if (a.n_image) m.image_psnr = a.image / a.n_image;
    out.push_back(m);
  }
  return out;
}

std::string format_db(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string format_db_short(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

void write_csv(const std::vector<MetricsRow>& rows, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(ErrorCode::Io, "cannot write " + path.string());
  f << kCsvHeader << "\n";
  for (const auto& r : rows) {
    f << r.sample_id << ',' << r.method << ',' << r.ratio << ',' << (r.offset ? std::to_string(*r.offset) : "") << ','
      << (r.sinogram_psnr ? format_db(*r.sinogram_psnr) : "") << ','
      << (r.image_psnr ? format_db(*r.image_psnr) : "") << "\n";
  }
}

std::vector<MetricsRow> read_csv(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::string line;
  if (!std::getline(f, line) || line != kCsvHeader) {
    throw Error(ErrorCode::BadMagic, path.string() + ": unexpected CSV header");
  }
  auto number = [&](const std::string& s) -> std::optional<double> {
    if (s.empty()) return std::nullopt;
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    try {
      return std::stod(s);
    } catch (const std::exception&) {
      throw Error(ErrorCode::BadMagic, path.string() + ": bad number '" + s + "'");
    }
  };
  std::vector<MetricsRow> rows;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    if (cells.size() != 6) throw Error(ErrorCode::BadMagic, path.string() + ": row has " + std::to_string(cells.size()) + " cells");
    MetricsRow r;
    r.sample_id = cells[0];
    r.method = cells[1];
    r.ratio = std::stoi(cells[2]);
    if (!cells[3].empty()) r.offset = std::stoi(cells[3]);
    r.sinogram_psnr = number(cells[4]);
    r.image_psnr = number(cells[5]);
    rows.push_back(r);
  }
  return rows;
}

namespace {

class Canvas {
 public:
  Canvas(int w, int h) : w_(w), h_(h), px_(static_cast<std::size_t>(w) * h, 255.0f) {}

  void set(int x, int y, float v) {
    if (x >= 0 && x < w_ && y >= 0 && y < h_) px_[static_cast<std::size_t>(y) * w_ + x] = v;
  }

  void line(int x0, int y0, int x1, int y1, float v) {
    const int dx = std::abs(x1 - x0), sx = x0 < x1 ? 1 : -1;
    const int dy = -std::abs(y1 - y0), sy = y0 < y1 ? 1 : -1;
    int err = dx + dy;
    for (;;) {
      set(x0, y0, v);
      set(x0, y0 + 1, v);
      if (x0 == x1 && y0 == y1) break;
      const int e2 = 2 * err;
      if (e2 >= dy) {
        err += dy;
        x0 += sx;
      }
      if (e2 <= dx) {
        err += dx;
        y0 += sy;
      }
    }
  }

  void write(const std::filesystem::path& path) const {
    // Fixed 0..255 mapping, not min-max, so the raster is content-stable.
    std::string out = "P5\n" + std::to_string(w_) + " " + std::to_string(h_) + "\n255\n";
    for (float v : px_) out.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(v))));
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw Error(ErrorCode::Io, "cannot write " + path.string());
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
  }

 private:
  int w_, h_;
  std::vector<float> px_;
};

}  // namespace

void write_angular_plot(const std::vector<MetricsRow>& rows, int ratio, const std::filesystem::path& path) {
  std::map<std::string, std::map<int, double>> curves;
  std::vector<std::string> methods;
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& r : rows) {
    if (r.sample_id != "mean" || r.ratio != ratio || !r.offset || !r.sinogram_psnr) continue;
    if (!std::isfinite(*r.sinogram_psnr)) continue;
    if (!curves.count(r.method)) methods.push_back(r.method);
    curves[r.method][*r.offset] = *r.sinogram_psnr;
    lo = std::min(lo, *r.sinogram_psnr);
    hi = std::max(hi, *r.sinogram_psnr);
  }
  constexpr int W = 480, H = 240, M = 20;
  Canvas canvas(W, H);
  canvas.line(M, H - M, W - M, H - M, 0.0f);
  canvas.line(M, M, M, H - M, 0.0f);
  if (!methods.empty()) {
    if (hi - lo < 1e-9) {
      lo -= 1.0;
      hi += 1.0;
    }
    const int span_k = std::max(1, ratio - 2);
    auto px = [&](int k) { return M + static_cast<int>(std::lround((k - 1) * (W - 2.0 * M) / span_k)); };
    auto py = [&](double db) { return H - M - static_cast<int>(std::lround((db - lo) / (hi - lo) * (H - 2.0 * M))); };
    for (std::size_t m = 0; m < methods.size(); ++m) {
      const float gray = static_cast<float>(40 * (m % 5));
      const auto& curve = curves[methods[m]];
      std::optional<std::pair<int, int>> prev;
      for (const auto& [k, db] : curve) {
        const std::pair<int, int> p{px(k), py(db)};
        if (prev) canvas.line(prev->first, prev->second, p.first, p.second, gray);
        for (int d = -2; d <= 2; ++d) canvas.set(p.first + d, p.second, gray);
        prev = p;
      }
    }
  }
  canvas.write(path);
}

std::vector<std::filesystem::path> write_plots(const std::vector<MetricsRow>& rows, const std::filesystem::path& dir) {
  std::set<int> ratios;
  for (const auto& r : rows) ratios.insert(r.ratio);
  std::vector<std::filesystem::path> out;
  for (int R : ratios) {
    auto p = dir / ("angular_R" + std::to_string(R) + ".pgm");
    write_angular_plot(rows, R, p);
    out.push_back(p);
  }
  return out;
}

std::string summary_table(const std::vector<MetricsRow>& rows) {
  std::ostringstream out;
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-18s %4s %14s %12s\n", "method", "R", "sinogram-PSNR", "image-PSNR");
  out << buf;
  for (const auto& r : rows) {
    if (r.sample_id != "mean" || r.offset) continue;
    std::snprintf(buf, sizeof buf, "%-18s %4d %14s %12s\n", r.method.c_str(), r.ratio,
                  r.sinogram_psnr ? format_db_short(*r.sinogram_psnr).c_str() : "-",
                  r.image_psnr ? format_db_short(*r.image_psnr).c_str() : "-");
    out << buf;
  }
  return out.str();
}

}  // namespace sinointerp
