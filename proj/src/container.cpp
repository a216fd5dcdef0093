#include "sinointerp/container.hpp"

#include "f32le.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

namespace sinointerp {
namespace {

constexpr std::string_view kMagic = "SCT1";

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<double> parse_doubles(std::string_view text, const std::filesystem::path& path) {
  std::vector<double> out;
  std::stringstream ss{std::string(text)};
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
    } catch (const std::exception&) {
      throw Error(ErrorCode::BadMagic, path.string() + ": malformed number '" + item + "'");
    }
  }
  return out;
}

std::vector<char> read_all(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::Io, "short write to " + path.string());
}

struct Header {
  std::string kind;
  int rows = 0;
  int cols = 0;
  std::optional<std::vector<double>> angles;
  std::optional<std::vector<double>> geometry;
  std::optional<NormParams> norm;
  std::size_t payload_offset = 0;
};

Header parse_header(const std::vector<char>& bytes, const std::filesystem::path& path) {
  Header h;
  auto next_line = [&](std::size_t from) -> std::optional<std::string_view> {
    auto it = std::find(bytes.begin() + static_cast<std::ptrdiff_t>(from), bytes.end(), '\n');
    if (it == bytes.end()) return std::nullopt;
    return std::string_view(bytes.data() + from, static_cast<std::size_t>(it - bytes.begin()) - from);
  };

  if (bytes.size() < kMagic.size() || std::string_view(bytes.data(), kMagic.size()) != kMagic) {
    throw Error(ErrorCode::BadMagic, path.string() + ": missing SCT1 magic");
  }
  auto first = next_line(0);
  if (!first) throw Error(ErrorCode::BadMagic, path.string() + ": unterminated header line");
  {
    std::istringstream ss{std::string(*first)};
    std::string magic, dtype;
    ss >> magic >> h.kind >> h.rows >> h.cols >> dtype;
    if (!ss || magic != kMagic || (h.kind != "sino" && h.kind != "img") || dtype != "f32le") {
      throw Error(ErrorCode::BadMagic, path.string() + ": malformed header '" + std::string(*first) + "'");
    }
    if (h.rows < 1 || h.cols < 1) throw Error(ErrorCode::DimensionMismatch, path.string() + ": non-positive dimensions");
  }
  std::size_t pos = first->size() + 1;

  auto starts_with = [&](std::string_view key) {
    return bytes.size() - pos >= key.size() && std::string_view(bytes.data() + pos, key.size()) == key;
  };
  for (;;) {
    std::string_view key;
    for (std::string_view k : {std::string_view("angles:"), std::string_view("geometry:"), std::string_view("norm:")}) {
      if (starts_with(k)) key = k;
    }
    if (key.empty()) break;
    auto line = next_line(pos);
    if (!line) throw Error(ErrorCode::TruncatedPayload, path.string() + ": unterminated '" + std::string(key) + "' line");
    auto values = parse_doubles(line->substr(key.size()), path);
    if (key == "angles:") {
      h.angles = std::move(values);
    } else if (key == "geometry:") {
      if (values.size() != 4) throw Error(ErrorCode::BadMagic, path.string() + ": geometry line needs 4 values");
      h.geometry = std::move(values);
    } else {
      if (values.size() != 2) throw Error(ErrorCode::BadMagic, path.string() + ": norm line needs 2 values");
      h.norm = NormParams{values[0], values[1]};
    }
    pos += line->size() + 1;
  }
  h.payload_offset = pos;
  return h;
}

}  // namespace

Container load_container(const std::filesystem::path& path) {
  const auto bytes = read_all(path);
  const Header h = parse_header(bytes, path);
  const std::size_t count = static_cast<std::size_t>(h.rows) * h.cols;
  const std::size_t available = bytes.size() - h.payload_offset;
  if (available < count * 4) {
    throw Error(ErrorCode::TruncatedPayload, path.string() + ": header declares " + std::to_string(h.rows) + "x" +
                                                 std::to_string(h.cols) + " but payload holds " +
                                                 std::to_string(available / 4) + " values");
  }
  if (available > count * 4) {
    throw Error(ErrorCode::DimensionMismatch, path.string() + ": " + std::to_string(available - count * 4) +
                                                  " trailing bytes after payload");
  }
  auto data = detail::decode_f32le(bytes.data() + h.payload_offset, count);

  if (h.kind == "img") {
    if (h.rows != h.cols) throw Error(ErrorCode::DimensionMismatch, path.string() + ": images must be square");
    return Image(h.rows, std::move(data));
  }

  ScanGeometry g;
  g.n_angles = h.rows;
  g.n_detectors = h.cols;
  g.image_size = h.cols;
  g.detector_pitch = 1.0;
  if (h.angles) {
    if (h.angles->size() != static_cast<std::size_t>(h.rows)) {
      throw Error(ErrorCode::DimensionMismatch, path.string() + ": angles line has " +
                                                    std::to_string(h.angles->size()) + " entries for " +
                                                    std::to_string(h.rows) + " rows");
    }
    g.angle_start_deg = (*h.angles)[0];
    g.angle_step_deg = h.rows > 1 ? (*h.angles)[1] - (*h.angles)[0] : 1.0;
  }
  if (h.geometry) {
    g.angle_start_deg = (*h.geometry)[0];
    g.angle_step_deg = (*h.geometry)[1];
    g.detector_pitch = (*h.geometry)[2];
    g.image_size = static_cast<int>((*h.geometry)[3]);
  }
  return Sinogram(g, std::move(data), h.norm);
}

Sinogram load_sinogram(const std::filesystem::path& path) {
  auto c = load_container(path);
  if (auto* s = std::get_if<Sinogram>(&c)) return std::move(*s);
  throw Error(ErrorCode::BadMagic, path.string() + ": expected a sinogram container, found an image");
}

Image load_image(const std::filesystem::path& path) {
  auto c = load_container(path);
  if (auto* img = std::get_if<Image>(&c)) return std::move(*img);
  throw Error(ErrorCode::BadMagic, path.string() + ": expected an image container, found a sinogram");
}

void save_container(const Sinogram& s, const std::filesystem::path& path) {
  const auto& g = s.geometry();
  std::string out = "SCT1 sino " + std::to_string(s.rows()) + " " + std::to_string(s.cols()) + " f32le\n";
  out += "angles: ";
  for (int a = 0; a < s.rows(); ++a) {
    if (a) out += ',';
    out += format_double(g.angle_deg(a));
  }
  out += '\n';
  out += "geometry: " + format_double(g.angle_start_deg) + "," + format_double(g.angle_step_deg) + "," +
         format_double(g.detector_pitch) + "," + std::to_string(g.image_size) + "\n";
  if (s.norm()) out += "norm: " + format_double(s.norm()->vmin) + "," + format_double(s.norm()->vmax) + "\n";
  detail::encode_f32le(s.data(), out);
  write_file(path, out);
}

void save_container(const Image& img, const std::filesystem::path& path) {
  std::string out = "SCT1 img " + std::to_string(img.size()) + " " + std::to_string(img.size()) + " f32le\n";
  detail::encode_f32le(img.data(), out);
  write_file(path, out);
}

void write_pgm(const std::filesystem::path& path, int rows, int cols, std::span<const float> values) {
  if (values.size() != static_cast<std::size_t>(rows) * cols) {
    throw Error(ErrorCode::DimensionMismatch, "pgm export: value count does not match " + std::to_string(rows) + "x" +
                                                  std::to_string(cols));
  }
  float lo = 0.0f, hi = 0.0f;
  if (!values.empty()) {
    const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
    lo = *mn;
    hi = *mx;
  }
  const double scale = hi > lo ? 255.0 / (static_cast<double>(hi) - lo) : 0.0;
  std::string out = "P5\n" + std::to_string(cols) + " " + std::to_string(rows) + "\n255\n";
  out.reserve(out.size() + values.size());
  for (float v : values) {
    out.push_back(static_cast<char>(static_cast<unsigned char>(std::lround((v - lo) * scale))));
  }
  write_file(path, out);
}

void write_pgm(const Image& img, const std::filesystem::path& path) {
  write_pgm(path, img.size(), img.size(), img.data());
}

void write_pgm(const Sinogram& s, const std::filesystem::path& path) {
  write_pgm(path, s.rows(), s.cols(), s.data());
}

}  // namespace sinointerp
