#include "sinointerp/neural/weights_io.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>
#include <sstream>

#include "f32le.hpp"

namespace sinointerp::nn {
namespace {

struct Parsed {
  std::vector<LayerSpec> topology;
  std::size_t payload_offset = 0;
};

Parsed parse(const std::vector<char>& bytes, const std::filesystem::path& path) {
  std::size_t pos = 0;
  auto line = [&]() -> std::string {
    const auto begin = bytes.begin() + static_cast<std::ptrdiff_t>(pos);
    const auto it = std::find(begin, bytes.end(), '\n');
    if (it == bytes.end()) throw Error(ErrorCode::BadMagic, path.string() + ": unterminated weight header");
    std::string s(begin, it);
    pos = static_cast<std::size_t>(it - bytes.begin()) + 1;
    return s;
  };
  if (bytes.size() < 4 || std::string(bytes.data(), 4) != "WTS1") {
    throw Error(ErrorCode::BadMagic, path.string() + ": missing WTS1 magic");
  }
  std::istringstream head(line());
  std::string magic;
  int n_layers = -1;
  head >> magic >> n_layers;
  if (!head || n_layers < 1) throw Error(ErrorCode::BadMagic, path.string() + ": malformed WTS1 header");
  Parsed p;
  for (int i = 0; i < n_layers; ++i) p.topology.push_back(parse_layer_line(line()));
  p.payload_offset = pos;
  return p;
}

std::vector<char> read_all(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

std::string layer_line(const LayerSpec& s) {
  std::string kind = (s.kind == LayerKind::Conv ? "conv" : "tconv") + std::to_string(s.dims) + "d";
  return kind + " " + std::to_string(s.in_ch) + " " + std::to_string(s.out_ch) + " " + std::to_string(s.kernel) + " " +
         std::to_string(s.stride) + " " + std::to_string(s.padding) + " " +
         (s.act == Activation::LeakyRelu ? "lrelu" : "none");
}

LayerSpec parse_layer_line(const std::string& line) {
  std::istringstream ss(line);
  std::string kind, act;
  LayerSpec s;
  ss >> kind >> s.in_ch >> s.out_ch >> s.kernel >> s.stride >> s.padding >> act;
  if (!ss) throw Error(ErrorCode::BadMagic, "malformed layer line '" + line + "'");
  if (kind == "conv1d" || kind == "conv2d") {
    s.kind = LayerKind::Conv;
  } else if (kind == "tconv1d" || kind == "tconv2d") {
    s.kind = LayerKind::Transposed;
  } else {
    throw Error(ErrorCode::BadMagic, "unknown layer kind '" + kind + "'");
  }
  s.dims = kind.back() == 'd' && kind[kind.size() - 2] == '2' ? 2 : 1;
  if (act == "lrelu") {
    s.act = Activation::LeakyRelu;
  } else if (act == "none") {
    s.act = Activation::None;
  } else {
    throw Error(ErrorCode::BadMagic, "unknown activation '" + act + "'");
  }
  return s;
}

void save_weights(const UNet<float>& net, const std::filesystem::path& path) {
  std::string out = "WTS1 " + std::to_string(net.layers().size()) + "\n";
  for (const auto& l : net.layers()) out += layer_line(l.spec()) + "\n";
  for (const auto& l : net.layers()) {
    detail::encode_f32le(l.weights, out);
    detail::encode_f32le(l.bias, out);
  }
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(ErrorCode::Io, "cannot write " + path.string());
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw Error(ErrorCode::Io, "short write to " + path.string());
}

std::vector<LayerSpec> read_topology(const std::filesystem::path& path) {
  return parse(read_all(path), path).topology;
}

void load_weights(const std::filesystem::path& path, UNet<float>& net) {
  const auto bytes = read_all(path);
  const Parsed p = parse(bytes, path);
  const auto expected = net.topology();
  if (p.topology.size() != expected.size()) {
    throw Error(ErrorCode::TopologyMismatch, path.string() + ": file has " + std::to_string(p.topology.size()) +
                                                 " layers, network has " + std::to_string(expected.size()));
  }
  std::size_t floats = 0;
  for (std::size_t i = 0; i < expected.size(); ++i) {
    if (!(p.topology[i] == expected[i])) {
      throw Error(ErrorCode::TopologyMismatch, path.string() + ": layer " + std::to_string(i) + " is '" +
                                                   layer_line(p.topology[i]) + "', network expects '" +
                                                   layer_line(expected[i]) + "'");
    }
    floats += expected[i].weight_count() + static_cast<std::size_t>(expected[i].out_ch);
  }
  const std::size_t available = bytes.size() - p.payload_offset;
  if (available != floats * 4) {
    throw Error(ErrorCode::TruncatedPayload, path.string() + ": payload holds " + std::to_string(available) +
                                                 " bytes, topology needs " + std::to_string(floats * 4));
  }
  const char* cursor = bytes.data() + p.payload_offset;
  for (auto& l : net.layers()) {
    l.weights = detail::decode_f32le(cursor, l.weights.size());
    cursor += l.weights.size() * 4;
    l.bias = detail::decode_f32le(cursor, l.bias.size());
    cursor += l.bias.size() * 4;
  }
}

}  // namespace sinointerp::nn
