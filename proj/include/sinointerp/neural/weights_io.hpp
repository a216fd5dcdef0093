#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "sinointerp/neural/unet.hpp"

namespace sinointerp::nn {

// Weight file:
//
//   WTS1 <n_layers>\n
//   <kind> <in> <out> <k> <s> <p> <act>\n    (one per layer)
//   float32 little-endian: weights then bias, layer by layer
//
// kind is conv1d | tconv1d | conv2d | tconv2d, act is lrelu | none.

std::string layer_line(const LayerSpec& s);
LayerSpec parse_layer_line(const std::string& line);

void save_weights(const UNet<float>& net, const std::filesystem::path& path);

/// Loads into an already-built network; the file's topology must match it
/// layer for layer (TopologyMismatch otherwise).
void load_weights(const std::filesystem::path& path, UNet<float>& net);

/// Topology declared by a weight file, without reading the payload.
std::vector<LayerSpec> read_topology(const std::filesystem::path& path);

}  // namespace sinointerp::nn
