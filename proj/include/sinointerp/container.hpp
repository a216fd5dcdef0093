#pragma once

#include <filesystem>
#include <span>
#include <variant>

#include "sinointerp/core.hpp"

namespace sinointerp {

// On-disk layout:
//
//   SCT1 <sino|img> <rows> <cols> f32le\n
//   angles: a0,a1,...\n              (sino only)
//   geometry: start,step,pitch,size\n (sino only, optional on read)
//   norm: vmin,vmax\n                 (sino only, present iff normalized)
//   <rows*cols little-endian float32, row-major>
//
// Readers accept the optional lines in any order. Numbers are written with
// 17 significant digits so header fields survive a round trip exactly.

using Container = std::variant<Sinogram, Image>;

Container load_container(const std::filesystem::path& path);
Sinogram load_sinogram(const std::filesystem::path& path);
Image load_image(const std::filesystem::path& path);

void save_container(const Sinogram& s, const std::filesystem::path& path);
void save_container(const Image& img, const std::filesystem::path& path);

/// Binary 8-bit PGM (P5), min-max scaled. A constant array maps to black.
void write_pgm(const std::filesystem::path& path, int rows, int cols, std::span<const float> values);
void write_pgm(const Image& img, const std::filesystem::path& path);
void write_pgm(const Sinogram& s, const std::filesystem::path& path);

}  // namespace sinointerp
