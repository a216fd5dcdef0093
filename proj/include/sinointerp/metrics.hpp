#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sinointerp/core.hpp"
#include "sinointerp/projector.hpp"
#include "sinointerp/recon.hpp"

namespace sinointerp {

/// 20 log10(peak) - 10 log10(MSE), peak being the largest entry of A and B
/// taken together. Identical arrays give +infinity.
double psnr(std::span<const float> a, std::span<const float> b);
double psnr(const Sinogram& a, const Sinogram& b);
double psnr(const Image& a, const Image& b);

/// PSNR over the concatenation of all rows at each offset k = 1..R-1.
std::vector<std::pair<int, double>> angular_psnr(const Sinogram& estimated, const Sinogram& truth, int ratio);

/// Reconstructs `estimated` (denormalized first if it carries a norm record)
/// with SIRT and compares it to `truth`.
double image_psnr(const Sinogram& estimated, const Image& truth, const ProjectorConfig& cfg, const ReconConfig& rc);

/// One line of metrics.csv. Aggregate rows have no offset; per-offset rows
/// carry angular PSNR in `sinogram_psnr` and no image PSNR.
struct MetricsRow {
  std::string sample_id;
  std::string method;
  int ratio = 0;
  std::optional<int> offset;
  std::optional<double> sinogram_psnr;
  std::optional<double> image_psnr;
};

/// Appends mean rows (sample_id "mean") over every (method, R, offset) group.
/// Infinite values propagate to an infinite mean.
std::vector<MetricsRow> with_means(const std::vector<MetricsRow>& rows);

inline constexpr const char* kCsvHeader = "sample_id,method,R,offset,sinogram_psnr,image_psnr";

/// Full precision ("%.17g"), infinities written as "inf".
std::string format_db(double v);
/// Two-decimal rendering for human-facing tables.
std::string format_db_short(double v);

void write_csv(const std::vector<MetricsRow>& rows, const std::filesystem::path& path);
std::vector<MetricsRow> read_csv(const std::filesystem::path& path);

/// Rasterizes the mean angular-PSNR curve of every method at ratio R as a
/// binary PGM line plot (one gray level per method, white background).
void write_angular_plot(const std::vector<MetricsRow>& rows, int ratio, const std::filesystem::path& path);

/// Writes one plot per ratio found in the rows, named angular_R<R>.pgm.
std::vector<std::filesystem::path> write_plots(const std::vector<MetricsRow>& rows, const std::filesystem::path& dir);

/// Human-readable per-method summary of the mean rows.
std::string summary_table(const std::vector<MetricsRow>& rows);

}  // namespace sinointerp
