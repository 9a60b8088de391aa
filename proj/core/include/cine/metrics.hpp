#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include "cine/encoding.hpp"

namespace cine {

Tensor<double> magnitude(const ComplexTensor<double>& z);

// Scales both images by 1 / max(ref) so the reference peaks at 1. A zero reference is left as is.
void normalize_to_reference(Tensor<double>& ref, Tensor<double>& test);

double mse(const Tensor<double>& ref, const Tensor<double>& test);

// Returned when the images agree to within rounding (mse <= 1e-20 * peak^2).
inline constexpr double kInfinitePsnr = std::numeric_limits<double>::infinity();

// 10 log10(peak^2 / mse) with peak = max(ref); kInfinitePsnr for matching images.
double psnr(const Tensor<double>& ref, const Tensor<double>& test);

struct SsimOptions {
  std::size_t window = 7;
  double k1 = 0.01;
  double k2 = 0.03;
  double dynamic_range = 1.0;
};

// Mean of the local SSIM map over all fully contained uniform windows (population moments).
double ssim(const Tensor<double>& ref, const Tensor<double>& test, const SsimOptions& options = {});

// Standard deviation of the image after linear rescaling to [0, 255] by its maximum.
double second_moment_sigma(const Tensor<double>& img);

// |vol(t, y, x_index)| arranged as [ny, nt].
Tensor<double> yt_profile(const ComplexTensor<double>& volume, std::size_t x_index);

// |ref - test| clipped to [lo, hi].
Tensor<double> error_map(const Tensor<double>& ref, const Tensor<double>& test, double lo, double hi);

// 8-bit export: round(255 * (v - lo) / (hi - lo)), clamped to [0, 255].
Tensor<std::uint8_t> to_gray8(const Tensor<double>& img, double lo, double hi);

struct MetricsRow {
  std::string volume;
  double mse = 0.0;
  double psnr_db = 0.0;
  double ssim = 0.0;
  double sigma = 0.0;
  double runtime_s = 0.0;
};

struct MetricsSummary {
  MetricsRow mean;
  MetricsRow stddev;  // population standard deviation
};

// Mean and standard deviation of every column. Infinite PSNR values propagate.
MetricsSummary summarize(const std::vector<MetricsRow>& rows, const std::string& label);

inline constexpr const char* kMetricsHeader = "volume,mse,psnr_db,ssim,sigma,runtime_s";

std::string format_metric(double v);
std::string metrics_csv_line(const MetricsRow& row);
MetricsRow parse_metrics_csv_line(const std::string& line);

void write_metrics_csv(const std::filesystem::path& path, const std::vector<MetricsRow>& rows);
std::vector<MetricsRow> read_metrics_csv(const std::filesystem::path& path);

}  // namespace cine
