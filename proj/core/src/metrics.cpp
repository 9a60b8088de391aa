#include "cine/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "cine/io.hpp"

namespace cine {

namespace {

void require_image(const Tensor<double>& img, const char* what) {
  if (img.rank() != 2) throw DimensionError(std::string(what) + " expects a 2-D image, got " + shape_string(img.shape()));
  if (img.size() == 0) throw DimensionError(std::string(what) + " of an empty image");
}

double max_value(const Tensor<double>& img) { return *std::max_element(img.values().begin(), img.values().end()); }

// Summed-area table with a zero border: [h+1, w+1].
std::vector<double> integral(const Tensor<double>& img, const Tensor<double>* other) {
  const std::size_t h = img.dim(0), w = img.dim(1);
  std::vector<double> s((h + 1) * (w + 1), 0.0);
  for (std::size_t y = 0; y < h; ++y) {
    double row = 0.0;
    for (std::size_t x = 0; x < w; ++x) {
      const double v = img[y * w + x] * (other ? (*other)[y * w + x] : 1.0);
      row += v;
      s[(y + 1) * (w + 1) + x + 1] = s[y * (w + 1) + x + 1] + row;
    }
  }
  return s;
}

double box(const std::vector<double>& s, std::size_t w, std::size_t y, std::size_t x, std::size_t n) {
  const std::size_t stride = w + 1;
  return s[(y + n) * stride + x + n] - s[y * stride + x + n] - s[(y + n) * stride + x] + s[y * stride + x];
}

}  // namespace

Tensor<double> magnitude(const ComplexTensor<double>& z) {
  Tensor<double> out(z.shape());
  for (std::size_t i = 0; i < z.size(); ++i) out[i] = std::hypot(z.real[i], z.imag[i]);
  return out;
}

void normalize_to_reference(Tensor<double>& ref, Tensor<double>& test) {
  require_same_shape(ref.shape(), test.shape(), "normalize_to_reference");
  const double peak = ref.size() ? max_value(ref) : 0.0;
  if (!(peak > 0.0)) return;
  for (double& v : ref.values()) v /= peak;
  for (double& v : test.values()) v /= peak;
}

double mse(const Tensor<double>& ref, const Tensor<double>& test) {
  require_same_shape(ref.shape(), test.shape(), "mse");
  if (ref.size() == 0) throw DimensionError("mse of empty images");
  double acc = 0.0;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    const double d = ref[i] - test[i];
    acc += d * d;
  }
  return acc / static_cast<double>(ref.size());
}

double psnr(const Tensor<double>& ref, const Tensor<double>& test) {
  const double e = mse(ref, test);
  const double peak = max_value(ref);
  if (e <= 1e-20 * peak * peak) return kInfinitePsnr;
  return 10.0 * std::log10(peak * peak / e);
}

double ssim(const Tensor<double>& ref, const Tensor<double>& test, const SsimOptions& o) {
  require_image(ref, "ssim");
  require_same_shape(ref.shape(), test.shape(), "ssim");
  const std::size_t h = ref.dim(0), w = ref.dim(1), n = o.window;
  if (n == 0 || h < n || w < n) {
    throw DimensionError("ssim window " + std::to_string(n) + " does not fit image " + shape_string(ref.shape()));
  }
  const double c1 = (o.k1 * o.dynamic_range) * (o.k1 * o.dynamic_range);
  const double c2 = (o.k2 * o.dynamic_range) * (o.k2 * o.dynamic_range);
  const auto sa = integral(ref, nullptr), sb = integral(test, nullptr);
  const auto saa = integral(ref, &ref), sbb = integral(test, &test), sab = integral(ref, &test);
  const double area = static_cast<double>(n * n);
  double total = 0.0;
  for (std::size_t y = 0; y + n <= h; ++y) {
    for (std::size_t x = 0; x + n <= w; ++x) {
      const double ma = box(sa, w, y, x, n) / area;
      const double mb = box(sb, w, y, x, n) / area;
      const double va = box(saa, w, y, x, n) / area - ma * ma;
      const double vb = box(sbb, w, y, x, n) / area - mb * mb;
      const double cov = box(sab, w, y, x, n) / area - ma * mb;
      total += ((2 * ma * mb + c1) * (2 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
    }
  }
  return total / static_cast<double>((h - n + 1) * (w - n + 1));
}

double second_moment_sigma(const Tensor<double>& img) {
  if (img.size() == 0) throw DimensionError("second_moment_sigma of an empty image");
  const double peak = max_value(img);
  const double scale = peak > 0.0 ? 255.0 / peak : 0.0;
  // Shifted by the first pixel so a constant image gives exactly zero.
  const double n = static_cast<double>(img.size());
  const double shift = img[0];
  double sum = 0.0, sum_sq = 0.0;
  for (double v : img.values()) {
    const double d = (v - shift) * scale;
    sum += d;
    sum_sq += d * d;
  }
  const double var = std::max(0.0, sum_sq / n - (sum / n) * (sum / n));
  return std::sqrt(var);
}

Tensor<double> yt_profile(const ComplexTensor<double>& volume, std::size_t x_index) {
  if (volume.shape().size() != 3) throw DimensionError("yt_profile expects [nt, ny, nx]");
  const std::size_t nt = volume.shape()[0], ny = volume.shape()[1], nx = volume.shape()[2];
  if (x_index >= nx) throw DimensionError("yt_profile: x index " + std::to_string(x_index) + " out of range");
  Tensor<double> out({ny, nt});
  for (std::size_t t = 0; t < nt; ++t) {
    for (std::size_t y = 0; y < ny; ++y) {
      out.at(y, t) = std::hypot(volume.real.at(t, y, x_index), volume.imag.at(t, y, x_index));
    }
  }
  return out;
}

Tensor<double> error_map(const Tensor<double>& ref, const Tensor<double>& test, double lo, double hi) {
  require_same_shape(ref.shape(), test.shape(), "error_map");
  if (!(hi > lo)) throw ConfigError("error map display range must satisfy lo < hi");
  Tensor<double> out(ref.shape());
  for (std::size_t i = 0; i < ref.size(); ++i) out[i] = std::clamp(std::abs(ref[i] - test[i]), lo, hi);
  return out;
}

Tensor<std::uint8_t> to_gray8(const Tensor<double>& img, double lo, double hi) {
  if (!(hi > lo)) throw ConfigError("display range must satisfy lo < hi");
  Tensor<std::uint8_t> out(img.shape());
  for (std::size_t i = 0; i < img.size(); ++i) {
    const double v = std::round(255.0 * (img[i] - lo) / (hi - lo));
    out[i] = static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
  }
  return out;
}

MetricsSummary summarize(const std::vector<MetricsRow>& rows, const std::string& label) {
  MetricsSummary s;
  s.mean.volume = label + "/mean";
  s.stddev.volume = label + "/std";
  if (rows.empty()) return s;
  const double n = static_cast<double>(rows.size());
  auto column = [&](double MetricsRow::*field) {
    double mean = 0.0;
    for (const auto& r : rows) mean += r.*field;
    mean /= n;
    double var = 0.0;
    for (const auto& r : rows) var += (r.*field - mean) * (r.*field - mean);
    s.mean.*field = mean;
    s.stddev.*field = std::isfinite(mean) ? std::sqrt(var / n) : std::numeric_limits<double>::quiet_NaN();
  };
  column(&MetricsRow::mse);
  column(&MetricsRow::psnr_db);
  column(&MetricsRow::ssim);
  column(&MetricsRow::sigma);
  column(&MetricsRow::runtime_s);
  return s;
}

std::string format_metric(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

std::string metrics_csv_line(const MetricsRow& r) {
  return r.volume + "," + format_metric(r.mse) + "," + format_metric(r.psnr_db) + "," + format_metric(r.ssim) + "," +
         format_metric(r.sigma) + "," + format_metric(r.runtime_s);
}

MetricsRow parse_metrics_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (cells.size() != 6) throw IoError("metrics row needs 6 columns: '" + line + "'");
  auto num = [&line](const std::string& s) {
    try {
      return std::stod(s);
    } catch (const std::exception&) {
      throw IoError("bad number '" + s + "' in metrics row '" + line + "'");
    }
  };
  return MetricsRow{cells[0], num(cells[1]), num(cells[2]), num(cells[3]), num(cells[4]), num(cells[5])};
}

void write_metrics_csv(const std::filesystem::path& path, const std::vector<MetricsRow>& rows) {
  std::string text = std::string(kMetricsHeader) + "\n";
  for (const auto& r : rows) text += metrics_csv_line(r) + "\n";
  write_text(path, text);
}

std::vector<MetricsRow> read_metrics_csv(const std::filesystem::path& path) {
  std::istringstream in(read_text(path));
  std::string line;
  if (!std::getline(in, line) || line != kMetricsHeader) throw IoError(path.string() + ": missing metrics header");
  std::vector<MetricsRow> rows;
  while (std::getline(in, line)) {
    if (!line.empty()) rows.push_back(parse_metrics_csv_line(line));
  }
  return rows;
}

}  // namespace cine
