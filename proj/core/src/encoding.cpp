#include "cine/encoding.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "cine/fft.hpp"

namespace cine {
namespace {

void check_extents(const Shape& shape, std::size_t rank, const char* what) {
  if (shape.size() != rank) throw DimensionError(std::string(what) + ": unexpected rank " + shape_string(shape));
}

void check_config(const EncodingConfig& cfg, std::size_t nt, std::size_t ny, std::size_t nx, const char* what) {
  if (cfg.mask.nt() != nt || cfg.mask.ny() != ny) {
    throw DimensionError(std::string(what) + ": mask is " + std::to_string(cfg.mask.ny()) + "x" +
                         std::to_string(cfg.mask.nt()) + " (ny x nt), data has ny=" + std::to_string(ny) +
                         " nt=" + std::to_string(nt));
  }
  if (cfg.csm.maps.shape().size() != 3 || cfg.csm.ny() != ny || cfg.csm.nx() != nx) {
    throw DimensionError(std::string(what) + ": coil maps " + shape_string(cfg.csm.maps.shape()) +
                         " do not match image " + std::to_string(ny) + "x" + std::to_string(nx));
  }
}

// Zero rows of one FFT-ordered plane not sampled in `frame`.
void mask_plane(double* re, double* im, const SamplingMask& mask, std::size_t frame, std::size_t nx) {
  for (std::size_t l = 0; l < mask.ny(); ++l) {
    if (mask.sampled(l, frame)) continue;
    const std::size_t row = mask.fft_row(l) * nx;
    std::fill(re + row, re + row + nx, 0.0);
    std::fill(im + row, im + row + nx, 0.0);
  }
}

}  // namespace

CoilSensitivities simulate_coil_sensitivities(std::size_t nx, std::size_t ny, std::size_t nc, std::uint64_t seed) {
  if (nc < 1) throw ConfigError("coil count must be >= 1");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double cx = 0.5 * static_cast<double>(nx);
  const double cy = 0.5 * static_cast<double>(ny);
  const double radius = 0.5 * static_cast<double>(std::min(nx, ny));
  const double width = 0.45 * static_cast<double>(std::min(nx, ny));

  ComplexTensor<double> maps({nc, ny, nx});
  for (std::size_t c = 0; c < nc; ++c) {
    const double jitter = (unit(rng) - 0.5) * 0.4 * std::numbers::pi / static_cast<double>(nc);
    const double angle = 2.0 * std::numbers::pi * static_cast<double>(c) / static_cast<double>(nc) + jitter;
    const double px = cx + radius * std::cos(angle);
    const double py = cy + radius * std::sin(angle);
    // Phase ramps span at most +-pi/2 across the field of view.
    const double slope_x = (unit(rng) - 0.5) * std::numbers::pi / static_cast<double>(nx);
    const double slope_y = (unit(rng) - 0.5) * std::numbers::pi / static_cast<double>(ny);
    const double offset = (unit(rng) - 0.5) * std::numbers::pi;
    for (std::size_t y = 0; y < ny; ++y) {
      for (std::size_t x = 0; x < nx; ++x) {
        const double dx = static_cast<double>(x) - px;
        const double dy = static_cast<double>(y) - py;
        const double mag = std::exp(-(dx * dx + dy * dy) / (2.0 * width * width));
        const double phase = offset + slope_x * (static_cast<double>(x) - cx) + slope_y * (static_cast<double>(y) - cy);
        maps.real.at(c, y, x) = mag * std::cos(phase);
        maps.imag.at(c, y, x) = mag * std::sin(phase);
      }
    }
  }
  for (std::size_t y = 0; y < ny; ++y) {
    for (std::size_t x = 0; x < nx; ++x) {
      double sos = 0.0;
      for (std::size_t c = 0; c < nc; ++c) {
        sos += maps.real.at(c, y, x) * maps.real.at(c, y, x) + maps.imag.at(c, y, x) * maps.imag.at(c, y, x);
      }
      const double inv = 1.0 / std::sqrt(sos);
      for (std::size_t c = 0; c < nc; ++c) {
        maps.real.at(c, y, x) *= inv;
        maps.imag.at(c, y, x) *= inv;
      }
    }
  }
  return CoilSensitivities{std::move(maps)};
}

CoilSensitivities unit_coil_sensitivities(std::size_t nx, std::size_t ny) {
  ComplexTensor<double> maps({1, ny, nx});
  maps.real.fill(1.0);
  return CoilSensitivities{std::move(maps)};
}

MultiCoilKSpace encode(const CineVolume& d, const EncodingConfig& cfg) {
  check_extents(d.shape(), 3, "encode");
  const std::size_t nt = d.shape()[0], ny = d.shape()[1], nx = d.shape()[2];
  check_config(cfg, nt, ny, nx, "encode");
  const std::size_t nc = cfg.csm.nc();
  const std::size_t plane = ny * nx;
  MultiCoilKSpace m({nc, nt, ny, nx});
  for (std::size_t c = 0; c < nc; ++c) {
    const double* cr = cfg.csm.maps.real.data() + c * plane;
    const double* ci = cfg.csm.maps.imag.data() + c * plane;
    for (std::size_t t = 0; t < nt; ++t) {
      const double* dr = d.real.data() + t * plane;
      const double* di = d.imag.data() + t * plane;
      double* mr = m.real.data() + (c * nt + t) * plane;
      double* mi = m.imag.data() + (c * nt + t) * plane;
      for (std::size_t i = 0; i < plane; ++i) {
        mr[i] = cr[i] * dr[i] - ci[i] * di[i];
        mi[i] = cr[i] * di[i] + ci[i] * dr[i];
      }
      fft2_inplace<double>({mr, plane}, {mi, plane}, ny, nx, FftDirection::Forward);
      mask_plane(mr, mi, cfg.mask, t, nx);
    }
  }
  return m;
}

CineVolume adjoint_encode(const MultiCoilKSpace& m, const EncodingConfig& cfg) {
  check_extents(m.shape(), 4, "adjoint_encode");
  const std::size_t nc = m.shape()[0], nt = m.shape()[1], ny = m.shape()[2], nx = m.shape()[3];
  check_config(cfg, nt, ny, nx, "adjoint_encode");
  if (cfg.csm.nc() != nc) throw DimensionError("adjoint_encode: coil count mismatch");
  const std::size_t plane = ny * nx;
  CineVolume d({nt, ny, nx});
  std::vector<double> br(plane), bi(plane);
  for (std::size_t t = 0; t < nt; ++t) {
    double* dr = d.real.data() + t * plane;
    double* di = d.imag.data() + t * plane;
    for (std::size_t c = 0; c < nc; ++c) {
      const double* mr = m.real.data() + (c * nt + t) * plane;
      const double* mi = m.imag.data() + (c * nt + t) * plane;
      std::copy(mr, mr + plane, br.begin());
      std::copy(mi, mi + plane, bi.begin());
      mask_plane(br.data(), bi.data(), cfg.mask, t, nx);
      fft2_inplace<double>(br, bi, ny, nx, FftDirection::Inverse);
      const double* cr = cfg.csm.maps.real.data() + c * plane;
      const double* ci = cfg.csm.maps.imag.data() + c * plane;
      for (std::size_t i = 0; i < plane; ++i) {
        dr[i] += cr[i] * br[i] + ci[i] * bi[i];
        di[i] += cr[i] * bi[i] - ci[i] * br[i];
      }
    }
  }
  return d;
}

MultiCoilKSpace apply_mask(const MultiCoilKSpace& m, const SamplingMask& mask) {
  check_extents(m.shape(), 4, "apply_mask");
  const std::size_t nc = m.shape()[0], nt = m.shape()[1], ny = m.shape()[2], nx = m.shape()[3];
  if (mask.nt() != nt || mask.ny() != ny) throw DimensionError("apply_mask: mask extents do not match k-space");
  MultiCoilKSpace out = m;
  for (std::size_t c = 0; c < nc; ++c) {
    for (std::size_t t = 0; t < nt; ++t) {
      const std::size_t off = (c * nt + t) * ny * nx;
      mask_plane(out.real.data() + off, out.imag.data() + off, mask, t, nx);
    }
  }
  return out;
}

ComplexTensor<double> combine_coils(const ComplexTensor<double>& coil_images, const CoilSensitivities& csm) {
  const Shape& s = coil_images.shape();
  if (s.size() < 3 || s[0] != csm.nc() || s[s.size() - 2] != csm.ny() || s[s.size() - 1] != csm.nx()) {
    throw DimensionError("combine_coils: images " + shape_string(s) + " vs maps " + shape_string(csm.maps.shape()));
  }
  const Shape out_shape(s.begin() + 1, s.end());
  const std::size_t plane = csm.ny() * csm.nx();
  const std::size_t per_coil = shape_size(out_shape);
  ComplexTensor<double> out(out_shape);
  for (std::size_t c = 0; c < csm.nc(); ++c) {
    for (std::size_t i = 0; i < per_coil; ++i) {
      const double xr = coil_images.real[c * per_coil + i];
      const double xi = coil_images.imag[c * per_coil + i];
      const double cr = csm.maps.real[c * plane + i % plane];
      const double ci = csm.maps.imag[c * plane + i % plane];
      out.real[i] += cr * xr + ci * xi;
      out.imag[i] += cr * xi - ci * xr;
    }
  }
  return out;
}

std::complex<double> inner(const ComplexTensor<double>& a, const ComplexTensor<double>& b) {
  require_same_shape(a.shape(), b.shape(), "inner");
  double re = 0.0, im = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    re += a.real[i] * b.real[i] + a.imag[i] * b.imag[i];
    im += a.real[i] * b.imag[i] - a.imag[i] * b.real[i];
  }
  return {re, im};
}

double norm(const ComplexTensor<double>& a) { return std::sqrt(inner(a, a).real()); }

}  // namespace cine
