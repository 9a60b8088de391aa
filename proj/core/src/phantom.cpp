#include "cine/phantom.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "cine/fft.hpp"

namespace cine {

double CinePhantom::inner_radius(std::size_t t) const {
  return ring_r0 + ring_amplitude * std::sin(2.0 * std::numbers::pi * static_cast<double>(t) / static_cast<double>(nt));
}

CinePhantom random_phantom(std::size_t nx, std::size_t ny, std::size_t nt, std::uint64_t seed,
                           double motion_amplitude) {
  std::mt19937_64 rng(seed);
  auto uniform = [&rng](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
  const double sx = static_cast<double>(nx);
  const double sy = static_cast<double>(ny);
  const double s = std::min(sx, sy);

  CinePhantom p;
  p.nx = nx;
  p.ny = ny;
  p.nt = nt;
  p.seed = seed;

  p.body_cx = sx / 2 + uniform(-0.04, 0.04) * sx;
  p.body_cy = sy / 2 + uniform(-0.04, 0.04) * sy;
  p.body_ax = uniform(0.36, 0.44) * sx;
  p.body_ay = uniform(0.32, 0.42) * sy;
  p.body_intensity = uniform(0.2, 0.35);

  const int n_blobs = 3;
  for (int b = 0; b < n_blobs; ++b) {
    const double angle = uniform(0.0, 2.0 * std::numbers::pi);
    const double dist = uniform(0.2, 0.6);
    p.blobs.push_back(CinePhantom::Blob{p.body_cx + dist * p.body_ax * std::cos(angle),
                                        p.body_cy + dist * p.body_ay * std::sin(angle), uniform(0.05, 0.1) * s,
                                        uniform(0.1, 0.8)});
  }

  p.ring_cx = std::round(sx / 2 + uniform(-0.08, 0.08) * sx);
  p.ring_cy = std::round(sy / 2 + uniform(-0.08, 0.08) * sy);
  p.ring_r0 = uniform(0.11, 0.15) * s;
  p.ring_thickness = uniform(0.07, 0.1) * s;
  p.ring_amplitude = motion_amplitude;
  p.ring_intensity = uniform(0.5, 0.7);
  p.blood_intensity = uniform(0.85, 1.0);

  p.phase0 = uniform(-0.5, 0.5);
  p.phase_x = uniform(-0.3, 0.3);
  p.phase_y = uniform(-0.3, 0.3);
  p.phase_xy = uniform(-0.2, 0.2);
  return p;
}

CineVolume generate_phantom(const CinePhantom& p) {
  if (!is_power_of_two(p.nx) || !is_power_of_two(p.ny)) {
    throw UnsupportedSizeError("phantom extents must be powers of two");
  }
  CineVolume vol({p.nt, p.ny, p.nx});
  for (std::size_t t = 0; t < p.nt; ++t) {
    const double r_in = p.inner_radius(t);
    const double r_out = p.outer_radius(t);
    for (std::size_t y = 0; y < p.ny; ++y) {
      for (std::size_t x = 0; x < p.nx; ++x) {
        const double fx = static_cast<double>(x);
        const double fy = static_cast<double>(y);
        double mag = 0.0;
        const double ex = (fx - p.body_cx) / p.body_ax;
        const double ey = (fy - p.body_cy) / p.body_ay;
        if (ex * ex + ey * ey <= 1.0) mag = p.body_intensity;
        for (const auto& b : p.blobs) {
          const double dx = fx - b.cx, dy = fy - b.cy;
          if (dx * dx + dy * dy <= b.radius * b.radius) mag = b.intensity;
        }
        const double r = std::hypot(fx - p.ring_cx, fy - p.ring_cy);
        if (r < r_in) {
          mag = p.blood_intensity;
        } else if (r <= r_out) {
          mag = p.ring_intensity;
        }
        const double u = 2.0 * fx / static_cast<double>(p.nx) - 1.0;
        const double v = 2.0 * fy / static_cast<double>(p.ny) - 1.0;
        const double phase = p.phase0 + p.phase_x * u + p.phase_y * v + p.phase_xy * u * v;
        vol.real.at(t, y, x) = mag * std::cos(phase);
        vol.imag.at(t, y, x) = mag * std::sin(phase);
      }
    }
  }
  return vol;
}

}  // namespace cine
