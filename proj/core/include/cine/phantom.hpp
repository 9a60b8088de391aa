#pragma once

#include <cstdint>
#include <vector>

#include "cine/encoding.hpp"

namespace cine {

// Analytic cardiac-like cine phantom: a static background ellipse with a few
// blobs, a beating annulus (myocardium) around a bright blood pool, and a smooth
// spatial phase that is constant over time. Pixel (x, y) has centre (x, y).
struct CinePhantom {
  struct Blob {
    double cx, cy, radius, intensity;
  };

  std::size_t nx = 32;
  std::size_t ny = 32;
  std::size_t nt = 8;
  std::uint64_t seed = 0;

  double body_cx = 16, body_cy = 16, body_ax = 13, body_ay = 12, body_intensity = 0.3;
  std::vector<Blob> blobs;

  // Inner radius r(t) = ring_r0 + ring_amplitude * sin(2 pi t / nt); outer = inner + thickness.
  double ring_cx = 16, ring_cy = 16;
  double ring_r0 = 4, ring_thickness = 2.5, ring_amplitude = 1.5;
  double ring_intensity = 0.6, blood_intensity = 1.0;

  // phase(x, y) = phase0 + phase_x * u + phase_y * v + phase_xy * u * v, with u, v in [-1, 1]
  double phase0 = 0, phase_x = 0, phase_y = 0, phase_xy = 0;

  double inner_radius(std::size_t t) const;
  double outer_radius(std::size_t t) const { return inner_radius(t) + ring_thickness; }
};

// Draws phantom geometry, intensities and phase from `seed`. The ring centre is
// placed on integer pixel coordinates.
CinePhantom random_phantom(std::size_t nx, std::size_t ny, std::size_t nt, std::uint64_t seed,
                           double motion_amplitude);

CineVolume generate_phantom(const CinePhantom& p);

}  // namespace cine
