#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "cine/phantom.hpp"

using cine::CinePhantom;

namespace {

double mag(const cine::CineVolume& v, std::size_t t, std::size_t y, std::size_t x) {
  return std::hypot(v.real.at(t, y, x), v.imag.at(t, y, x));
}

}  // namespace

TEST(Phantom, SameSeedSameVolume) {
  const auto a = cine::generate_phantom(cine::random_phantom(32, 32, 4, 5, 1.5));
  EXPECT_EQ(a, cine::generate_phantom(cine::random_phantom(32, 32, 4, 5, 1.5)));
  EXPECT_FALSE(a == cine::generate_phantom(cine::random_phantom(32, 32, 4, 6, 1.5)));
}

TEST(Phantom, InnerRadiusFollowsSinusoid) {
  const CinePhantom p = cine::random_phantom(32, 32, 8, 1, 2.0);
  for (std::size_t t = 0; t < 8; ++t) {
    const double expected = p.ring_r0 + 2.0 * std::sin(2.0 * std::numbers::pi * static_cast<double>(t) / 8.0);
    EXPECT_DOUBLE_EQ(p.inner_radius(t), expected);
    EXPECT_DOUBLE_EQ(p.outer_radius(t), expected + p.ring_thickness);
  }
}

TEST(Phantom, RingAndBloodPoolMatchGeometry) {
  const CinePhantom p = cine::random_phantom(64, 64, 6, 2, 2.0);
  const auto v = cine::generate_phantom(p);
  const auto cx = static_cast<std::size_t>(p.ring_cx), cy = static_cast<std::size_t>(p.ring_cy);
  for (std::size_t t = 0; t < p.nt; ++t) {
    EXPECT_NEAR(mag(v, t, cy, cx), p.blood_intensity, 1e-12);
    // Walk right along the row through the ring centre.
    for (std::size_t dx = 0; cx + dx < p.nx; ++dx) {
      const double r = static_cast<double>(dx);
      const double m = mag(v, t, cy, cx + dx);
      if (r < p.inner_radius(t)) {
        EXPECT_NEAR(m, p.blood_intensity, 1e-12) << "t=" << t << " r=" << r;
      } else if (r <= p.outer_radius(t)) {
        EXPECT_NEAR(m, p.ring_intensity, 1e-12) << "t=" << t << " r=" << r;
      }
    }
  }
}

TEST(Phantom, StaticWhenMotionIsZero) {
  const auto v = cine::generate_phantom(cine::random_phantom(32, 32, 5, 3, 0.0));
  const std::size_t plane = 32 * 32;
  for (std::size_t t = 1; t < 5; ++t) {
    for (std::size_t i = 0; i < plane; ++i) {
      EXPECT_EQ(v.real[t * plane + i], v.real[i]);
      EXPECT_EQ(v.imag[t * plane + i], v.imag[i]);
    }
  }
}

TEST(Phantom, PhaseIsSmoothAndMagnitudeBounded) {
  const CinePhantom p = cine::random_phantom(32, 32, 2, 4, 1.0);
  const auto v = cine::generate_phantom(p);
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double m = std::hypot(v.real[i], v.imag[i]);
    EXPECT_LE(m, 1.0 + 1e-12);
  }
  // Analytic phase at the ring centre.
  const double u = 2.0 * p.ring_cx / 32.0 - 1.0, w = 2.0 * p.ring_cy / 32.0 - 1.0;
  const double phase = p.phase0 + p.phase_x * u + p.phase_y * w + p.phase_xy * u * w;
  const auto cx = static_cast<std::size_t>(p.ring_cx), cy = static_cast<std::size_t>(p.ring_cy);
  EXPECT_NEAR(std::atan2(v.imag.at(0, cy, cx), v.real.at(0, cy, cx)), phase, 1e-12);
}

TEST(Phantom, RejectsNonPowerOfTwoExtents) {
  EXPECT_THROW(cine::generate_phantom(cine::random_phantom(24, 32, 2, 1, 1.0)), cine::UnsupportedSizeError);
}
