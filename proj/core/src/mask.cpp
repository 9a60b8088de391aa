#include "cine/mask.hpp"

#include <cmath>
#include <random>
#include <string>

namespace cine {

SamplingMask::SamplingMask(std::size_t ny, std::size_t nt, std::size_t center_lines, std::size_t acceleration)
    : ny_(ny), nt_(nt), center_lines_(center_lines), acceleration_(acceleration), pattern_(ny * nt, 0) {
  if (center_lines > ny) throw ConfigError("center_lines exceeds ny");
}

std::size_t SamplingMask::lines_in_frame(std::size_t frame) const {
  std::size_t n = 0;
  for (std::size_t l = 0; l < ny_; ++l) n += sampled(l, frame) ? 1 : 0;
  return n;
}

std::size_t SamplingMask::count(std::size_t line) const {
  std::size_t n = 0;
  for (std::size_t t = 0; t < nt_; ++t) n += sampled(line, t) ? 1 : 0;
  return n;
}

std::vector<std::size_t> SamplingMask::uncovered_lines() const {
  std::vector<std::size_t> out;
  for (std::size_t l = 0; l < ny_; ++l) {
    if (count(l) == 0) out.push_back(l);
  }
  return out;
}

SamplingMask SamplingMask::frame(std::size_t frame) const {
  SamplingMask out(ny_, 1, center_lines_, acceleration_);
  for (std::size_t l = 0; l < ny_; ++l) out.set(l, 0, sampled(l, frame));
  return out;
}

template <typename T>
Tensor<T> SamplingMask::plane(std::size_t frame, std::size_t nx) const {
  Tensor<T> out({ny_, nx});
  for (std::size_t l = 0; l < ny_; ++l) {
    if (!sampled(l, frame)) continue;
    T* row = out.data() + fft_row(l) * nx;
    std::fill(row, row + nx, T{1});
  }
  return out;
}

template Tensor<float> SamplingMask::plane<float>(std::size_t, std::size_t) const;
template Tensor<double> SamplingMask::plane<double>(std::size_t, std::size_t) const;

Tensor<std::uint8_t> SamplingMask::as_tensor() const { return Tensor<std::uint8_t>({ny_, nt_}, pattern_); }

SamplingMask SamplingMask::from_tensor(const Tensor<std::uint8_t>& pattern, std::size_t center_lines,
                                       std::size_t acceleration) {
  if (pattern.rank() != 2) throw DimensionError("mask tensor must be [ny, nt], got " + shape_string(pattern.shape()));
  SamplingMask out(pattern.dim(0), pattern.dim(1), center_lines, acceleration);
  for (std::size_t i = 0; i < pattern.size(); ++i) {
    if (pattern[i] > 1) throw ConfigError("mask entries must be 0 or 1");
    out.pattern_[i] = pattern[i];
  }
  return out;
}

SamplingMask make_uniform_interleaved_mask(std::size_t acceleration, std::size_t ny, std::size_t nt,
                                           std::size_t center_lines) {
  if (acceleration < 1) throw ConfigError("acceleration must be >= 1");
  if (ny % acceleration != 0) {
    throw ConfigError("ny=" + std::to_string(ny) + " is not divisible by R=" + std::to_string(acceleration));
  }
  if (center_lines % 2 != 0) throw ConfigError("center_lines must be even");
  SamplingMask mask(ny, nt, center_lines, acceleration);
  for (std::size_t t = 0; t < nt; ++t) {
    for (std::size_t l = 0; l < ny; ++l) {
      const bool lattice = l % acceleration == t % acceleration;
      const bool centre = l >= mask.center_begin() && l < mask.center_end();
      mask.set(l, t, lattice || centre);
    }
  }
  return mask;
}

SamplingMask make_gaussian_random_mask(std::size_t acceleration, std::size_t ny, std::size_t nt,
                                       std::size_t center_lines, std::uint64_t seed, double width_fraction) {
  if (acceleration < 1) throw ConfigError("acceleration must be >= 1");
  if (center_lines % 2 != 0) throw ConfigError("center_lines must be even");
  if (!(width_fraction > 0.0)) throw ConfigError("gaussian width must be positive");
  const std::size_t budget = ny / acceleration;
  if (budget < center_lines) {
    throw ConfigError("line budget ny/R=" + std::to_string(budget) + " is below center_lines=" +
                      std::to_string(center_lines));
  }
  SamplingMask mask(ny, nt, center_lines, acceleration);
  const double sigma = width_fraction * static_cast<double>(ny);
  const double centre = static_cast<double>(ny / 2);
  std::vector<double> density(ny);
  for (std::size_t l = 0; l < ny; ++l) {
    const double d = static_cast<double>(l) - centre;
    density[l] = std::exp(-d * d / (2.0 * sigma * sigma));
  }

  std::mt19937_64 rng(seed);
  for (std::size_t t = 0; t < nt; ++t) {
    std::vector<double> weight = density;
    for (std::size_t l = mask.center_begin(); l < mask.center_end(); ++l) {
      mask.set(l, t, true);
      weight[l] = 0.0;
    }
    for (std::size_t drawn = center_lines; drawn < budget; ++drawn) {
      double total = 0.0;
      for (double w : weight) total += w;
      std::uniform_real_distribution<double> pick(0.0, total);
      const double u = pick(rng);
      double acc = 0.0;
      std::size_t chosen = ny;
      for (std::size_t l = 0; l < ny; ++l) {
        if (weight[l] == 0.0) continue;
        acc += weight[l];
        chosen = l;
        if (u < acc) break;
      }
      mask.set(chosen, t, true);
      weight[chosen] = 0.0;
    }
  }
  return mask;
}

SamplingMask make_full_mask(std::size_t ny, std::size_t nt) {
  SamplingMask mask(ny, nt, 0, 1);
  for (std::size_t t = 0; t < nt; ++t) {
    for (std::size_t l = 0; l < ny; ++l) mask.set(l, t, true);
  }
  return mask;
}

}  // namespace cine
