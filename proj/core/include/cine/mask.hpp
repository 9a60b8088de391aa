#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "cine/tensor.hpp"

namespace cine {

// Binary phase-encode x frame sampling pattern; kx is always fully sampled.
// Line indices are centred: line ny/2 is the k-space centre (DC). k-space arrays
// use FFT order, see fft_row().
class SamplingMask {
 public:
  SamplingMask() = default;
  SamplingMask(std::size_t ny, std::size_t nt, std::size_t center_lines, std::size_t acceleration);

  std::size_t ny() const { return ny_; }
  std::size_t nt() const { return nt_; }
  std::size_t center_lines() const { return center_lines_; }
  std::size_t acceleration() const { return acceleration_; }

  bool sampled(std::size_t line, std::size_t frame) const { return pattern_[line * nt_ + frame] != 0; }
  void set(std::size_t line, std::size_t frame, bool on) { pattern_[line * nt_ + frame] = on ? 1 : 0; }

  std::size_t lines_in_frame(std::size_t frame) const;
  // Lines that are never sampled in any frame.
  std::vector<std::size_t> uncovered_lines() const;
  // Number of frames sampling `line`.
  std::size_t count(std::size_t line) const;
  // Single-frame mask holding frame `frame`.
  SamplingMask frame(std::size_t frame) const;
  // Half-open range of the always-sampled centre band.
  std::size_t center_begin() const { return ny_ / 2 - center_lines_ / 2; }
  std::size_t center_end() const { return center_begin() + center_lines_; }

  // FFT-ordered row of a centred line index.
  std::size_t fft_row(std::size_t line) const { return (line + ny_ - ny_ / 2) % ny_; }
  // 0/1 plane [ny, nx] in FFT order for one frame.
  template <typename T>
  Tensor<T> plane(std::size_t frame, std::size_t nx) const;

  // [ny, nt] u8 view of the pattern, for serialization.
  Tensor<std::uint8_t> as_tensor() const;
  static SamplingMask from_tensor(const Tensor<std::uint8_t>& pattern, std::size_t center_lines,
                                  std::size_t acceleration);

  friend bool operator==(const SamplingMask&, const SamplingMask&) = default;

 private:
  std::size_t ny_ = 0;
  std::size_t nt_ = 0;
  std::size_t center_lines_ = 0;
  std::size_t acceleration_ = 1;
  std::vector<std::uint8_t> pattern_;
};

// Frame t samples {l : l mod R == t mod R} plus the centre band.
SamplingMask make_uniform_interleaved_mask(std::size_t acceleration, std::size_t ny, std::size_t nt,
                                           std::size_t center_lines);

// Per frame: centre band plus (ny/R - center_lines) further lines drawn without
// replacement with probability proportional to exp(-(l - ny/2)^2 / (2 s^2)),
// s = width_fraction * ny.
SamplingMask make_gaussian_random_mask(std::size_t acceleration, std::size_t ny, std::size_t nt,
                                       std::size_t center_lines, std::uint64_t seed, double width_fraction = 0.25);

SamplingMask make_full_mask(std::size_t ny, std::size_t nt);

}  // namespace cine
