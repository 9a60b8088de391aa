#pragma once

#include <complex>
#include <limits>
#include <vector>

#include "cine/encoding.hpp"

namespace cine {

// Zero-filled reconstruction: E^H m.
CineVolume zero_filled(const MultiCoilKSpace& m, const EncodingConfig& cfg);

// Column-major dense complex matrix.
struct ComplexMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::complex<double>> data;

  ComplexMatrix() = default;
  ComplexMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c) {}
  std::complex<double>& operator()(std::size_t r, std::size_t c) { return data[c * rows + r]; }
  const std::complex<double>& operator()(std::size_t r, std::size_t c) const { return data[c * rows + r]; }
};

// Singular values in descending order (one-sided Jacobi).
std::vector<double> singular_values(const ComplexMatrix& a);

// Singular-value soft threshold: U max(S - tau, 0) V^H. The thresholded singular values
// are written to `shrunk` (descending) when given.
ComplexMatrix singular_value_threshold(const ComplexMatrix& a, double tau, std::vector<double>* shrunk = nullptr);

// Casorati matrix [ny*nx, nt] of a volume [nt, ny, nx] and its inverse.
ComplexMatrix to_casorati(const CineVolume& v);
CineVolume from_casorati(const ComplexMatrix& c, std::size_t ny, std::size_t nx);

// Unitary DFT along t of [nt, ny, nx].
CineVolume temporal_fft(const CineVolume& v, bool inverse = false);

struct LpsConfig {
  double lambda_l = 0.01;  // nuclear-norm weight
  double lambda_s = 0.01;  // l1 weight in the temporal Fourier domain; infinity disables S
  std::size_t iters = 50;
  double step = 1.0;  // initial step, halved on failed sufficient-decrease tests
  std::size_t max_backtracks = 40;

  void validate() const;
};

struct LpsResult {
  CineVolume low_rank;
  CineVolume sparse;
  std::vector<double> objective;  // objective[0] at the zero-filled start, then one entry per iteration
};

// Proximal gradient on 1/2 |E(L+S) - m|^2 + lambda_l |L|_* + lambda_s |T S|_1.
// Starts from L = E^H m, S = 0. Throws NumericError if backtracking cannot find a decreasing step.
LpsResult lps_solve(const MultiCoilKSpace& m, const EncodingConfig& cfg, const LpsConfig& lps);

// lps_solve(...).low_rank + sparse
CineVolume lps_recon(const MultiCoilKSpace& m, const EncodingConfig& cfg, const LpsConfig& lps);

}  // namespace cine
