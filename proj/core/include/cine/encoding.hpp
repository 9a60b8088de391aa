#pragma once

#include <complex>
#include <cstdint>

#include "cine/mask.hpp"
#include "cine/tensor.hpp"

namespace cine {

// Complex image series, shape [nt, ny, nx].
using CineVolume = ComplexTensor<double>;
// Complex k-space in FFT order, shape [nc, nt, ny, nx].
using MultiCoilKSpace = ComplexTensor<double>;

// Complex receive-coil maps [nc, ny, nx], normalized so sum_c |C_c|^2 == 1 per pixel.
struct CoilSensitivities {
  ComplexTensor<double> maps;

  std::size_t nc() const { return maps.shape()[0]; }
  std::size_t ny() const { return maps.shape()[1]; }
  std::size_t nx() const { return maps.shape()[2]; }
};

struct EncodingConfig {
  SamplingMask mask;
  CoilSensitivities csm;
};

// Gaussian lobes centred on points spread around the FOV perimeter, each with a
// random linear phase ramp, then pixelwise sum-of-squares normalized.
CoilSensitivities simulate_coil_sensitivities(std::size_t nx, std::size_t ny, std::size_t nc, std::uint64_t seed);

// Identity maps for one coil (C == 1).
CoilSensitivities unit_coil_sensitivities(std::size_t nx, std::size_t ny);

// m[c,t] = P_t . fft2(C_c . d_t); unsampled entries are exactly zero.
MultiCoilKSpace encode(const CineVolume& d, const EncodingConfig& cfg);

// d_t = sum_c conj(C_c) . ifft2(P_t . m[c,t])
CineVolume adjoint_encode(const MultiCoilKSpace& m, const EncodingConfig& cfg);

// Zeroes every unsampled (line, frame) of k-space.
MultiCoilKSpace apply_mask(const MultiCoilKSpace& m, const SamplingMask& mask);

// Conjugate-sensitivity combination of coil images [nc, ..., ny, nx] -> [..., ny, nx].
ComplexTensor<double> combine_coils(const ComplexTensor<double>& coil_images, const CoilSensitivities& csm);

// <a, b> = sum conj(a_i) b_i
std::complex<double> inner(const ComplexTensor<double>& a, const ComplexTensor<double>& b);
double norm(const ComplexTensor<double>& a);

}  // namespace cine
