#pragma once

#include <cstddef>
#include <span>

#include "cine/tensor.hpp"

namespace cine {

enum class FftDirection { Forward, Inverse };

constexpr bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

// In-place orthonormal 1D transform (scale 1/sqrt(n)) on split real/imag arrays.
// Forward uses the exp(-2*pi*i*k*n/N) kernel.
template <typename T>
void fft1_inplace(std::span<T> re, std::span<T> im, FftDirection dir);

// In-place orthonormal 2D transform of one h x w plane (row-major) in split format.
template <typename T>
void fft2_inplace(std::span<T> re, std::span<T> im, std::size_t h, std::size_t w, FftDirection dir);

// Transform over the two trailing axes; leading axes are batched.
template <typename T>
ComplexTensor<T> fft2(const ComplexTensor<T>& x);

template <typename T>
ComplexTensor<T> ifft2(const ComplexTensor<T>& x);

}  // namespace cine
