#include "cine/fft.hpp"

#include <cmath>
#include <map>
#include <numbers>
#include <string>
#include <vector>

namespace cine {
namespace {

// Twiddles and bit-reversal permutation for one transform length.
template <typename T>
struct Plan {
  std::vector<T> cos_table;
  std::vector<T> sin_table;
  std::vector<std::size_t> bitrev;
  T scale;

  explicit Plan(std::size_t n) : cos_table(n / 2), sin_table(n / 2), bitrev(n) {
    for (std::size_t k = 0; k < n / 2; ++k) {
      const double angle = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
      cos_table[k] = static_cast<T>(std::cos(angle));
      sin_table[k] = static_cast<T>(std::sin(angle));
    }
    std::size_t bits = 0;
    while ((std::size_t{1} << bits) < n) ++bits;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t r = 0;
      for (std::size_t b = 0; b < bits; ++b) r |= ((i >> b) & 1u) << (bits - 1 - b);
      bitrev[i] = r;
    }
    scale = static_cast<T>(1.0 / std::sqrt(static_cast<double>(n)));
  }
};

template <typename T>
const Plan<T>& plan_for(std::size_t n) {
  thread_local std::map<std::size_t, Plan<T>> cache;
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, Plan<T>(n)).first;
  return it->second;
}

void require_pow2(std::size_t n) {
  if (!is_power_of_two(n)) {
    throw UnsupportedSizeError("FFT extent " + std::to_string(n) + " is not a power of two");
  }
}

// Strided transform of n points starting at re/im with the given element stride.
template <typename T>
void transform(T* re, T* im, std::size_t n, std::size_t stride, FftDirection dir) {
  const Plan<T>& plan = plan_for<T>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = plan.bitrev[i];
    if (j > i) {
      std::swap(re[i * stride], re[j * stride]);
      std::swap(im[i * stride], im[j * stride]);
    }
  }
  const T sign = dir == FftDirection::Forward ? T(-1) : T(1);
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const std::size_t half = len / 2;
    const std::size_t step = n / len;
    for (std::size_t start = 0; start < n; start += len) {
      for (std::size_t k = 0; k < half; ++k) {
        const T wr = plan.cos_table[k * step];
        const T wi = sign * plan.sin_table[k * step];
        const std::size_t a = (start + k) * stride;
        const std::size_t b = (start + k + half) * stride;
        const T tr = re[b] * wr - im[b] * wi;
        const T ti = re[b] * wi + im[b] * wr;
        re[b] = re[a] - tr;
        im[b] = im[a] - ti;
        re[a] += tr;
        im[a] += ti;
      }
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    re[i * stride] *= plan.scale;
    im[i * stride] *= plan.scale;
  }
}

template <typename T>
ComplexTensor<T> fft2_impl(const ComplexTensor<T>& x, FftDirection dir) {
  const Shape& shape = x.shape();
  if (shape.size() < 2) throw DimensionError("fft2 needs at least two axes, got " + shape_string(shape));
  const std::size_t h = shape[shape.size() - 2];
  const std::size_t w = shape[shape.size() - 1];
  ComplexTensor<T> out = x;
  const std::size_t plane = h * w;
  const std::size_t batches = plane == 0 ? 0 : x.size() / plane;
  for (std::size_t b = 0; b < batches; ++b) {
    fft2_inplace<T>(std::span<T>(out.real.data() + b * plane, plane), std::span<T>(out.imag.data() + b * plane, plane),
                    h, w, dir);
  }
  return out;
}

}  // namespace

template <typename T>
void fft1_inplace(std::span<T> re, std::span<T> im, FftDirection dir) {
  if (re.size() != im.size()) throw DimensionError("fft1: real/imag length mismatch");
  require_pow2(re.size());
  transform(re.data(), im.data(), re.size(), 1, dir);
}

template <typename T>
void fft2_inplace(std::span<T> re, std::span<T> im, std::size_t h, std::size_t w, FftDirection dir) {
  if (re.size() != h * w || im.size() != h * w) throw DimensionError("fft2: plane size mismatch");
  require_pow2(h);
  require_pow2(w);
  for (std::size_t r = 0; r < h; ++r) transform(re.data() + r * w, im.data() + r * w, w, 1, dir);
  for (std::size_t c = 0; c < w; ++c) transform(re.data() + c, im.data() + c, h, w, dir);
}

template <typename T>
ComplexTensor<T> fft2(const ComplexTensor<T>& x) {
  return fft2_impl(x, FftDirection::Forward);
}

template <typename T>
ComplexTensor<T> ifft2(const ComplexTensor<T>& x) {
  return fft2_impl(x, FftDirection::Inverse);
}

template void fft1_inplace<float>(std::span<float>, std::span<float>, FftDirection);
template void fft1_inplace<double>(std::span<double>, std::span<double>, FftDirection);
template void fft2_inplace<float>(std::span<float>, std::span<float>, std::size_t, std::size_t, FftDirection);
template void fft2_inplace<double>(std::span<double>, std::span<double>, std::size_t, std::size_t, FftDirection);
template ComplexTensor<float> fft2(const ComplexTensor<float>&);
template ComplexTensor<double> fft2(const ComplexTensor<double>&);
template ComplexTensor<float> ifft2(const ComplexTensor<float>&);
template ComplexTensor<double> ifft2(const ComplexTensor<double>&);

}  // namespace cine
