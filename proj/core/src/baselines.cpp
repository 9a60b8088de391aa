#include "cine/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace cine {

CineVolume zero_filled(const MultiCoilKSpace& m, const EncodingConfig& cfg) { return adjoint_encode(m, cfg); }

namespace {

using cd = std::complex<double>;

struct Jacobi {
  ComplexMatrix w;  // A V, columns mutually orthogonal
  ComplexMatrix v;  // unitary, cols x cols
};

// Hestenes one-sided Jacobi: rotates column pairs of A until they are orthogonal.
Jacobi one_sided_jacobi(const ComplexMatrix& a) {
  Jacobi j{a, ComplexMatrix(a.cols, a.cols)};
  for (std::size_t i = 0; i < a.cols; ++i) j.v(i, i) = 1.0;
  const std::size_t n = a.cols, m = a.rows;
  constexpr double tol = 1e-15;
  for (int sweep = 0; sweep < 60; ++sweep) {
    bool rotated = false;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        cd* wp = &j.w.data[p * m];
        cd* wq = &j.w.data[q * m];
        double alpha = 0.0, beta = 0.0;
        cd gamma = 0.0;
        for (std::size_t r = 0; r < m; ++r) {
          alpha += std::norm(wp[r]);
          beta += std::norm(wq[r]);
          gamma += std::conj(wp[r]) * wq[r];
        }
        const double g = std::abs(gamma);
        if (g <= tol * std::sqrt(alpha * beta) || g == 0.0) continue;
        rotated = true;
        const cd phase = std::conj(gamma) / g;  // e^{-i arg gamma}
        const double zeta = (beta - alpha) / (2.0 * g);
        const double t = (zeta >= 0 ? 1.0 : -1.0) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        auto rotate = [&](cd* xp, cd* xq, std::size_t len) {
          for (std::size_t r = 0; r < len; ++r) {
            const cd a_p = xp[r];
            const cd a_q = phase * xq[r];
            xp[r] = c * a_p - s * a_q;
            xq[r] = s * a_p + c * a_q;
          }
        };
        rotate(wp, wq, m);
        rotate(&j.v.data[p * n], &j.v.data[q * n], n);
      }
    }
    if (!rotated) break;
  }
  return j;
}

double column_norm(const ComplexMatrix& a, std::size_t c) {
  double acc = 0.0;
  for (std::size_t r = 0; r < a.rows; ++r) acc += std::norm(a(r, c));
  return std::sqrt(acc);
}

CineVolume scaled_sum(const CineVolume& a, double sa, const CineVolume& b, double sb) {
  CineVolume out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) {
    out.real[i] = sa * a.real[i] + sb * b.real[i];
    out.imag[i] = sa * a.imag[i] + sb * b.imag[i];
  }
  return out;
}

double squared_norm(const ComplexTensor<double>& a) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a.real[i] * a.real[i] + a.imag[i] * a.imag[i];
  return acc;
}

double real_inner(const ComplexTensor<double>& a, const ComplexTensor<double>& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a.real[i] * b.real[i] + a.imag[i] * b.imag[i];
  return acc;
}

double l1(const CineVolume& v) {
  double acc = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) acc += std::hypot(v.real[i], v.imag[i]);
  return acc;
}

void soft_threshold(CineVolume& v, double tau) {
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double mag = std::hypot(v.real[i], v.imag[i]);
    const double k = mag > tau ? (mag - tau) / mag : 0.0;
    v.real[i] *= k;
    v.imag[i] *= k;
  }
}

// 1/2 |E x - m|^2 and the gradient E^H (E x - m).
double data_term(const CineVolume& x, const MultiCoilKSpace& m, const EncodingConfig& cfg, CineVolume* grad) {
  MultiCoilKSpace r = encode(x, cfg);
  for (std::size_t i = 0; i < r.size(); ++i) {
    r.real[i] -= m.real[i];
    r.imag[i] -= m.imag[i];
  }
  if (grad) *grad = adjoint_encode(r, cfg);
  return 0.5 * squared_norm(r);
}

}  // namespace

std::vector<double> singular_values(const ComplexMatrix& a) {
  const Jacobi j = one_sided_jacobi(a);
  std::vector<double> s(a.cols);
  for (std::size_t c = 0; c < a.cols; ++c) s[c] = column_norm(j.w, c);
  std::sort(s.begin(), s.end(), std::greater<>());
  s.resize(std::min(a.rows, a.cols));
  return s;
}

ComplexMatrix singular_value_threshold(const ComplexMatrix& a, double tau, std::vector<double>* shrunk) {
  if (tau < 0.0) throw ConfigError("singular-value threshold must be >= 0");
  const Jacobi j = one_sided_jacobi(a);
  ComplexMatrix out(a.rows, a.cols);
  std::vector<double> kept;
  for (std::size_t c = 0; c < a.cols; ++c) {
    const double sigma = column_norm(j.w, c);
    const double k = sigma > tau ? (sigma - tau) / sigma : 0.0;
    kept.push_back(sigma > tau ? sigma - tau : 0.0);
    if (k == 0.0) continue;
    // out += k * w_c v_c^H
    for (std::size_t col = 0; col < a.cols; ++col) {
      const cd vc = k * std::conj(j.v(col, c));
      for (std::size_t r = 0; r < a.rows; ++r) out(r, col) += j.w(r, c) * vc;
    }
  }
  if (shrunk) {
    std::sort(kept.begin(), kept.end(), std::greater<>());
    *shrunk = std::move(kept);
  }
  return out;
}

ComplexMatrix to_casorati(const CineVolume& v) {
  if (v.shape().size() != 3) throw DimensionError("Casorati matrix needs a volume [nt, ny, nx]");
  const std::size_t nt = v.shape()[0], plane = v.shape()[1] * v.shape()[2];
  ComplexMatrix c(plane, nt);
  for (std::size_t t = 0; t < nt; ++t) {
    for (std::size_t i = 0; i < plane; ++i) c(i, t) = cd(v.real[t * plane + i], v.imag[t * plane + i]);
  }
  return c;
}

CineVolume from_casorati(const ComplexMatrix& c, std::size_t ny, std::size_t nx) {
  if (c.rows != ny * nx) throw DimensionError("Casorati rows do not match ny*nx");
  CineVolume v({c.cols, ny, nx});
  const std::size_t plane = ny * nx;
  for (std::size_t t = 0; t < c.cols; ++t) {
    for (std::size_t i = 0; i < plane; ++i) {
      v.real[t * plane + i] = c(i, t).real();
      v.imag[t * plane + i] = c(i, t).imag();
    }
  }
  return v;
}

CineVolume temporal_fft(const CineVolume& v, bool inverse) {
  if (v.shape().size() != 3) throw DimensionError("temporal_fft needs a volume [nt, ny, nx]");
  const std::size_t nt = v.shape()[0], plane = v.shape()[1] * v.shape()[2];
  const double sign = inverse ? 1.0 : -1.0;
  const double scale = 1.0 / std::sqrt(static_cast<double>(nt));
  std::vector<cd> twiddle(nt);
  for (std::size_t k = 0; k < nt; ++k) {
    twiddle[k] = std::polar(scale, sign * 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(nt));
  }
  CineVolume out(v.shape());
  for (std::size_t k = 0; k < nt; ++k) {
    for (std::size_t t = 0; t < nt; ++t) {
      const cd w = twiddle[(k * t) % nt];
      for (std::size_t i = 0; i < plane; ++i) {
        const cd x(v.real[t * plane + i], v.imag[t * plane + i]);
        const cd y = w * x;
        out.real[k * plane + i] += y.real();
        out.imag[k * plane + i] += y.imag();
      }
    }
  }
  return out;
}

void LpsConfig::validate() const {
  if (!(lambda_l > 0.0) || !(lambda_s > 0.0)) throw ConfigError("L+S thresholds must be > 0");
  if (iters < 1) throw ConfigError("L+S needs at least one iteration");
  if (!(step > 0.0) || !std::isfinite(step)) throw ConfigError("L+S step must be finite and > 0");
}

LpsResult lps_solve(const MultiCoilKSpace& m, const EncodingConfig& cfg, const LpsConfig& lps) {
  lps.validate();
  if (m.shape().size() != 4 || m.shape()[1] < 2) throw DimensionError("L+S needs k-space [nc, nt >= 2, ny, nx]");
  const std::size_t ny = m.shape()[2], nx = m.shape()[3];
  const bool use_sparse = std::isfinite(lps.lambda_s);
  const bool use_low_rank = std::isfinite(lps.lambda_l);

  auto penalty = [&](const std::vector<double>& sv, const CineVolume& s) {
    double p = 0.0;
    if (use_low_rank) p += lps.lambda_l * std::accumulate(sv.begin(), sv.end(), 0.0);
    if (use_sparse) p += lps.lambda_s * l1(temporal_fft(s));
    return p;
  };

  LpsResult res;
  res.low_rank = zero_filled(m, cfg);
  res.sparse = CineVolume(res.low_rank.shape());
  std::vector<double> sv = singular_values(to_casorati(res.low_rank));
  if (!use_low_rank) res.low_rank = CineVolume(res.sparse.shape());
  CineVolume grad;
  double f = data_term(scaled_sum(res.low_rank, 1.0, res.sparse, 1.0), m, cfg, &grad);
  res.objective.push_back(f + penalty(use_low_rank ? sv : std::vector<double>{}, res.sparse));

  double step = lps.step;
  for (std::size_t it = 0; it < lps.iters; ++it) {
    bool accepted = false;
    for (std::size_t bt = 0; bt <= lps.max_backtracks; ++bt, step *= 0.5) {
      std::vector<double> sv_new;
      CineVolume l_new(res.low_rank.shape());
      if (use_low_rank) {
        const ComplexMatrix c = to_casorati(scaled_sum(res.low_rank, 1.0, grad, -step));
        l_new = from_casorati(singular_value_threshold(c, step * lps.lambda_l, &sv_new), ny, nx);
      }
      CineVolume s_new(res.sparse.shape());
      if (use_sparse) {
        CineVolume ts = temporal_fft(scaled_sum(res.sparse, 1.0, grad, -step));
        soft_threshold(ts, step * lps.lambda_s);
        s_new = temporal_fft(ts, true);
      }
      CineVolume grad_new;
      const double f_new = data_term(scaled_sum(l_new, 1.0, s_new, 1.0), m, cfg, &grad_new);
      const CineVolume dl = scaled_sum(l_new, 1.0, res.low_rank, -1.0);
      const CineVolume ds = scaled_sum(s_new, 1.0, res.sparse, -1.0);
      const double bound = f + real_inner(grad, dl) + real_inner(grad, ds) +
                           (squared_norm(dl) + squared_norm(ds)) / (2.0 * step);
      if (!std::isfinite(f_new)) throw NumericError("L+S data term is not finite");
      if (f_new <= bound + 1e-12 * std::max(1.0, std::abs(f))) {
        res.low_rank = std::move(l_new);
        res.sparse = std::move(s_new);
        grad = std::move(grad_new);
        f = f_new;
        res.objective.push_back(f + penalty(sv_new, res.sparse));
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      throw NumericError("L+S backtracking failed to find a decreasing step at iteration " + std::to_string(it));
    }
  }
  return res;
}

CineVolume lps_recon(const MultiCoilKSpace& m, const EncodingConfig& cfg, const LpsConfig& lps) {
  const LpsResult r = lps_solve(m, cfg, lps);
  return scaled_sum(r.low_rank, 1.0, r.sparse, 1.0);
}

}  // namespace cine
