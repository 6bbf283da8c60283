// Copyright 2026 The motionkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <memory>
#include <numbers>
#include <span>
#include <vector>

#include "mk/tensor.hpp"

namespace mk {

// Orthonormal DCT-II basis for one axis length:
//   B[k][n] = c_k cos(pi (2n+1) k / 2L), c_0 = sqrt(1/L), c_k = sqrt(2/L).
// B is orthogonal, so the inverse (DCT-III) is Bᵀ.
class DctPlan {
 public:
  explicit DctPlan(std::size_t length) : length_(length), basis_(length * length) {
    if (length == 0) throw ShapeError("DctPlan: zero length");
    const double L = static_cast<double>(length);
    for (std::size_t k = 0; k < length; ++k) {
      const double ck = k == 0 ? std::sqrt(1.0 / L) : std::sqrt(2.0 / L);
      for (std::size_t n = 0; n < length; ++n)
        basis_[k * length + n] = ck * std::cos(std::numbers::pi * (2.0 * n + 1.0) * k / (2.0 * L));
    }
  }

  std::size_t length() const noexcept { return length_; }
  double at(std::size_t k, std::size_t n) const noexcept { return basis_[k * length_ + n]; }
  std::span<const double> basis() const noexcept { return basis_; }

 private:
  std::size_t length_;
  std::vector<double> basis_;
};

namespace detail {

inline void check_axes(const Shape& shape, std::span<const std::size_t> axes) {
  std::vector<bool> seen(shape.size(), false);
  for (std::size_t a : axes) {
    if (a >= shape.size()) throw ShapeError("transform axis " + std::to_string(a) + " out of range");
    if (seen[a]) throw ShapeError("transform axis " + std::to_string(a) + " repeated");
    seen[a] = true;
  }
}

// Applies B (inverse=false) or Bᵀ (inverse=true) along `axis` in place.
inline void transform_axis(Tensor<double>& x, std::size_t axis, const DctPlan& plan, bool inverse) {
  const Shape& s = x.shape();
  const std::size_t len = s[axis];
  std::size_t outer = 1, inner = 1;
  for (std::size_t a = 0; a < axis; ++a) outer *= s[a];
  for (std::size_t a = axis + 1; a < s.size(); ++a) inner *= s[a];
  std::vector<double> line(len), res(len);
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t i = 0; i < inner; ++i) {
      double* base = x.data() + o * len * inner + i;
      for (std::size_t n = 0; n < len; ++n) line[n] = base[n * inner];
      for (std::size_t k = 0; k < len; ++k) {
        double acc = 0.0;
        for (std::size_t n = 0; n < len; ++n) acc += (inverse ? plan.at(n, k) : plan.at(k, n)) * line[n];
        res[k] = acc;
      }
      for (std::size_t k = 0; k < len; ++k) base[k * inner] = res[k];
    }
  }
}

inline Tensor<double> separable(const Tensor<double>& x, std::span<const std::size_t> axes, bool inverse) {
  check_axes(x.shape(), axes);
  Tensor<double> out = x;
  std::map<std::size_t, std::unique_ptr<DctPlan>> plans;
  for (std::size_t a : axes) {
    auto& plan = plans[x.extent(a)];
    if (!plan) plan = std::make_unique<DctPlan>(x.extent(a));
    transform_axis(out, a, *plan, inverse);
  }
  return out;
}

}  // namespace detail

// Orthonormal DCT-II along each listed axis.
inline Tensor<double> dct(const Tensor<double>& x, std::span<const std::size_t> axes) {
  return detail::separable(x, axes, false);
}
inline Tensor<double> dct(const Tensor<double>& x, std::initializer_list<std::size_t> axes) {
  return dct(x, std::span<const std::size_t>(axes.begin(), axes.size()));
}

// Orthonormal DCT-III, the exact inverse of dct().
inline Tensor<double> idct(const Tensor<double>& x, std::span<const std::size_t> axes) {
  return detail::separable(x, axes, true);
}
inline Tensor<double> idct(const Tensor<double>& x, std::initializer_list<std::size_t> axes) {
  return idct(x, std::span<const std::size_t>(axes.begin(), axes.size()));
}

enum class FilterMode { ideal, gaussian };

// Low-pass mask H over a (frames, height, width) spectrum.
struct LowPassFilter {
  FilterMode mode = FilterMode::ideal;
  double cutoff_t = 0.25;
  double cutoff_s = 0.25;
  Tensor<double> mask;  // (N, h, w), values in [0, 1]

  // Fraction of the mask's total weight relative to its element count.
  double kept_fraction() const { return sum(mask) / static_cast<double>(mask.size()); }
};

// Number of kept low-frequency indices for an ideal cutoff.
inline std::size_t ideal_keep(double cutoff, std::size_t extent) {
  const double raw = std::ceil(cutoff * static_cast<double>(extent) - 1e-9);
  return std::clamp<std::size_t>(static_cast<std::size_t>(std::max(raw, 1.0)), 1, extent);
}

// ideal: H = 1 where every index is below ceil(cutoff * extent).
// gaussian: H = exp(-r²/2), r² = Σ_axis (index / (cutoff * extent))², so the
// ideal boundary along any single axis sits at one standard deviation.
inline LowPassFilter make_lowpass(const Shape& shape, FilterMode mode, double cutoff_t, double cutoff_s) {
  if (shape.size() != 3) throw ShapeError("make_lowpass expects a (frames, height, width) shape");
  for (double c : {cutoff_t, cutoff_s})
    if (!(c > 0.0 && c <= 1.0)) throw ParameterError("low-pass cutoff must lie in (0, 1]");
  const double cut[3] = {cutoff_t, cutoff_s, cutoff_s};
  LowPassFilter f{mode, cutoff_t, cutoff_s, Tensor<double>(shape)};
  std::size_t keep[3];
  for (int a = 0; a < 3; ++a) keep[a] = ideal_keep(cut[a], shape[a]);
  for (std::size_t i = 0; i < shape[0]; ++i)
    for (std::size_t j = 0; j < shape[1]; ++j)
      for (std::size_t k = 0; k < shape[2]; ++k) {
        double h;
        if (mode == FilterMode::ideal) {
          h = (i < keep[0] && j < keep[1] && k < keep[2]) ? 1.0 : 0.0;
        } else {
          const std::size_t idx[3] = {i, j, k};
          double r2 = 0.0;
          for (int a = 0; a < 3; ++a) {
            const double u = static_cast<double>(idx[a]) / (cut[a] * static_cast<double>(shape[a]));
            r2 += u * u;
          }
          h = std::exp(-0.5 * r2);
        }
        f.mask(i, j, k) = h;
      }
  return f;
}

// idct(dct(a) ⊙ H + dct(b) ⊙ (1 - H)) over axes (0, 2, 3) of (N, c, h, w)
// tensors, with the (N, h, w) mask broadcast over channels.
inline Tensor<double> spectral_mix(const Tensor<double>& a, const Tensor<double>& b, const Tensor<double>& mask) {
  require_same_shape(a, b, "spectral_mix");
  if (a.rank() != 4) throw ShapeError("spectral_mix expects (N, c, h, w) tensors");
  const std::size_t N = a.extent(0), C = a.extent(1), H = a.extent(2), W = a.extent(3);
  if (mask.shape() != Shape{N, H, W}) throw ShapeError("spectral_mix: mask must be (N, h, w)");
  const std::size_t axes[] = {0, 2, 3};
  const Tensor<double> da = dct(a, axes);
  const Tensor<double> db = dct(b, axes);
  Tensor<double> mixed(a.shape());
  for (std::size_t n = 0; n < N; ++n)
    for (std::size_t c = 0; c < C; ++c)
      for (std::size_t y = 0; y < H; ++y)
        for (std::size_t x = 0; x < W; ++x) {
          const double h = mask(n, y, x);
          mixed(n, c, y, x) = da(n, c, y, x) * h + db(n, c, y, x) * (1.0 - h);
        }
  return idct(mixed, axes);
}

// z^τ = (1 - t_init) * broadcast(z1) + t_init * eps, the flow-matching
// forward path evaluated at the sampler's entry time.
inline Tensor<double> noised_anchor(const Tensor<double>& z1, const Tensor<double>& eps, double t_init) {
  if (!(t_init > 0.0 && t_init <= 1.0)) throw ParameterError("t_init must lie in (0, 1]");
  if (eps.rank() != 4 || z1.rank() != 3 || Shape(eps.shape().begin() + 1, eps.shape().end()) != z1.shape())
    throw ShapeError("dct_init: z1 must be (c,h,w) and eps (N,c,h,w) with matching trailing extents");
  Tensor<double> out = broadcast_frames(z1, eps.extent(0));
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = (1.0 - t_init) * out[i] + t_init * eps[i];
  return out;
}

// Refined inference noise: low frequencies of z^τ, high frequencies of eps.
inline Tensor<double> dct_init(const Tensor<double>& z1, const Tensor<double>& eps, double t_init,
                               const LowPassFilter& filter) {
  return spectral_mix(noised_anchor(z1, eps, t_init), eps, filter.mask);
}

struct DctInitReport {
  double kept_fraction = 0.0;
  double image_branch_energy = 0.0;  // Σ (DCT(z^τ) ⊙ H)²
  double noise_branch_energy = 0.0;  // Σ (DCT(eps) ⊙ (1-H))²
  double total_energy = 0.0;         // Σ DCT(ε')² = ‖ε'‖²
};

struct DctInitResult {
  Tensor<double> noise;
  DctInitReport report;
};

inline DctInitResult dct_init_with_report(const Tensor<double>& z1, const Tensor<double>& eps, double t_init,
                                          const LowPassFilter& filter) {
  const Tensor<double> ztau = noised_anchor(z1, eps, t_init);
  DctInitResult r{spectral_mix(ztau, eps, filter.mask), {}};
  const std::size_t axes[] = {0, 2, 3};
  const Tensor<double> dz = dct(ztau, axes), de = dct(eps, axes);
  const std::size_t N = eps.extent(0), C = eps.extent(1), H = eps.extent(2), W = eps.extent(3);
  for (std::size_t n = 0; n < N; ++n)
    for (std::size_t c = 0; c < C; ++c)
      for (std::size_t y = 0; y < H; ++y)
        for (std::size_t x = 0; x < W; ++x) {
          const double h = filter.mask(n, y, x);
          const double a = dz(n, c, y, x) * h, b = de(n, c, y, x) * (1.0 - h);
          r.report.image_branch_energy += a * a;
          r.report.noise_branch_energy += b * b;
        }
  r.report.kept_fraction = filter.kept_fraction();
  const double norm = norm2(r.noise);
  r.report.total_energy = norm * norm;
  return r;
}

// Minimal direct 2-D DFT, O(H·W·(H+W)).
inline std::vector<std::complex<double>> dft2(const Tensor<double>& x) {
  if (x.rank() != 2) throw ShapeError("dft2 expects a 2-D tensor");
  const std::size_t H = x.extent(0), W = x.extent(1);
  std::vector<std::complex<double>> rows(H * W), out(H * W);
  const double tau = 2.0 * std::numbers::pi;
  for (std::size_t y = 0; y < H; ++y)
    for (std::size_t v = 0; v < W; ++v) {
      std::complex<double> acc;
      for (std::size_t xx = 0; xx < W; ++xx)
        acc += x(y, xx) * std::polar(1.0, -tau * static_cast<double>(v * xx % W) / static_cast<double>(W));
      rows[y * W + v] = acc;
    }
  for (std::size_t u = 0; u < H; ++u)
    for (std::size_t v = 0; v < W; ++v) {
      std::complex<double> acc;
      for (std::size_t y = 0; y < H; ++y)
        acc += rows[y * W + v] * std::polar(1.0, -tau * static_cast<double>(u * y % H) / static_cast<double>(H));
      out[u * W + v] = acc;
    }
  return out;
}

enum class SpectralTransform { dct, fft };

// Cumulative energy fraction as a function of normalized frequency radius.
// Radii are fractions of Nyquist per axis combined as sqrt(fu² + fv²)/sqrt(2),
// so both transforms share the [0, 1] axis: DCT index u maps to u/H, DFT
// index u maps to 2·min(u, H-u)/H.
struct EnergyProfile {
  std::vector<double> radius;
  std::vector<double> fraction;

  // Cumulative fraction at the largest sampled radius <= r.
  double at(double r) const {
    double f = 0.0;
    for (std::size_t i = 0; i < radius.size() && radius[i] <= r + 1e-12; ++i) f = fraction[i];
    return f;
  }
};

inline EnergyProfile spectral_energy_profile(const Tensor<double>& x, SpectralTransform transform,
                                             std::size_t bins = 101) {
  if (x.rank() != 2) throw ShapeError("spectral_energy_profile expects a 2-D tensor");
  if (bins < 2) throw ParameterError("spectral_energy_profile needs at least 2 bins");
  const std::size_t H = x.extent(0), W = x.extent(1);
  std::vector<std::pair<double, double>> coeffs;  // (radius, energy)
  coeffs.reserve(H * W);
  if (transform == SpectralTransform::dct) {
    const Tensor<double> c = dct(x, {0, 1});
    for (std::size_t u = 0; u < H; ++u)
      for (std::size_t v = 0; v < W; ++v) {
        const double fu = static_cast<double>(u) / H, fv = static_cast<double>(v) / W;
        coeffs.emplace_back(std::sqrt(fu * fu + fv * fv) / std::numbers::sqrt2, c(u, v) * c(u, v));
      }
  } else {
    const auto c = dft2(x);
    for (std::size_t u = 0; u < H; ++u)
      for (std::size_t v = 0; v < W; ++v) {
        const double fu = 2.0 * static_cast<double>(std::min(u, H - u)) / H;
        const double fv = 2.0 * static_cast<double>(std::min(v, W - v)) / W;
        coeffs.emplace_back(std::sqrt(fu * fu + fv * fv) / std::numbers::sqrt2, std::norm(c[u * W + v]));
      }
  }
  double total = 0.0;
  for (const auto& [r, e] : coeffs) total += e;
  EnergyProfile p;
  for (std::size_t i = 0; i < bins; ++i) {
    const double r = static_cast<double>(i) / static_cast<double>(bins - 1);
    double acc = 0.0;
    for (const auto& [cr, e] : coeffs)
      if (cr <= r + 1e-12) acc += e;
    p.radius.push_back(r);
    p.fraction.push_back(total > 0.0 ? std::min(acc / total, 1.0) : 1.0);
  }
  return p;
}

}  // namespace mk
