// Copyright 2026 The motionkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <span>
#include <vector>

#include "mk/clip.hpp"
#include "mk/rng.hpp"
#include "mk/tensor.hpp"

namespace mk {

struct SsimParams {
  std::size_t window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double dynamic_range = 1.0;

  void validate() const {
    if (window == 0 || window % 2 == 0) throw ParameterError("SSIM window size must be odd");
    if (!(sigma > 0.0)) throw ParameterError("SSIM sigma must be positive");
    if (!(k1 > 0.0 && k2 > 0.0)) throw ParameterError("SSIM constants K1, K2 must be positive");
    if (!(dynamic_range > 0.0)) throw ParameterError("SSIM dynamic range must be positive");
  }
};

// Per-scale weights of the five-scale MS-SSIM.
inline constexpr std::array<double, 5> kMsSsimWeights = {0.0448, 0.2856, 0.3001, 0.2363, 0.1333};

inline constexpr int kBucketCount = 20;

class DynamicsBucket {
 public:
  explicit DynamicsBucket(int value) : value_(value) {
    if (value < 0 || value >= kBucketCount) throw ParameterError("dynamics bucket must lie in [0, 19]");
  }
  int value() const noexcept { return value_; }
  friend bool operator==(DynamicsBucket, DynamicsBucket) = default;

 private:
  int value_;
};

namespace detail {

inline std::vector<double> gaussian_kernel(std::size_t size, double sigma) {
  std::vector<double> k(size);
  const double c = static_cast<double>(size / 2);
  double s = 0.0;
  for (std::size_t i = 0; i < size; ++i) {
    const double x = static_cast<double>(i) - c;
    k[i] = std::exp(-x * x / (2.0 * sigma * sigma));
    s += k[i];
  }
  for (auto& v : k) v /= s;
  return k;
}

// 'valid' separable correlation of an H×W image, output (H-w+1)×(W-w+1).
inline std::vector<double> filter_valid(std::span<const double> img, std::size_t H, std::size_t W,
                                        std::span<const double> k) {
  const std::size_t w = k.size(), oh = H - w + 1, ow = W - w + 1;
  std::vector<double> tmp(H * ow), out(oh * ow);
  for (std::size_t y = 0; y < H; ++y)
    for (std::size_t x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (std::size_t i = 0; i < w; ++i) acc += k[i] * img[y * W + x + i];
      tmp[y * ow + x] = acc;
    }
  for (std::size_t y = 0; y < oh; ++y)
    for (std::size_t x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (std::size_t i = 0; i < w; ++i) acc += k[i] * tmp[(y + i) * ow + x];
      out[y * ow + x] = acc;
    }
  return out;
}

struct Plane {
  std::vector<double> v;
  std::size_t h = 0, w = 0;
};

// Splits a (H,W) or (C,H,W) frame into single-channel planes.
inline std::vector<Plane> planes_of(const Tensor<double>& f) {
  if (f.rank() != 2 && f.rank() != 3) throw ShapeError("frame must be (H,W) or (C,H,W)");
  const std::size_t C = f.rank() == 3 ? f.extent(0) : 1;
  const std::size_t H = f.extent(f.rank() - 2), W = f.extent(f.rank() - 1);
  std::vector<Plane> out(C);
  for (std::size_t c = 0; c < C; ++c)
    out[c] = Plane{std::vector<double>(f.data() + c * H * W, f.data() + (c + 1) * H * W), H, W};
  return out;
}

inline Plane downsample2(const Plane& p) {
  Plane o{std::vector<double>((p.h / 2) * (p.w / 2)), p.h / 2, p.w / 2};
  for (std::size_t y = 0; y < o.h; ++y)
    for (std::size_t x = 0; x < o.w; ++x)
      o.v[y * o.w + x] = 0.25 * (p.v[2 * y * p.w + 2 * x] + p.v[2 * y * p.w + 2 * x + 1] +
                                 p.v[(2 * y + 1) * p.w + 2 * x] + p.v[(2 * y + 1) * p.w + 2 * x + 1]);
  return o;
}

}  // namespace detail

// Mean SSIM and mean contrast-structure term of one plane pair.
struct SsimComponents {
  double ssim = 0.0;
  double cs = 0.0;
};

inline SsimComponents ssim_components(const detail::Plane& a, const detail::Plane& b, const SsimParams& p) {
  if (a.h < p.window || a.w < p.window) throw ParameterError("frame smaller than the SSIM window");
  const auto k = detail::gaussian_kernel(p.window, p.sigma);
  const std::size_t n = a.v.size();
  std::vector<double> aa(n), bb(n), ab(n);
  for (std::size_t i = 0; i < n; ++i) {
    aa[i] = a.v[i] * a.v[i];
    bb[i] = b.v[i] * b.v[i];
    ab[i] = a.v[i] * b.v[i];
  }
  const auto mu_a = detail::filter_valid(a.v, a.h, a.w, k);
  const auto mu_b = detail::filter_valid(b.v, a.h, a.w, k);
  const auto e_aa = detail::filter_valid(aa, a.h, a.w, k);
  const auto e_bb = detail::filter_valid(bb, a.h, a.w, k);
  const auto e_ab = detail::filter_valid(ab, a.h, a.w, k);
  const double c1 = (p.k1 * p.dynamic_range) * (p.k1 * p.dynamic_range);
  const double c2 = (p.k2 * p.dynamic_range) * (p.k2 * p.dynamic_range);
  double s_sum = 0.0, cs_sum = 0.0;
  for (std::size_t i = 0; i < mu_a.size(); ++i) {
    const double ma = mu_a[i], mb = mu_b[i];
    const double va = e_aa[i] - ma * ma, vb = e_bb[i] - mb * mb, cov = e_ab[i] - ma * mb;
    const double cs = (2.0 * cov + c2) / (va + vb + c2);
    const double lum = (2.0 * ma * mb + c1) / (ma * ma + mb * mb + c1);
    s_sum += lum * cs;
    cs_sum += cs;
  }
  const double m = static_cast<double>(mu_a.size());
  return {s_sum / m, cs_sum / m};
}

inline void require_frame_pair(const Tensor<double>& a, const Tensor<double>& b) {
  require_same_shape(a, b, "frame pair");
}

// Gaussian-windowed mean SSIM; multi-channel frames average over channels.
inline double ssim(const Tensor<double>& a, const Tensor<double>& b, const SsimParams& p = {}) {
  p.validate();
  require_frame_pair(a, b);
  const auto pa = detail::planes_of(a), pb = detail::planes_of(b);
  double s = 0.0;
  for (std::size_t c = 0; c < pa.size(); ++c) s += ssim_components(pa[c], pb[c], p).ssim;
  return s / static_cast<double>(pa.size());
}

// Largest scale count <= requested with min extent >= window * 2^(scales-1).
inline int effective_scales(std::size_t height, std::size_t width, std::size_t window, int requested) {
  const std::size_t m = std::min(height, width);
  int s = 0;
  for (int k = 1; k <= requested; ++k)
    if (m >= window << (k - 1)) s = k;
  return s;
}

// Multi-scale SSIM with 2×2 average-pool pyramid. Negative per-scale terms are
// clamped to 0 before the weighted geometric product.
inline double ms_ssim(const Tensor<double>& a, const Tensor<double>& b, const SsimParams& p = {}, int scales = 5) {
  p.validate();
  require_frame_pair(a, b);
  if (scales < 1 || scales > static_cast<int>(kMsSsimWeights.size()))
    throw ParameterError("MS-SSIM scales must lie in [1, 5]");
  auto pa = detail::planes_of(a), pb = detail::planes_of(b);
  const int m = effective_scales(pa[0].h, pa[0].w, p.window, scales);
  if (m == 0) throw ParameterError("frame too small for MS-SSIM even at one scale");
  double wsum = 0.0;
  for (int j = 0; j < m; ++j) wsum += kMsSsimWeights[j];
  double total = 0.0;
  for (std::size_t c = 0; c < pa.size(); ++c) {
    detail::Plane x = pa[c], y = pb[c];
    double value = 1.0;
    for (int j = 0; j < m; ++j) {
      const auto comp = ssim_components(x, y, p);
      const double term = j + 1 == m ? comp.ssim : comp.cs;
      value *= std::pow(std::max(term, 0.0), kMsSsimWeights[j] / wsum);
      if (j + 1 < m) {
        x = detail::downsample2(x);
        y = detail::downsample2(y);
      }
    }
    total += value;
  }
  return total / static_cast<double>(pa.size());
}

inline double mean_abs_diff(const Tensor<double>& a, const Tensor<double>& b) {
  require_frame_pair(a, b);
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return s / static_cast<double>(a.size());
}

// Mean MS-SSIM between consecutive frames.
inline double dynamics_score(const VideoClip& v, const SsimParams& p = {}) {
  v.validate();
  const std::size_t n = v.frame_count();
  if (n < 2) throw ParameterError("dynamics_score needs at least two frames");
  double s = 0.0;
  Tensor<double> prev = v.frame(0);
  for (std::size_t i = 1; i < n; ++i) {
    Tensor<double> cur = v.frame(i);
    s += ms_ssim(cur, prev, p);
    prev = std::move(cur);
  }
  return s / static_cast<double>(n - 1);
}

// b = min(19, floor(20 * (1 - clamp(s, 0, 1)))): 0 is static, 19 most dynamic.
inline DynamicsBucket score_to_bucket(double s) {
  if (std::isnan(s)) throw ParameterError("dynamics score is NaN");
  const double c = std::clamp(s, 0.0, 1.0);
  const int b = static_cast<int>(std::floor(static_cast<double>(kBucketCount) * (1.0 - c)));
  return DynamicsBucket(std::min(kBucketCount - 1, b));
}

// Uniform frame interval in [3, 10].
inline int sample_clip_interval(Rng& rng) { return static_cast<int>(rng.uniform_int(3, 10)); }

// Mean of `metric` over frame pairs (i, i + interval).
template <class Metric>
double mean_pair_metric(const VideoClip& v, std::size_t interval, Metric&& metric) {
  const std::size_t n = v.frame_count();
  if (interval == 0 || interval >= n) throw ParameterError("interval must lie in [1, N-1]");
  double s = 0.0;
  for (std::size_t i = 0; i + interval < n; ++i) s += metric(v.frame(i + interval), v.frame(i));
  return s / static_cast<double>(n - interval);
}

struct EstimatorCostReport {
  std::size_t videos = 0;
  double mean_time_mad_s = 0.0;
  double mean_time_ssim_s = 0.0;
  double mean_time_ms_ssim_s = 0.0;
  std::vector<std::size_t> intervals;
  std::vector<double> mad_by_interval;      // mean over videos
  std::vector<double> ms_ssim_by_interval;  // mean over videos
  bool mad_monotone = false;      // non-decreasing difference as interval grows
  bool ms_ssim_monotone = false;  // non-increasing similarity as interval grows

  bool mad_cheaper() const { return mean_time_mad_s < mean_time_ms_ssim_s; }
};

// Times each estimator over all consecutive-frame pairs of every video and
// checks that both respond monotonically to the frame interval.
inline EstimatorCostReport estimator_cost_comparison(std::span<const VideoClip> videos, const SsimParams& p = {},
                                                     std::vector<std::size_t> intervals = {3, 7, 11, 15}) {
  if (videos.empty()) throw ParameterError("estimator_cost_comparison needs at least one video");
  using clock = std::chrono::steady_clock;
  EstimatorCostReport r;
  r.videos = videos.size();
  for (const auto& v : videos) {
    v.validate();
    const std::size_t n = v.frame_count();
    if (n < 2) throw ParameterError("every video needs at least two frames");
    std::vector<Tensor<double>> frames;
    for (std::size_t i = 0; i < n; ++i) frames.push_back(v.frame(i));
    volatile double sink = 0.0;
    auto t0 = clock::now();
    for (std::size_t i = 1; i < n; ++i) sink = sink + mean_abs_diff(frames[i], frames[i - 1]);
    auto t1 = clock::now();
    for (std::size_t i = 1; i < n; ++i) sink = sink + ssim(frames[i], frames[i - 1], p);
    auto t2 = clock::now();
    for (std::size_t i = 1; i < n; ++i) sink = sink + ms_ssim(frames[i], frames[i - 1], p);
    auto t3 = clock::now();
    r.mean_time_mad_s += std::chrono::duration<double>(t1 - t0).count();
    r.mean_time_ssim_s += std::chrono::duration<double>(t2 - t1).count();
    r.mean_time_ms_ssim_s += std::chrono::duration<double>(t3 - t2).count();
  }
  const double nv = static_cast<double>(videos.size());
  r.mean_time_mad_s /= nv;
  r.mean_time_ssim_s /= nv;
  r.mean_time_ms_ssim_s /= nv;

  std::size_t min_frames = videos[0].frame_count();
  for (const auto& v : videos) min_frames = std::min(min_frames, v.frame_count());
  for (std::size_t k : intervals) {
    if (k == 0 || k >= min_frames) continue;
    double mad = 0.0, ms = 0.0;
    for (const auto& v : videos) {
      mad += mean_pair_metric(v, k, [](const Tensor<double>& a, const Tensor<double>& b) { return mean_abs_diff(a, b); });
      ms += mean_pair_metric(v, k, [&p](const Tensor<double>& a, const Tensor<double>& b) { return ms_ssim(a, b, p); });
    }
    r.intervals.push_back(k);
    r.mad_by_interval.push_back(mad / nv);
    r.ms_ssim_by_interval.push_back(ms / nv);
  }
  r.mad_monotone = std::is_sorted(r.mad_by_interval.begin(), r.mad_by_interval.end());
  r.ms_ssim_monotone = std::is_sorted(r.ms_ssim_by_interval.rbegin(), r.ms_ssim_by_interval.rend());
  return r;
}

}  // namespace mk
