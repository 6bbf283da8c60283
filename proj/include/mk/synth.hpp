// Copyright 2026 The motionkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "mk/clip.hpp"
#include "mk/rng.hpp"

namespace mk {

enum class SynthKind { moving_square, sinusoid_translate };

inline SynthKind parse_synth_kind(const std::string& s) {
  if (s == "moving_square" || s == "moving-square") return SynthKind::moving_square;
  if (s == "sinusoid_translate" || s == "sinusoid-translate") return SynthKind::sinusoid_translate;
  throw ParameterError("unknown synthetic clip kind '" + s + "'");
}

struct SynthConfig {
  std::size_t frames = 16;
  std::size_t channels = 1;
  std::size_t height = 32;
  std::size_t width = 32;
  double square_size = 8.0;
  double period = 32.0;  // sinusoid wavelength in pixels
};

namespace detail {

// Length of [a, a+1) ∩ [p, p+s) on a circle of circumference `len`.
inline double wrapped_overlap(double a, double p, double s, double len) {
  double total = 0.0;
  p = std::fmod(p, len);
  if (p < 0) p += len;
  for (double shift : {-len, 0.0, len}) {
    const double lo = std::max(a, p + shift), hi = std::min(a + 1.0, p + shift + s);
    if (hi > lo) total += hi - lo;
  }
  return std::min(total, 1.0);
}

}  // namespace detail

// One procedural clip. Content moves along +x by exactly `velocity` pixels per
// frame with wrap-around; start position (and sinusoid phase) come from `rng`.
// moving_square: a square of side square_size at intensity 1 on 0, rendered by
// exact area coverage. sinusoid_translate: 0.5 + 0.25 sin(2π(x - x0)/period)
// + 0.25 sin(2π y/period).
inline VideoClip synth_clip(SynthKind kind, double velocity, Rng& rng, const SynthConfig& cfg = {}) {
  if (!(velocity >= 0.0)) throw ParameterError("velocity must be >= 0");
  const double W = static_cast<double>(cfg.width), H = static_cast<double>(cfg.height);
  const double x0 = std::floor(rng.uniform() * W);
  const double y0 = std::floor(rng.uniform() * H);
  Tensor<double> f({cfg.frames, cfg.channels, cfg.height, cfg.width});
  for (std::size_t k = 0; k < cfg.frames; ++k) {
    const double px = x0 + velocity * static_cast<double>(k);
    for (std::size_t y = 0; y < cfg.height; ++y)
      for (std::size_t x = 0; x < cfg.width; ++x) {
        double value;
        if (kind == SynthKind::moving_square) {
          value = detail::wrapped_overlap(static_cast<double>(x), px, cfg.square_size, W) *
                  detail::wrapped_overlap(static_cast<double>(y), y0, cfg.square_size, H);
        } else {
          const double tau = 2.0 * std::numbers::pi / cfg.period;
          value = 0.5 + 0.25 * std::sin(tau * (static_cast<double>(x) - px)) + 0.25 * std::sin(tau * (static_cast<double>(y) + y0));
        }
        for (std::size_t c = 0; c < cfg.channels; ++c) f(k, c, y, x) = value;
      }
  }
  return {std::move(f)};
}

// `count` clips; clip i draws from rng.split(i).
inline std::vector<VideoClip> synth_dataset(SynthKind kind, double velocity, const Rng& rng, std::size_t count,
                                            const SynthConfig& cfg = {}) {
  std::vector<VideoClip> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    Rng r = rng.split(i);
    out.push_back(synth_clip(kind, velocity, r, cfg));
  }
  return out;
}

// Every `interval`-th frame of `v`, starting at frame 0.
inline VideoClip subsample_frames(const VideoClip& v, std::size_t interval) {
  if (interval == 0) throw ParameterError("interval must be positive");
  std::vector<Tensor<double>> parts;
  for (std::size_t i = 0; i < v.frame_count(); i += interval) parts.push_back(slice_frames(v.frames, i, i + 1));
  return {concat_frames<double>(parts)};
}

// Smooth diagonal gradient image, (n, n), values (y + x) / (2n - 2) in [0, 1].
inline Tensor<double> diagonal_ramp(std::size_t n) {
  if (n < 2) throw ParameterError("ramp needs n >= 2");
  Tensor<double> x({n, n});
  for (std::size_t y = 0; y < n; ++y)
    for (std::size_t c = 0; c < n; ++c) x(y, c) = static_cast<double>(y + c) / static_cast<double>(2 * n - 2);
  return x;
}

}  // namespace mk
