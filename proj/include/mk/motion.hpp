// Copyright 2026 The motionkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "mk/clip.hpp"
#include "mk/dynamics.hpp"
#include "mk/flowmatch.hpp"
#include "mk/rng.hpp"
#include "mk/tensor.hpp"

// Frame indexing: prose numbers frames z_1..z_N; tensors index them 0..N-1,
// so z_1 (the anchor / conditioning image) is frame 0.

namespace mk {

// Average pooling by `pool` along both spatial axes; stands in for a VAE
// encoder. Linear and deterministic.
inline LatentClip encode_latent(const VideoClip& v, std::size_t pool = 2) {
  v.validate();
  if (pool == 0) throw ParameterError("pool factor must be positive");
  const std::size_t N = v.frames.extent(0), C = v.frames.extent(1), H = v.frames.extent(2), W = v.frames.extent(3);
  if (H % pool || W % pool) throw ShapeError("frame extents must be divisible by the pool factor");
  const std::size_t h = H / pool, w = W / pool;
  Tensor<double> out({N, C, h, w});
  const double inv = 1.0 / static_cast<double>(pool * pool);
  for (std::size_t n = 0; n < N; ++n)
    for (std::size_t c = 0; c < C; ++c)
      for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x) {
          double s = 0.0;
          for (std::size_t dy = 0; dy < pool; ++dy)
            for (std::size_t dx = 0; dx < pool; ++dx) s += v.frames(n, c, y * pool + dy, x * pool + dx);
          out(n, c, y, x) = s * inv;
        }
  return {std::move(out)};
}

enum class ResidualKind {
  anchored,     // z_i - z_1
  consecutive,  // z_i - z_{i-1}, the ablation variant
};

struct MotionResidual {
  Tensor<double> residuals;  // (N-1, c, h, w)
  Tensor<double> anchor;     // (c, h, w), z_1
  ResidualKind kind = ResidualKind::anchored;
};

namespace detail {

inline void require_residual_frames(const LatentClip& z) {
  z.validate();
  if (z.frame_count() < 2) throw ParameterError("motion residuals need at least two frames");
}

}  // namespace detail

// M = {z_2 - z_1, ..., z_N - z_1}. Decoding is exact whenever the subtraction
// is exact, e.g. for latents on a common dyadic grid.
inline MotionResidual encode_residuals(const LatentClip& z) {
  detail::require_residual_frames(z);
  const std::size_t fs = frame_numel(z.frames);
  Tensor<double> anchor = z.frame(0);
  Tensor<double> m = slice_frames(z.frames, 1, z.frame_count());
  for (std::size_t i = 0; i < m.size(); ++i) m[i] -= anchor[i % fs];
  return {std::move(m), std::move(anchor), ResidualKind::anchored};
}

inline MotionResidual encode_residuals_consecutive(const LatentClip& z) {
  detail::require_residual_frames(z);
  Tensor<double> m = slice_frames(z.frames, 1, z.frame_count());
  for (std::size_t i = 0; i < m.size(); ++i) m[i] -= z.frames[i];
  return {std::move(m), z.frame(0), ResidualKind::consecutive};
}

// Anchored: frame i = anchor + m_i. Consecutive: running sum from the anchor.
inline LatentClip decode_residuals(const MotionResidual& m) {
  const std::size_t fs = m.anchor.size();
  if (m.residuals.rank() < 2 || frame_numel(m.residuals) != fs)
    throw ShapeError("residual frames do not match the anchor shape");
  const std::size_t n = m.residuals.extent(0) + 1;
  Shape shape{n};
  shape.insert(shape.end(), m.anchor.shape().begin(), m.anchor.shape().end());
  Tensor<double> out(std::move(shape));
  std::copy_n(m.anchor.data(), fs, out.data());
  for (std::size_t f = 1; f < n; ++f) {
    const double* base = m.kind == ResidualKind::anchored ? m.anchor.data() : out.data() + (f - 1) * fs;
    const double* r = m.residuals.data() + (f - 1) * fs;
    double* o = out.data() + f * fs;
    for (std::size_t i = 0; i < fs; ++i) o[i] = base[i] + r[i];
  }
  return {std::move(out)};
}

// Drops the conditioning frame from a (N, c, h, w) model output.
inline Tensor<double> extract_predicted_residuals(const Tensor<double>& model_out) {
  if (model_out.rank() < 1 || model_out.extent(0) < 2)
    throw ShapeError("model output needs at least two frames");
  return slice_frames(model_out, 1, model_out.extent(0));
}

// X_t = concat([z_1], M_t + z_1) along the frame axis.
inline Tensor<double> assemble_model_input(const Tensor<double>& anchor, const Tensor<double>& m_t) {
  Shape s{1};
  s.insert(s.end(), anchor.shape().begin(), anchor.shape().end());
  return concat_frames(anchor.reshaped(s), add_to_frames(m_t, anchor));
}

struct TrainingBatchItem {
  Tensor<double> x_t;       // (N, c, h, w)
  Tensor<double> target_v;  // (N-1, c, h, w)
  double t = 0.0;
  DynamicsBucket bucket{0};
  Tensor<double> residuals;  // M
  Tensor<double> noise;      // ε
};

// One training item, following the order: bucket from the pixel clip, latent
// residuals M, t ~ schedule, ε ~ N(0, I), M_t = t ε + (1 - t) M,
// X_t = [z_1, M_t + z_1], target v = ε - M.
inline TrainingBatchItem assemble_training_item(const LatentClip& z, Rng& rng, const TimestepSchedule& sched,
                                                const SsimParams& p, const VideoClip& pixel_clip) {
  const DynamicsBucket b = score_to_bucket(dynamics_score(pixel_clip, p));
  MotionResidual m = encode_residuals(z);
  const double t = sample_timestep(rng, sched);
  Tensor<double> eps = randn(rng, m.residuals.shape());
  const FlowState mt = interpolate(m.residuals, eps, t);
  TrainingBatchItem item{assemble_model_input(m.anchor, mt.z_t), velocity_target(m.residuals, eps), t, b,
                         std::move(m.residuals), std::move(eps)};
  return item;
}

struct ErrorAccumulation {
  std::vector<double> anchored_variance;     // per decoded frame 1..N-1
  std::vector<double> consecutive_variance;  // per decoded frame 1..N-1
};

// Monte-Carlo decode-error variance when i.i.d. N(0, sigma²) noise perturbs
// every residual: anchored errors stay at sigma², consecutive errors add up.
inline ErrorAccumulation error_accumulation_study(std::size_t frames, const Shape& latent_shape, double sigma,
                                                  std::size_t trials, std::uint64_t seed) {
  if (frames < 2 || trials == 0) throw ParameterError("error_accumulation_study needs frames >= 2 and trials >= 1");
  Shape shape{frames};
  shape.insert(shape.end(), latent_shape.begin(), latent_shape.end());
  ErrorAccumulation r{std::vector<double>(frames - 1), std::vector<double>(frames - 1)};
  const Rng root(seed);
  std::size_t count = 0;
  for (std::size_t trial = 0; trial < trials; ++trial) {
    Rng rng = root.split(trial);
    const LatentClip z{randn(rng, shape)};
    for (ResidualKind kind : {ResidualKind::anchored, ResidualKind::consecutive}) {
      MotionResidual m = kind == ResidualKind::anchored ? encode_residuals(z) : encode_residuals_consecutive(z);
      const Tensor<double> noise = randn(rng, m.residuals.shape());
      for (std::size_t i = 0; i < noise.size(); ++i) m.residuals[i] += sigma * noise[i];
      const LatentClip dec = decode_residuals(m);
      auto& acc = kind == ResidualKind::anchored ? r.anchored_variance : r.consecutive_variance;
      const std::size_t fs = frame_numel(z.frames);
      for (std::size_t f = 1; f < frames; ++f)
        for (std::size_t i = 0; i < fs; ++i) {
          const double e = dec.frames[f * fs + i] - z.frames[f * fs + i];
          acc[f - 1] += e * e;
        }
    }
    count += frame_numel(z.frames);
  }
  for (auto* v : {&r.anchored_variance, &r.consecutive_variance})
    for (auto& x : *v) x /= static_cast<double>(count);
  return r;
}

}  // namespace mk
