// Copyright 2026 The motionkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <functional>

#include "mk/rng.hpp"
#include "mk/tensor.hpp"

namespace mk {

// Data sits at t = 0, noise at t = 1.
struct FlowState {
  Tensor<double> z_t;
  double t = 0.0;
};

enum class ScheduleMode { uniform, logit_normal };

struct TimestepSchedule {
  ScheduleMode mode = ScheduleMode::logit_normal;
  double loc = 0.0;
  double scale = 1.0;
  // Uniform draws lie in [margin, 1 - margin].
  double margin = 1e-5;
};

struct GuidanceConfig {
  double scale = 5.5;

  void validate() const {
    if (!(scale >= 1.0)) throw ParameterError("guidance scale must be >= 1");
  }
};

inline constexpr int kDefaultSteps = 25;

// Sampler entry time 1 - 1/steps.
inline double default_t_init(int steps) { return 1.0 - 1.0 / static_cast<double>(steps); }

// z_t = t z1 + (1 - t) z0.
inline FlowState interpolate(const Tensor<double>& z0, const Tensor<double>& z1, double t) {
  require_same_shape(z0, z1, "interpolate");
  if (!(t >= 0.0 && t <= 1.0)) throw ParameterError("interpolate: t must lie in [0, 1]");
  if (t == 0.0) return {z0, t};
  if (t == 1.0) return {z1, t};
  Tensor<double> z(z0.shape());
  for (std::size_t i = 0; i < z.size(); ++i) z[i] = t * z1[i] + (1.0 - t) * z0[i];
  return {std::move(z), t};
}

// v = z1 - z0, constant along the path.
inline Tensor<double> velocity_target(const Tensor<double>& z0, const Tensor<double>& z1) {
  require_same_shape(z0, z1, "velocity_target");
  return z1 - z0;
}

// Mean over elements of (z1 - z0 - pred_v)².
inline double fm_loss(const Tensor<double>& pred_v, const Tensor<double>& z0, const Tensor<double>& z1) {
  require_same_shape(pred_v, z0, "fm_loss");
  require_same_shape(z0, z1, "fm_loss");
  double s = 0.0;
  for (std::size_t i = 0; i < pred_v.size(); ++i) {
    const double e = (z1[i] - z0[i]) - pred_v[i];
    s += e * e;
  }
  return s / static_cast<double>(pred_v.size());
}

// Strictly inside (0, 1).
inline double sample_timestep(Rng& rng, const TimestepSchedule& sched = {}) {
  if (sched.mode == ScheduleMode::uniform)
    return sched.margin + (1.0 - 2.0 * sched.margin) * rng.uniform_open();
  const double x = sched.loc + sched.scale * rng.normal();
  double t = 1.0 / (1.0 + std::exp(-x));
  // sigmoid saturates in double precision for |x| > ~37.
  constexpr double lo = 0x1.0p-53, hi = 1.0 - 0x1.0p-53;
  return std::clamp(t, lo, hi);
}

enum class Branch { conditional, unconditional };

// Learned velocity field v(z_t, t) for either guidance branch.
using VelocityField = std::function<Tensor<double>(const Tensor<double>& z_t, double t, Branch)>;

namespace detail {

inline Tensor<double> guided_velocity(const VelocityField& model, const Tensor<double>& z, double t,
                                      const GuidanceConfig& g, std::size_t step) {
  Tensor<double> v = model(z, t, Branch::conditional);
  if (g.scale != 1.0) {
    const Tensor<double> vu = model(z, t, Branch::unconditional);
    require_same_shape(v, vu, "guided velocity");
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = vu[i] + g.scale * (v[i] - vu[i]);
  }
  require_same_shape(v, z, "velocity field output");
  if (!all_finite(v)) throw NumericalFailure("sampler step", step);
  return v;
}

}  // namespace detail

// Explicit Euler from t_init down to 0 on a uniform grid
// t_k = t_init - k * (t_init / steps), with guided velocity
// v = v_uncond + scale (v_cond - v_uncond). With scale 1 only the conditional
// branch is evaluated.
inline Tensor<double> euler_sample(const VelocityField& model, const Tensor<double>& z_init, int steps,
                                   const GuidanceConfig& g = {}, double t_init = default_t_init(kDefaultSteps)) {
  if (steps < 1) throw ParameterError("euler_sample: steps must be >= 1");
  if (!(t_init > 0.0 && t_init <= 1.0)) throw ParameterError("euler_sample: t_init must lie in (0, 1]");
  g.validate();
  const double dt = t_init / static_cast<double>(steps);
  Tensor<double> z = z_init;
  for (int k = 0; k < steps; ++k) {
    const double t = t_init - static_cast<double>(k) * dt;
    const Tensor<double> v = detail::guided_velocity(model, z, t, g, static_cast<std::size_t>(k));
    for (std::size_t i = 0; i < z.size(); ++i) z[i] -= dt * v[i];
  }
  return z;
}

// Same ODE integrated upward from t = 0 to t_init, recovering the initial
// latent that regenerates `z_data`.
inline Tensor<double> euler_invert(const VelocityField& model, const Tensor<double>& z_data, int steps,
                                   const GuidanceConfig& g = {}, double t_init = default_t_init(kDefaultSteps)) {
  if (steps < 1) throw ParameterError("euler_invert: steps must be >= 1");
  if (!(t_init > 0.0 && t_init <= 1.0)) throw ParameterError("euler_invert: t_init must lie in (0, 1]");
  g.validate();
  const double dt = t_init / static_cast<double>(steps);
  Tensor<double> z = z_data;
  for (int k = 0; k < steps; ++k) {
    const double t = static_cast<double>(k) * dt;
    const Tensor<double> v = detail::guided_velocity(model, z, t, g, static_cast<std::size_t>(k));
    for (std::size_t i = 0; i < z.size(); ++i) z[i] += dt * v[i];
  }
  return z;
}

}  // namespace mk
