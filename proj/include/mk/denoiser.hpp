// Copyright 2026 The motionkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mk/autodiff.hpp"
#include "mk/clip.hpp"
#include "mk/dynamics.hpp"
#include "mk/flowmatch.hpp"
#include "mk/motion.hpp"
#include "mk/spectral.hpp"
#include "mk/synth.hpp"

namespace mk {

struct DenoiserConfig {
  std::size_t frames = 8;
  std::size_t channels = 1;
  std::size_t height = 16;
  std::size_t width = 16;
  std::size_t dim = 16;
  std::size_t blocks = 2;
  std::size_t patch = 2;
  std::size_t embed_dim = 16;
  std::size_t mlp_ratio = 2;
  int bucket_count = kBucketCount;
  double rope_base = 10000.0;
  // Added to the spatial attention denominators so all-zero ReLU queries stay
  // finite during training.
  double den_eps = kDenominatorEps;

  void validate() const {
    if (frames < 2) throw ConfigError("denoiser needs at least two frames");
    if (channels == 0 || height == 0 || width == 0) throw ConfigError("latent extents must be positive");
    if (dim == 0 || dim % 2) throw ConfigError("model dim must be even (RoPE pairs)");
    if (embed_dim == 0 || embed_dim % 2) throw ConfigError("embedding dim must be even");
    if (blocks == 0 || mlp_ratio == 0) throw ConfigError("blocks and mlp_ratio must be positive");
    if (patch == 0 || height % patch || width % patch) throw ConfigError("latent extents must be divisible by the patch size");
    if (bucket_count != kBucketCount) throw ConfigError("bucket count is fixed at 20");
  }

  std::size_t tokens_per_frame() const { return (height / patch) * (width / patch); }
  std::size_t token_width() const { return channels * patch * patch; }
  Shape latent_shape() const { return {frames, channels, height, width}; }
  Shape frame_shape() const { return {channels, height, width}; }

  friend bool operator==(const DenoiserConfig&, const DenoiserConfig&) = default;
};

// Named parameter tensors, iterated in name order.
using DenoiserParams = std::map<std::string, Tensor<double>>;

namespace detail {

inline std::string block_name(std::size_t b, const char* leaf) { return "block" + std::to_string(b) + "." + leaf; }

// (name, shape, zero-init) for every parameter.
struct ParamSpec {
  std::string name;
  Shape shape;
  bool zero;
};

inline std::vector<ParamSpec> param_specs(const DenoiserConfig& c) {
  const std::size_t d = c.dim, e = c.embed_dim, tw = c.token_width(), h = c.mlp_ratio * d;
  std::vector<ParamSpec> s{
      {"in.w", {tw, d}, false},      {"in.b", {1, d}, true},       {"out.w", {d, tw}, true},
      {"out.b", {1, tw}, true},      {"t_mlp.w1", {e, e}, false},  {"t_mlp.b1", {1, e}, true},
      {"t_mlp.w2", {e, e}, false},   {"t_mlp.b2", {1, e}, true},   {"b_mlp.w1", {e, e}, false},
      {"b_mlp.b1", {1, e}, true},    {"b_mlp.w2", {e, e}, false},  {"b_mlp.b2", {1, e}, true},
  };
  for (std::size_t b = 0; b < c.blocks; ++b) {
    for (const char* n : {"ada_gamma.w", "ada_beta.w"}) s.push_back({block_name(b, n), {e, d}, false});
    for (const char* n : {"ada_gamma.b", "ada_beta.b"}) s.push_back({block_name(b, n), {1, d}, true});
    for (const char* n : {"spatial.q", "spatial.k", "spatial.v", "spatial.o", "temporal.q", "temporal.k", "temporal.v",
                          "temporal.o"})
      s.push_back({block_name(b, n), {d, d}, false});
    s.push_back({block_name(b, "mlp.w1"), {d, h}, false});
    s.push_back({block_name(b, "mlp.b1"), {1, h}, true});
    s.push_back({block_name(b, "mlp.w2"), {h, d}, false});
    s.push_back({block_name(b, "mlp.b2"), {1, d}, true});
  }
  return s;
}

}  // namespace detail

// Weights ~ N(0, 1/fan_in), biases 0, output projection 0 (so an untrained
// model predicts v = 0).
inline DenoiserParams init_params(const DenoiserConfig& cfg, Rng& rng) {
  cfg.validate();
  DenoiserParams p;
  for (const auto& s : detail::param_specs(cfg)) {
    if (s.zero) {
      p.emplace(s.name, Tensor<double>(s.shape));
    } else {
      const double sd = 1.0 / std::sqrt(static_cast<double>(s.shape[0]));
      p.emplace(s.name, map(randn(rng, s.shape), [sd](double x) { return sd * x; }));
    }
  }
  return p;
}

inline std::size_t param_count(const DenoiserConfig& cfg) {
  std::size_t n = 0;
  for (const auto& s : detail::param_specs(cfg)) n += shape_numel(s.shape);
  return n;
}

// Throws ConfigError unless `p` has exactly the tensors `cfg` implies.
inline void check_params(const DenoiserParams& p, const DenoiserConfig& cfg) {
  const auto specs = detail::param_specs(cfg);
  if (p.size() != specs.size()) throw ConfigError("parameter set does not match the model config");
  for (const auto& s : specs) {
    const auto it = p.find(s.name);
    if (it == p.end()) throw ConfigError("missing parameter '" + s.name + "'");
    if (it->second.shape() != s.shape)
      throw ConfigError("parameter '" + s.name + "' has shape " + shape_string(it->second.shape()) + ", config expects " +
                        shape_string(s.shape));
    if (!all_finite(it->second)) throw ConfigError("parameter '" + s.name + "' is not finite");
  }
}

// [sin(x ω_i), cos(x ω_i)], ω_i = 10000^(-i/(E/2)).
inline Tensor<double> sinusoidal_embedding(double x, std::size_t dim) {
  Tensor<double> e({1, dim});
  const std::size_t half = dim / 2;
  for (std::size_t i = 0; i < half; ++i) {
    const double w = std::pow(10000.0, -static_cast<double>(i) / static_cast<double>(half));
    e[i] = std::sin(x * w);
    e[half + i] = std::cos(x * w);
  }
  return e;
}

// Row-major patch tokens: row f·P + (py·(w/p) + px), column ch·p² + dy·p + dx.
inline Tensor<double> patchify(const Tensor<double>& x, std::size_t patch) {
  if (x.rank() != 4) throw ShapeError("patchify expects (N, c, h, w)");
  const std::size_t N = x.extent(0), C = x.extent(1), H = x.extent(2), W = x.extent(3);
  if (H % patch || W % patch) throw ShapeError("patchify: extents not divisible by the patch size");
  const std::size_t ph = H / patch, pw = W / patch, tw = C * patch * patch;
  Tensor<double> out({N * ph * pw, tw});
  for (std::size_t f = 0; f < N; ++f)
    for (std::size_t c = 0; c < C; ++c)
      for (std::size_t y = 0; y < H; ++y)
        for (std::size_t xx = 0; xx < W; ++xx) {
          const std::size_t row = f * ph * pw + (y / patch) * pw + xx / patch;
          const std::size_t col = c * patch * patch + (y % patch) * patch + xx % patch;
          out[row * tw + col] = x(f, c, y, xx);
        }
  return out;
}

inline Tensor<double> unpatchify(const Tensor<double>& tokens, const Shape& shape, std::size_t patch) {
  const std::size_t N = shape[0], C = shape[1], H = shape[2], W = shape[3];
  const std::size_t ph = H / patch, pw = W / patch, tw = C * patch * patch;
  if (tokens.shape() != Shape{N * ph * pw, tw}) throw ShapeError("unpatchify: token matrix does not match shape");
  Tensor<double> out(shape);
  for (std::size_t f = 0; f < N; ++f)
    for (std::size_t c = 0; c < C; ++c)
      for (std::size_t y = 0; y < H; ++y)
        for (std::size_t xx = 0; xx < W; ++xx) {
          const std::size_t row = f * ph * pw + (y / patch) * pw + xx / patch;
          const std::size_t col = c * patch * patch + (y % patch) * patch + xx % patch;
          out(f, c, y, xx) = tokens[row * tw + col];
        }
  return out;
}

// One recorded forward pass. Parameter leaves are kept by name so gradients
// can be read back after Tape::backward.
struct ForwardRecord {
  Tape tape;
  std::map<std::string, Tape::Var> params;
  Tape::Var t_features{};
  Tape::Var b_features{};
  Tape::Var embedding{};
  Tape::Var output{};  // (N·P, c·p²) tokens
};

namespace detail {

inline Tape::Var linear(ForwardRecord& r, Tape::Var x, const std::string& w, const std::string& b) {
  return r.tape.add_row(r.tape.matmul(x, r.params.at(w)), r.params.at(b));
}

inline Tape::Var embed_mlp(ForwardRecord& r, Tape::Var x, const std::string& prefix) {
  const Tape::Var h = r.tape.relu(linear(r, x, prefix + ".w1", prefix + ".b1"));
  return linear(r, h, prefix + ".w2", prefix + ".b2");
}

inline void check_condition(double t) {
  if (!(t >= 0.0 && t <= 1.0)) throw ParameterError("condition timestep must lie in [0, 1]");
}

}  // namespace detail

// Records e = MLP_t(sin(1000 t)) + MLP_b(sin(b)) onto `r`. With no bucket
// (the null condition for guidance) only the timestep term remains.
inline Tape::Var record_condition(ForwardRecord& r, const DenoiserConfig& cfg, double t,
                                  std::optional<DynamicsBucket> b) {
  detail::check_condition(t);
  r.t_features = r.tape.constant(sinusoidal_embedding(1000.0 * t, cfg.embed_dim));
  Tape::Var e = detail::embed_mlp(r, r.t_features, "t_mlp");
  if (b) {
    r.b_features = r.tape.constant(sinusoidal_embedding(static_cast<double>(b->value()), cfg.embed_dim));
    e = r.tape.add(e, detail::embed_mlp(r, r.b_features, "b_mlp"));
  }
  r.embedding = e;
  return e;
}

inline ForwardRecord record_forward(const DenoiserParams& params, const DenoiserConfig& cfg, const Tensor<double>& x_t,
                                    double t, std::optional<DynamicsBucket> b, bool requires_grad = true) {
  cfg.validate();
  if (x_t.shape() != cfg.latent_shape())
    throw ShapeError("model input " + shape_string(x_t.shape()) + " does not match config " +
                     shape_string(cfg.latent_shape()));
  ForwardRecord r;
  for (const auto& [name, value] : params) r.params.emplace(name, r.tape.leaf(value, requires_grad));
  Tape& tp = r.tape;
  const Tape::Var e = record_condition(r, cfg, t, b);

  const std::size_t N = cfg.frames, P = cfg.tokens_per_frame();
  std::vector<std::vector<std::size_t>> spatial(N), temporal(P);
  std::vector<double> positions(N * P);
  for (std::size_t f = 0; f < N; ++f)
    for (std::size_t k = 0; k < P; ++k) {
      spatial[f].push_back(f * P + k);
      temporal[k].push_back(f * P + k);
      positions[f * P + k] = static_cast<double>(f);
    }

  Tape::Var h = detail::linear(r, tp.constant(patchify(x_t, cfg.patch)), "in.w", "in.b");
  for (std::size_t blk = 0; blk < cfg.blocks; ++blk) {
    auto P_ = [&](const char* leaf) { return r.params.at(detail::block_name(blk, leaf)); };
    auto L_ = [&](Tape::Var x, const char* w, const char* bias) {
      return detail::linear(r, x, detail::block_name(blk, w), detail::block_name(blk, bias));
    };
    // One AdaIN modulation per block from the shared condition embedding.
    const Tape::Var gamma = L_(e, "ada_gamma.w", "ada_gamma.b");
    const Tape::Var beta = L_(e, "ada_beta.w", "ada_beta.b");
    const Tape::Var u = tp.adain(h, gamma, beta);

    // Spatial ReLU linear attention within each frame, no positional signal.
    const Tape::Var sq = tp.relu(tp.matmul(u, P_("spatial.q")));
    const Tape::Var sk = tp.relu(tp.matmul(u, P_("spatial.k")));
    const Tape::Var sv = tp.matmul(u, P_("spatial.v"));
    const Tape::Var sa = tp.linear_attention(sq, sk, sv, spatial, 0.0, cfg.den_eps);
    h = tp.add(h, tp.matmul(sa, P_("spatial.o")));

    // Temporal cosine linear attention across frames, RoPE on frame index.
    const Tape::Var tq = tp.rope_rows(tp.normalize_rows(tp.matmul(h, P_("temporal.q"))), positions, cfg.rope_base);
    const Tape::Var tk = tp.rope_rows(tp.normalize_rows(tp.matmul(h, P_("temporal.k"))), positions, cfg.rope_base);
    const Tape::Var tv = tp.matmul(h, P_("temporal.v"));
    const Tape::Var ta = tp.linear_attention(tq, tk, tv, temporal, 1.0, 0.0);
    h = tp.add(h, tp.matmul(ta, P_("temporal.o")));

    const Tape::Var m = tp.relu(L_(h, "mlp.w1", "mlp.b1"));
    h = tp.add(h, L_(m, "mlp.w2", "mlp.b2"));
    if (!all_finite(tp.value(h))) throw NumericalFailure("block", blk);
  }
  r.output = detail::linear(r, h, "out.w", "out.b");
  return r;
}

// Predicted velocity, shaped like the input.
inline Tensor<double> forward(const DenoiserParams& params, const DenoiserConfig& cfg, const Tensor<double>& x_t,
                              double t, std::optional<DynamicsBucket> b) {
  const ForwardRecord r = record_forward(params, cfg, x_t, t, b, false);
  return unpatchify(r.tape.value(r.output), cfg.latent_shape(), cfg.patch);
}

// Condition embedding as a (1, embed_dim) row.
inline Tensor<double> embed_condition(const DenoiserParams& params, const DenoiserConfig& cfg, double t,
                                      std::optional<DynamicsBucket> b) {
  ForwardRecord r;
  for (const char* n : {"t_mlp.w1", "t_mlp.b1", "t_mlp.w2", "t_mlp.b2", "b_mlp.w1", "b_mlp.b1", "b_mlp.w2", "b_mlp.b2"})
    r.params.emplace(n, r.tape.leaf(params.at(n), false));
  return r.tape.value(record_condition(r, cfg, t, b));
}

// Flow-matching loss on the non-conditioning frames: mean over elements of
// (v_pred[1:] - target)².
inline Tape::Var record_loss(ForwardRecord& r, const DenoiserConfig& cfg, const Tensor<double>& target_v) {
  Shape s = cfg.latent_shape();
  s[0] -= 1;
  if (target_v.shape() != s) throw ShapeError("velocity target must be (N-1, c, h, w)");
  const std::size_t P = cfg.tokens_per_frame();
  const Tape::Var pred = r.tape.slice_rows(r.output, P, cfg.frames * P);
  return r.tape.mse(pred, patchify(target_v, cfg.patch));
}

struct LossAndGradients {
  double loss = 0.0;
  DenoiserParams gradients;
};

inline LossAndGradients loss_and_gradients(const DenoiserParams& params, const DenoiserConfig& cfg,
                                           const Tensor<double>& x_t, double t, std::optional<DynamicsBucket> b,
                                           const Tensor<double>& target_v) {
  ForwardRecord r = record_forward(params, cfg, x_t, t, b, true);
  const Tape::Var loss = record_loss(r, cfg, target_v);
  r.tape.backward(loss);
  LossAndGradients out{r.tape.value(loss)[0], {}};
  for (const auto& [name, var] : r.params)
    out.gradients.emplace(name, r.tape.has_grad(var) ? r.tape.grad(var) : Tensor<double>(params.at(name).shape()));
  return out;
}

// ---- training --------------------------------------------------------------

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  DenoiserParams m;
  DenoiserParams v;
  std::uint64_t t = 0;
};

inline AdamState adam_init(const DenoiserParams& p) {
  AdamState s;
  for (const auto& [name, value] : p) {
    s.m.emplace(name, Tensor<double>(value.shape()));
    s.v.emplace(name, Tensor<double>(value.shape()));
  }
  return s;
}

inline void adam_step(DenoiserParams& p, AdamState& s, const DenoiserParams& g, double lr, const AdamConfig& a = {}) {
  ++s.t;
  const double c1 = 1.0 - std::pow(a.beta1, static_cast<double>(s.t));
  const double c2 = 1.0 - std::pow(a.beta2, static_cast<double>(s.t));
  for (auto& [name, w] : p) {
    const auto& gi = g.at(name);
    auto& m = s.m.at(name);
    auto& v = s.v.at(name);
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = a.beta1 * m[i] + (1.0 - a.beta1) * gi[i];
      v[i] = a.beta2 * v[i] + (1.0 - a.beta2) * gi[i] * gi[i];
      w[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + a.eps);
    }
  }
}

struct TrainConfig {
  std::size_t steps = 500;
  double lr = 3e-3;
  std::size_t batch = 4;
  double cond_dropout = 0.1;
  SynthKind kind = SynthKind::moving_square;
  std::size_t pool = 2;
  double square_size = 16.0;
  // Per-clip velocity = base speed × sampled frame interval (3..10).
  std::vector<double> base_speeds{0.0, 0.5, 1.0};
  TimestepSchedule schedule{};
  std::uint64_t seed = 1;

  void validate() const {
    if (batch == 0) throw ConfigError("batch must be positive");
    if (!(lr >= 0.0)) throw ConfigError("learning rate must be >= 0");
    if (!(cond_dropout >= 0.0 && cond_dropout <= 1.0)) throw ConfigError("condition dropout must lie in [0, 1]");
    if (pool == 0) throw ConfigError("pool must be positive");
    if (base_speeds.empty()) throw ConfigError("at least one base speed is required");
  }
};

struct TrainState {
  DenoiserParams params;
  AdamState adam;
  std::size_t step = 0;
  std::vector<double> losses;
};

// Stream layout under the root seed: split(0) initializes parameters,
// split(1 + s) draws the data of step s. Resuming at any step therefore
// replays the same trajectory.
inline TrainState start_training(const DenoiserConfig& cfg, const TrainConfig& tc) {
  cfg.validate();
  tc.validate();
  Rng init = Rng(tc.seed).split(0);
  TrainState s{init_params(cfg, init), {}, 0, {}};
  s.adam = adam_init(s.params);
  return s;
}

struct TrainingExample {
  TrainingBatchItem item;
  bool drop_condition = false;
};

inline TrainingExample draw_training_example(const DenoiserConfig& cfg, const TrainConfig& tc, Rng& rng) {
  const double base = tc.base_speeds[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(tc.base_speeds.size()) - 1))];
  const double velocity = base * static_cast<double>(sample_clip_interval(rng));
  SynthConfig sc{cfg.frames, cfg.channels, cfg.height * tc.pool, cfg.width * tc.pool, tc.square_size,
                 static_cast<double>(cfg.width * tc.pool)};
  const VideoClip pixel = synth_clip(tc.kind, velocity, rng, sc);
  const LatentClip z = encode_latent(pixel, tc.pool);
  TrainingExample ex{assemble_training_item(z, rng, tc.schedule, SsimParams{}, pixel), false};
  ex.drop_condition = rng.uniform() < tc.cond_dropout;
  return ex;
}

inline void train_steps(TrainState& s, const DenoiserConfig& cfg, const TrainConfig& tc, std::size_t count,
                        const std::function<void(std::size_t, double)>& on_step = {}) {
  tc.validate();
  check_params(s.params, cfg);
  for (std::size_t n = 0; n < count; ++n) {
    Rng rng = Rng(tc.seed).split(1 + s.step);
    DenoiserParams grad;
    double loss = 0.0;
    for (std::size_t bi = 0; bi < tc.batch; ++bi) {
      const TrainingExample ex = draw_training_example(cfg, tc, rng);
      auto lg = ex.drop_condition
                    ? loss_and_gradients(s.params, cfg, ex.item.x_t, ex.item.t, std::nullopt, ex.item.target_v)
                    : loss_and_gradients(s.params, cfg, ex.item.x_t, ex.item.t, ex.item.bucket, ex.item.target_v);
      loss += lg.loss;
      if (grad.empty()) {
        grad = std::move(lg.gradients);
      } else {
        for (auto& [name, gt] : grad) {
          const auto& add = lg.gradients.at(name);
          for (std::size_t i = 0; i < gt.size(); ++i) gt[i] += add[i];
        }
      }
    }
    const double inv = 1.0 / static_cast<double>(tc.batch);
    loss *= inv;
    if (!std::isfinite(loss)) throw NumericalFailure("training step", s.step);
    for (auto& [name, gt] : grad)
      for (auto& x : gt.values()) x *= inv;
    adam_step(s.params, s.adam, grad, tc.lr);
    s.losses.push_back(loss);
    if (on_step) on_step(s.step, loss);
    ++s.step;
  }
}

inline TrainState train(const DenoiserConfig& cfg, const TrainConfig& tc,
                        const std::function<void(std::size_t, double)>& on_step = {}) {
  TrainState s = start_training(cfg, tc);
  train_steps(s, cfg, tc, tc.steps, on_step);
  return s;
}

// ---- inference ---------------------------------------------------------------

// v(M_t, t) for the residual channel with anchor z1 held as frame 0. The
// unconditional branch uses the null condition.
inline VelocityField residual_velocity_field(const DenoiserParams& params, const DenoiserConfig& cfg,
                                             const Tensor<double>& anchor, DynamicsBucket b) {
  return [&params, cfg, anchor, b](const Tensor<double>& m_t, double t, Branch br) {
    const Tensor<double> x = assemble_model_input(anchor, m_t);
    if (br == Branch::conditional) return extract_predicted_residuals(forward(params, cfg, x, t, b));
    return extract_predicted_residuals(forward(params, cfg, x, t, std::nullopt));
  };
}

struct AnimateOptions {
  int steps = kDefaultSteps;
  GuidanceConfig guidance{};
  std::optional<double> t_init;  // default 1 - 1/steps
  bool use_dct_init = false;
  std::optional<LowPassFilter> filter;  // default ideal, cutoffs 0.25
};

// Samples residuals for frames 1..N-1 and decodes them on z1. With DCTInit the
// refined video-space noise ε' is mapped to the residual channel as
// ε' - (1 - t_init) z1, the residual part of the noised video at t_init.
inline LatentClip animate(const DenoiserParams& params, const DenoiserConfig& cfg, const Tensor<double>& z1,
                          DynamicsBucket b, Rng& rng, const AnimateOptions& opt = {}) {
  cfg.validate();
  if (z1.shape() != cfg.frame_shape()) throw ShapeError("anchor latent must be (c, h, w) matching the config");
  const double t_init = opt.t_init.value_or(default_t_init(opt.steps));
  Shape rs = cfg.latent_shape();
  rs[0] -= 1;
  Tensor<double> m_init = randn(rng, rs);
  if (opt.use_dct_init) {
    const LowPassFilter f =
        opt.filter.value_or(make_lowpass({rs[0], cfg.height, cfg.width}, FilterMode::ideal, 0.25, 0.25));
    const Tensor<double> refined = dct_init(z1, m_init, t_init, f);
    m_init = add_to_frames(refined, (t_init - 1.0) * z1);
  }
  const Tensor<double> m0 = euler_sample(residual_velocity_field(params, cfg, z1, b), m_init, opt.steps, opt.guidance, t_init);
  return decode_residuals(MotionResidual{m0, z1, ResidualKind::anchored});
}

// Inverts the source residuals to noise under the source anchor, then samples
// them back under the edited anchor. Guidance is off in both directions.
inline LatentClip motion_transfer(const DenoiserParams& params, const DenoiserConfig& cfg, const LatentClip& source,
                                  const Tensor<double>& edited_first_frame, DynamicsBucket b, int steps = 100,
                                  std::optional<double> t_init = std::nullopt) {
  cfg.validate();
  if (source.frames.shape() != cfg.latent_shape()) throw ShapeError("source clip does not match the config");
  if (edited_first_frame.shape() != cfg.frame_shape()) throw ShapeError("edited frame must match the source frame shape");
  const double ti = t_init.value_or(default_t_init(steps));
  const MotionResidual m = encode_residuals(source);
  const GuidanceConfig none{1.0};
  const Tensor<double> noise = euler_invert(residual_velocity_field(params, cfg, m.anchor, b), m.residuals, steps, none, ti);
  const Tensor<double> m0 = euler_sample(residual_velocity_field(params, cfg, edited_first_frame, b), noise, steps, none, ti);
  return decode_residuals(MotionResidual{m0, edited_first_frame, ResidualKind::anchored});
}

// Mean over frames 1..N-1 of the mean absolute difference to frame 0.
inline double mean_frame_deviation(const LatentClip& z) {
  z.validate();
  const Tensor<double> a = z.frame(0);
  double s = 0.0;
  for (std::size_t f = 1; f < z.frame_count(); ++f) s += mean_abs_diff(z.frame(f), a);
  return s / static_cast<double>(z.frame_count() - 1);
}

}  // namespace mk
