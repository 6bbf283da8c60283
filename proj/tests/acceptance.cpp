// Copyright 2026 The motionkit Authors
// SPDX-License-Identifier: Apache-2.0

// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "mk/mk.hpp"

using namespace mk;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// ---- 1. fast vs direct cosine attention -------------------------------------

// Straight double loop: unit-normalize, rotate, sim = 1 + q̂·k̂, weighted mean of v.
Tensor<double> cosine_attention_reference(const AttentionBatch<double>& b, bool rope, double base) {
  const std::size_t n = b.q.extent(0), d = b.q.extent(1), dv = b.v.extent(1);
  auto unit = [&](const Tensor<double>& m, std::size_t i) {
    std::vector<double> u(d);
    double s = 0.0;
    for (std::size_t c = 0; c < d; ++c) s += m(i, c) * m(i, c);
    const double nrm = std::max(std::sqrt(s), 1e-12);
    for (std::size_t c = 0; c < d; ++c) u[c] = m(i, c) / nrm;
    if (rope)
      for (std::size_t p = 0; p < d / 2; ++p) {
        const double th = static_cast<double>(i) * std::pow(base, -2.0 * static_cast<double>(p) / static_cast<double>(d));
        const double x = u[2 * p], y = u[2 * p + 1];
        u[2 * p] = x * std::cos(th) - y * std::sin(th);
        u[2 * p + 1] = x * std::sin(th) + y * std::cos(th);
      }
    return u;
  };
  Tensor<double> out({n, dv});
  for (std::size_t i = 0; i < n; ++i) {
    const auto qi = unit(b.q, i);
    double den = 0.0;
    std::vector<double> num(dv, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      const auto kj = unit(b.k, j);
      double sim = 1.0;
      for (std::size_t c = 0; c < d; ++c) sim += qi[c] * kj[c];
      den += sim;
      for (std::size_t c = 0; c < dv; ++c) num[c] += sim * b.v(j, c);
    }
    for (std::size_t c = 0; c < dv; ++c) out(i, c) = num[c] / den;
  }
  return out;
}

double max_rel(const Tensor<double>& a, const Tensor<double>& ref) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num = std::max(num, std::abs(a[i] - ref[i]));
    den = std::max(den, std::abs(ref[i]));
  }
  return num / std::max(den, 1e-300);
}

Outcome oracle_equivalence() {
  const Rng root(101);
  double worst = 0.0;
  for (std::uint64_t k = 0; k < 100; ++k) {
    Rng r = root.split(k);
    const auto n = static_cast<std::size_t>(r.uniform_int(1, 64));
    const auto d = static_cast<std::size_t>(2 * r.uniform_int(1, 16));
    const auto dv = static_cast<std::size_t>(r.uniform_int(1, 16));
    const AttentionBatch<double> b{randn(r, {n, d}), randn(r, {n, d}), randn(r, {n, dv})};
    const bool rope = k % 2 == 1;
    const std::optional<RoPEConfig> cfg = rope ? std::optional(RoPEConfig::sequential(d, n)) : std::nullopt;
    const auto fast = cosine_linear_attention_fast(b, cfg);
    const auto ref = cosine_attention_reference(b, rope, 10000.0);
    worst = std::max({worst, max_rel(fast, ref), max_rel(cosine_linear_attention_naive(b, cfg), ref)});
  }
  return {worst <= 1e-10, fmt("100 batches (half with RoPE), worst relative error %.3e (tol 1e-10)", worst)};
}

// ---- 2. time scaling ------------------------------------------------------------

Outcome scaling() {
  const std::vector<std::size_t> lens{1024, 2048, 4096, 8192, 16384};
  const std::size_t d = 64;
  const auto sweep = bench_sweep<float>({BenchMethod::softmax, BenchMethod::cosine_linear_fast}, lens, d, 3, Rng(2026),
                                        kDefaultElementBudget);
  const double s_soft = time_slope(sweep.records, BenchMethod::softmax);
  const double s_fast = time_slope(sweep.records, BenchMethod::cosine_linear_fast);
  // Gap between the quadratic and linear peaks plus the n-free fast term is n².
  bool exact = true;
  const std::size_t c = analytic_peak_elements(BenchMethod::cosine_linear_fast, 1, d, d);
  for (std::size_t n : lens) {
    const std::size_t gap = analytic_peak_elements(BenchMethod::softmax, n, d, d) -
                            analytic_peak_elements(BenchMethod::cosine_linear_fast, n, d, d);
    exact = exact && gap + c == n * n;
  }
  return {s_fast < 1.3 && s_soft > 1.7 && exact,
          fmt("time slope fast %.3f (< 1.3), softmax %.3f (> 1.7), gap = n^2 - %zu exactly: %s", s_fast, s_soft, c,
              exact ? "yes" : "no")};
}

// ---- 3. RoPE breaks ReLU nonnegativity ---------------------------------------------

Outcome rope_negativity() {
  Rng r(3);
  const auto w = demonstrate_rope_relu_negativity(r, 8, 10000);
  // Recompute the rotated inner product from the returned witness.
  double ip = 0.0;
  for (std::size_t p = 0; p < 4; ++p) {
    const double f = std::pow(10000.0, -2.0 * static_cast<double>(p) / 8.0);
    const double a = static_cast<double>(w.position_q) * f, b = static_cast<double>(w.position_k) * f;
    const double qx = w.q[2 * p] * std::cos(a) - w.q[2 * p + 1] * std::sin(a);
    const double qy = w.q[2 * p] * std::sin(a) + w.q[2 * p + 1] * std::cos(a);
    const double kx = w.k[2 * p] * std::cos(b) - w.k[2 * p + 1] * std::sin(b);
    const double ky = w.k[2 * p] * std::sin(b) + w.k[2 * p + 1] * std::cos(b);
    ip += qx * kx + qy * ky;
  }
  bool nonneg = true;
  for (std::size_t i = 0; i < 8; ++i) nonneg = nonneg && w.q[i] >= 0.0 && w.k[i] >= 0.0;
  return {w.inner_product < 0.0 && ip < 0.0 && nonneg && std::abs(ip - w.inner_product) < 1e-12,
          fmt("trial %zu, positions %lld/%lld, inner product %.4e (recomputed %.4e)", w.trial,
              static_cast<long long>(w.position_q), static_cast<long long>(w.position_k), w.inner_product, ip)};
}

// ---- 4. denoiser gradients ---------------------------------------------------------

Outcome gradients() {
  DenoiserConfig c;
  c.frames = 4;
  c.channels = 2;
  c.height = 4;
  c.width = 4;
  c.dim = 8;
  c.embed_dim = 8;
  Rng r(5);
  DenoiserParams p = init_params(c, r);
  // Random values everywhere so the zero-initialized output layer masks nothing.
  for (auto& [name, t] : p) t = map(randn(r, t.shape()), [](double x) { return 0.3 * x; });
  const auto x = randn(r, c.latent_shape());
  const auto target = randn(r, {c.frames - 1, c.channels, c.height, c.width});
  const DynamicsBucket b(7);
  const double t = 0.3, h = 1e-5;
  const auto lg = loss_and_gradients(p, c, x, t, b, target);
  double worst = 0.0;
  std::size_t checked = 0;
  for (const auto& [name, w] : p)
    for (std::size_t i = 0; i < w.size(); ++i) {
      auto up = p, dn = p;
      up[name][i] += h;
      dn[name][i] -= h;
      const double fd =
          (loss_and_gradients(up, c, x, t, b, target).loss - loss_and_gradients(dn, c, x, t, b, target).loss) / (2 * h);
      const double an = lg.gradients.at(name)[i];
      worst = std::max(worst, std::abs(an - fd) / std::max({std::abs(an), std::abs(fd), 1e-6}));
      ++checked;
    }
  return {worst < 1e-4, fmt("%zu parameters, worst relative error %.3e (tol 1e-4)", checked, worst)};
}

// ---- 5. DCT suite -----------------------------------------------------------------

Outcome dct_suite() {
  Rng r(55);
  double rt = 0.0, pv = 0.0;
  const std::vector<Shape> shapes{{1}, {7}, {16}, {3, 5}, {16, 16}, {2, 3, 4}, {5, 1, 9}, {16, 16, 16}};
  for (const auto& s : shapes) {
    const auto x = randn(r, s);
    std::vector<std::size_t> axes(s.size());
    std::iota(axes.begin(), axes.end(), std::size_t{0});
    const auto X = dct(x, std::span<const std::size_t>(axes));
    const auto back = idct(X, std::span<const std::size_t>(axes));
    for (std::size_t i = 0; i < x.size(); ++i) rt = std::max(rt, std::abs(back[i] - x[i]));
    const double ex = norm2(x), eX = norm2(X);
    pv = std::max(pv, std::abs(ex * ex - eX * eX) / (ex * ex));
  }
  // Branch identities on a (6, 2, 8, 8) latent.
  const auto z1 = randn(r, {2, 8, 8});
  const auto eps = randn(r, {6, 2, 8, 8});
  const double t_init = 0.7;
  const auto full = dct_init(z1, eps, t_init, make_lowpass({6, 8, 8}, FilterMode::ideal, 1.0, 1.0));
  const auto anchor = noised_anchor(z1, eps, t_init);
  double full_err = 0.0;
  for (std::size_t i = 0; i < full.size(); ++i) full_err = std::max(full_err, std::abs(full[i] - anchor[i]));
  const auto minimal = make_lowpass({6, 8, 8}, FilterMode::ideal, 1e-6, 1e-6);
  const double kept = sum(minimal.mask);
  const std::size_t axes[] = {0, 2, 3};
  const auto dm = dct(dct_init(z1, eps, t_init, minimal), axes), de = dct(eps, axes);
  double noise_err = 0.0;
  for (std::size_t n = 0; n < 6; ++n)
    for (std::size_t ch = 0; ch < 2; ++ch)
      for (std::size_t y = 0; y < 8; ++y)
        for (std::size_t x = 0; x < 8; ++x)
          if (n + y + x > 0) noise_err = std::max(noise_err, std::abs(dm(n, ch, y, x) - de(n, ch, y, x)));
  const bool ok = rt <= 1e-10 && pv <= 1e-12 && full_err <= 1e-10 && noise_err <= 1e-10 && kept == 1.0;
  return {ok, fmt("round trip %.2e, Parseval %.2e, full-pass vs image branch %.2e, minimal mask (%g kept) vs noise %.2e",
                  rt, pv, full_err, kept, noise_err)};
}

// ---- 6. spectral concentration -------------------------------------------------------

Outcome spectral_concentration() {
  const auto img = diagonal_ramp(64);
  const double d = spectral_energy_profile(img, SpectralTransform::dct).at(0.1);
  const double f = spectral_energy_profile(img, SpectralTransform::fft).at(0.1);
  return {d > f, fmt("64x64 ramp, energy within radius 0.1: DCT %.6f, FFT %.6f", d, f)};
}

// ---- 7. dynamics -------------------------------------------------------------------

Outcome dynamics_suite() {
  std::vector<double> scores;
  for (double v : {0.0, 1.0, 2.0, 4.0}) {
    Rng r(70);
    scores.push_back(dynamics_score(synth_clip(SynthKind::moving_square, v, r)));
  }
  bool decreasing = true;
  for (std::size_t i = 1; i < scores.size(); ++i) decreasing = decreasing && scores[i] < scores[i - 1];

  std::vector<bool> seen(kBucketCount, false);
  bool monotone = true;
  int prev = -1;
  for (int i = 0; i <= 10000; ++i) {
    const int b = score_to_bucket(1.0 - i / 10000.0).value();
    monotone = monotone && b >= prev && b >= 0 && b < kBucketCount;
    if (b >= 0 && b < kBucketCount) seen[static_cast<std::size_t>(b)] = true;
    prev = b;
  }
  const bool covered = std::all_of(seen.begin(), seen.end(), [](bool s) { return s; });

  std::vector<VideoClip> videos;
  for (std::uint64_t k = 0; k < 4; ++k) {
    Rng r = Rng(71).split(k);
    videos.push_back(synth_clip(SynthKind::moving_square, 1.0 + static_cast<double>(k), r, {24, 1, 64, 64, 8.0, 32.0}));
  }
  const auto cost = estimator_cost_comparison(videos);
  return {decreasing && monotone && covered && cost.mad_cheaper(),
          fmt("ms_ssim at velocity 0/1/2/4: %.4f %.4f %.4f %.4f; buckets monotone %s, cover 0-19 %s; "
              "time MAD %.2e s vs MS-SSIM %.2e s",
              scores[0], scores[1], scores[2], scores[3], monotone ? "yes" : "no", covered ? "yes" : "no",
              cost.mean_time_mad_s, cost.mean_time_ms_ssim_s)};
}

// ---- 8. training item --------------------------------------------------------------

// Independent step-by-step construction of one training item.
TrainingBatchItem training_item_oracle(const LatentClip& z, Rng& rng, const TimestepSchedule& sched,
                                       const VideoClip& pixel) {
  const int b = score_to_bucket(dynamics_score(pixel)).value();
  const std::size_t N = z.frames.extent(0), fs = z.frames.size() / N;
  Tensor<double> m(Shape{N - 1, z.frames.extent(1), z.frames.extent(2), z.frames.extent(3)});
  for (std::size_t f = 1; f < N; ++f)
    for (std::size_t i = 0; i < fs; ++i) m[(f - 1) * fs + i] = z.frames[f * fs + i] - z.frames[i];
  const double x = sched.loc + sched.scale * rng.normal();
  const double t = 1.0 / (1.0 + std::exp(-x));
  Tensor<double> eps = randn(rng, m.shape());
  Tensor<double> xt(z.frames.shape()), v(m.shape());
  for (std::size_t i = 0; i < fs; ++i) xt[i] = z.frames[i];
  for (std::size_t f = 1; f < N; ++f)
    for (std::size_t i = 0; i < fs; ++i) {
      const std::size_t k = (f - 1) * fs + i;
      xt[f * fs + i] = t * eps[k] + (1.0 - t) * m[k] + z.frames[i];
      v[k] = eps[k] - m[k];
    }
  return {xt, v, t, DynamicsBucket(b), m, eps};
}

Outcome training_item() {
  bool match = true;
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    Rng data(100 + seed);
    const auto pixel = synth_clip(SynthKind::moving_square, 0.5 * static_cast<double>(seed), data);
    const auto z = encode_latent(pixel);
    Rng r1(seed), r2(seed);
    const auto a = assemble_training_item(z, r1, {}, {}, pixel);
    const auto o = training_item_oracle(z, r2, {}, pixel);
    match = match && bitwise_equal(a.x_t, o.x_t) && bitwise_equal(a.target_v, o.target_v) &&
            bitwise_equal(a.residuals, o.residuals) && bitwise_equal(a.noise, o.noise) && a.t == o.t &&
            a.bucket == o.bucket;
  }
  Rng data(5);
  const auto pixel = synth_clip(SynthKind::moving_square, 2.0, data, {8, 1, 16, 16});
  const auto z = encode_latent(pixel);
  const auto z1 = z.frame(0);
  Rng r(6);
  std::size_t intact = 0;
  for (int i = 0; i < 1000; ++i)
    if (bitwise_equal(frame(assemble_training_item(z, r, {}, {}, pixel).x_t, 0), z1)) ++intact;
  return {match && intact == 1000,
          fmt("oracle match on 8 seeded clips: %s; conditioning frame intact in %zu/1000 draws", match ? "yes" : "no",
              intact)};
}

// ---- 9. error accumulation -----------------------------------------------------------

Outcome error_accumulation() {
  const double sigma = 0.1;
  const auto r = error_accumulation_study(17, {4, 8, 8}, sigma, 1000, 9);
  const double anchored16 = r.anchored_variance[15], consecutive16 = r.consecutive_variance[15];
  const auto [lo, hi] = std::minmax_element(r.anchored_variance.begin(), r.anchored_variance.end());
  const double spread = *hi / *lo - 1.0;
  bool near_sigma = true;
  for (double v : r.anchored_variance) near_sigma = near_sigma && std::abs(v / (sigma * sigma) - 1.0) <= 0.2;
  return {consecutive16 >= 10.0 * anchored16 && spread <= 0.2 && near_sigma,
          fmt("frame 16 variance: consecutive %.4e, anchored %.4e (ratio %.2f, need >= 10); anchored max/min - 1 = %.3f",
              consecutive16, anchored16, consecutive16 / anchored16, spread)};
}

// ---- 10. toy end to end ----------------------------------------------------------------

Outcome end_to_end() {
  const DenoiserConfig c;
  const TrainConfig tc;
  const auto s = train(c, tc);
  double lead = 0.0, trail = 0.0;
  for (std::size_t i = 0; i < 50; ++i) {
    lead += s.losses[i];
    trail += s.losses[s.losses.size() - 1 - i];
  }
  lead /= 50.0;
  trail /= 50.0;

  // Held-out first frames, each animated at the lowest and highest bucket.
  const SynthConfig sc{c.frames, c.channels, c.height * tc.pool, c.width * tc.pool, tc.square_size, 32.0};
  double dev0 = 0.0, dev19 = 0.0;
  bool frame0 = true;
  for (std::uint64_t k = 0; k < 8; ++k) {
    Rng dr = Rng(999).split(k);
    const auto z = encode_latent(synth_clip(SynthKind::moving_square, 0.0, dr, sc));
    const auto z1 = z.frame(0);
    Rng s0(k), s1(k);
    const auto a0 = animate(s.params, c, z1, DynamicsBucket(0), s0);
    const auto a19 = animate(s.params, c, z1, DynamicsBucket(19), s1);
    frame0 = frame0 && bitwise_equal(a0.frame(0), z1) && bitwise_equal(a19.frame(0), z1);
    dev0 += mean_frame_deviation(a0) / 8.0;
    dev19 += mean_frame_deviation(a19) / 8.0;
  }

  Rng dr(77);
  const auto pixel = synth_clip(SynthKind::moving_square, 2.0, dr, sc);
  const auto src = encode_latent(pixel);
  const auto out =
      motion_transfer(s.params, c, src, src.frame(0), score_to_bucket(dynamics_score(pixel)), 100);
  const double terr = rel_l2_error(out.frames, src.frames);
  return {trail < 0.5 * lead && frame0 && dev19 > dev0 && terr < 5e-2,
          fmt("loss %.4f -> %.4f (ratio %.3f, need < 0.5); frame 0 exact %s; deviation b0 %.4f, b19 %.4f; "
              "transfer round trip %.3e (tol 5e-2)",
              lead, trail, trail / lead, frame0 ? "yes" : "no", dev0, dev19, terr)};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"fast cosine attention matches direct evaluation", oracle_equivalence},
      {"linear vs quadratic time scaling", scaling},
      {"RoPE on ReLU features yields a negative similarity", rope_negativity},
      {"denoiser gradients match central differences", gradients},
      {"DCT round trip, Parseval and init branches", dct_suite},
      {"DCT concentrates ramp energy better than FFT", spectral_concentration},
      {"dynamics score, buckets and estimator cost", dynamics_suite},
      {"training item construction", training_item},
      {"anchored vs consecutive residual error", error_accumulation},
      {"toy end-to-end training and sampling", end_to_end},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!o.pass) ++failed;
    std::printf("[%s] %zu %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria failed\n", failed, criteria.size());
  return failed ? 1 : 0;
}
