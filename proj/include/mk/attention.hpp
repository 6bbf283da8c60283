// Copyright 2026 The motionkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "mk/rng.hpp"
#include "mk/tensor.hpp"

namespace mk {

// Denominators at or below this value are treated as degenerate.
inline constexpr double kDenominatorEps = 1e-6;
// Floor applied to vector norms before normalization.
inline constexpr double kNormEps = 1e-12;

// Self-attention operands: n×d queries and keys, n×d_v values, one row per
// sequence element.
template <Real T>
struct AttentionBatch {
  Tensor<T> q;
  Tensor<T> k;
  Tensor<T> v;

  std::size_t seq_len() const { return q.extent(0); }
  std::size_t dim() const { return q.extent(1); }
  std::size_t value_dim() const { return v.extent(1); }

  void validate() const {
    if (q.rank() != 2 || k.rank() != 2 || v.rank() != 2) throw ShapeError("attention operands must be 2-D");
    if (q.shape() != k.shape()) throw ShapeError("Q and K must share n and d");
    if (v.extent(0) != q.extent(0)) throw ShapeError("V must have n rows");
  }
};

struct RoPEConfig {
  std::size_t dim = 0;
  double base = 10000.0;
  std::vector<std::int64_t> positions;

  // Positions 0, 1, ..., n-1.
  static RoPEConfig sequential(std::size_t dim, std::size_t n, double base = 10000.0) {
    RoPEConfig cfg{dim, base, std::vector<std::int64_t>(n)};
    std::iota(cfg.positions.begin(), cfg.positions.end(), std::int64_t{0});
    return cfg;
  }
};

namespace detail {

template <Real T>
T dot(const T* a, const T* b, std::size_t n) noexcept {
  T s0 = 0, s1 = 0, s2 = 0, s3 = 0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    s0 += a[i] * b[i];
    s1 += a[i + 1] * b[i + 1];
    s2 += a[i + 2] * b[i + 2];
    s3 += a[i + 3] * b[i + 3];
  }
  for (; i < n; ++i) s0 += a[i] * b[i];
  return (s0 + s1) + (s2 + s3);
}

inline void require_even_dim(std::size_t d) {
  if (d == 0 || d % 2 != 0) throw ShapeError("RoPE requires an even positive dimension, got " + std::to_string(d));
}

}  // namespace detail

// Angular frequency of rotation pair `pair`: base^(-2*pair/dim).
inline double rope_frequency(std::size_t pair, std::size_t dim, double base) {
  return std::pow(base, -2.0 * static_cast<double>(pair) / static_cast<double>(dim));
}

// (x, y) -> (x cos θ - y sin θ, x sin θ + y cos θ).
template <Real T>
void rotate_pair(T& x, T& y, double theta) noexcept {
  const double c = std::cos(theta), s = std::sin(theta);
  const double xd = x, yd = y;
  x = static_cast<T>(xd * c - yd * s);
  y = static_cast<T>(xd * s + yd * c);
}

// Rotates pairs (row[2k], row[2k+1]) by position * base^(-2k/d).
template <Real T>
void rope_rotate_row(std::span<T> row, double position, double base) {
  const std::size_t d = row.size();
  detail::require_even_dim(d);
  for (std::size_t p = 0; p < d / 2; ++p)
    rotate_pair(row[2 * p], row[2 * p + 1], position * rope_frequency(p, d, base));
}

template <Real T>
Tensor<T> apply_rope(const Tensor<T>& x, const RoPEConfig& cfg) {
  if (x.rank() != 2) throw ShapeError("apply_rope expects an n×d matrix");
  detail::require_even_dim(x.extent(1));
  if (x.extent(1) != cfg.dim) throw ShapeError("apply_rope: row width differs from RoPEConfig.dim");
  if (cfg.positions.size() != x.extent(0)) throw ShapeError("apply_rope: one position per row required");
  Tensor<T> out = x;
  for (std::size_t i = 0; i < x.extent(0); ++i)
    rope_rotate_row(out.row(i), static_cast<double>(cfg.positions[i]), cfg.base);
  return out;
}

// Scaled dot-product attention with max-subtraction, scale 1/sqrt(d).
template <Real T>
Tensor<T> softmax_attention(const AttentionBatch<T>& b) {
  b.validate();
  const std::size_t n = b.seq_len(), d = b.dim(), dv = b.value_dim();
  const T scale = static_cast<T>(1.0 / std::sqrt(static_cast<double>(d)));
  Tensor<T> out({n, dv});
  std::vector<T> scores(n);
  for (std::size_t i = 0; i < n; ++i) {
    const T* qi = b.q.data() + i * d;
    T m = -std::numeric_limits<T>::infinity();
    for (std::size_t j = 0; j < n; ++j) {
      scores[j] = detail::dot(qi, b.k.data() + j * d, d) * scale;
      m = std::max(m, scores[j]);
    }
    T den = 0;
    T* oi = out.data() + i * dv;
    for (std::size_t j = 0; j < n; ++j) {
      const T w = std::exp(scores[j] - m);
      den += w;
      const T* vj = b.v.data() + j * dv;
      for (std::size_t c = 0; c < dv; ++c) oi[c] += w * vj[c];
    }
    for (std::size_t c = 0; c < dv; ++c) oi[c] /= den;
  }
  return out;
}

// Running key/value statistics shared by every query:
//   S = Σ k_jᵀ v_j (d×d_v), z = Σ k_jᵀ, vsum = Σ v_j, count = n.
// Keys are ingested already feature-mapped (ReLU'd or unit-normalized).
template <Real T>
class LinearAttentionState {
 public:
  LinearAttentionState(std::size_t d, std::size_t dv) : d_(d), dv_(dv), s_(d * dv), z_(d), vsum_(dv) {}

  void ingest(std::span<const T> key, std::span<const T> value) {
    if (key.size() != d_ || value.size() != dv_) throw ShapeError("LinearAttentionState::ingest: width mismatch");
    for (std::size_t p = 0; p < d_; ++p) {
      const T kp = key[p];
      T* srow = s_.data() + p * dv_;
      for (std::size_t c = 0; c < dv_; ++c) srow[c] += kp * value[c];
      z_[p] += kp;
    }
    for (std::size_t c = 0; c < dv_; ++c) vsum_[c] += value[c];
    ++count_;
  }

  // out = (offset*vsum + q S) / (offset*count + q·z). Returns the denominator
  // without dividing when it is not above `den_eps`.
  T query(std::span<const T> q, std::span<T> out, T offset, T den_eps) const {
    T den = offset * static_cast<T>(count_) + detail::dot(q.data(), z_.data(), d_);
    if (!(den > den_eps)) return den;
    for (std::size_t c = 0; c < dv_; ++c) out[c] = offset * vsum_[c];
    for (std::size_t p = 0; p < d_; ++p) {
      const T qp = q[p];
      const T* srow = s_.data() + p * dv_;
      for (std::size_t c = 0; c < dv_; ++c) out[c] += qp * srow[c];
    }
    for (std::size_t c = 0; c < dv_; ++c) out[c] /= den;
    return den;
  }

  std::size_t count() const noexcept { return count_; }
  std::span<const T> s() const noexcept { return s_; }
  std::span<const T> z() const noexcept { return z_; }
  std::span<const T> vsum() const noexcept { return vsum_; }

 private:
  std::size_t d_, dv_;
  std::vector<T> s_, z_, vsum_;
  std::size_t count_ = 0;
};

// φ = ReLU linear attention through shared accumulators, O(n·d·d_v).
template <Real T>
Tensor<T> relu_linear_attention(const AttentionBatch<T>& b, double den_eps = kDenominatorEps) {
  b.validate();
  const std::size_t n = b.seq_len(), d = b.dim(), dv = b.value_dim();
  LinearAttentionState<T> state(d, dv);
  std::vector<T> phi(d);
  for (std::size_t j = 0; j < n; ++j) {
    const auto kj = b.k.row(j);
    for (std::size_t p = 0; p < d; ++p) phi[p] = std::max(kj[p], T{0});
    state.ingest(phi, b.v.row(j));
  }
  Tensor<T> out({n, dv});
  for (std::size_t i = 0; i < n; ++i) {
    const auto qi = b.q.row(i);
    for (std::size_t p = 0; p < d; ++p) phi[p] = std::max(qi[p], T{0});
    const T den = state.query(phi, out.row(i), T{0}, static_cast<T>(den_eps));
    if (!(den > static_cast<T>(den_eps))) throw DegenerateSimilarityError(i, den);
  }
  return out;
}

// Writes row / max(‖row‖, kNormEps) into `out`.
template <Real T>
void normalize_row(std::span<const T> row, std::span<T> out) {
  const double norm = std::sqrt(static_cast<double>(detail::dot(row.data(), row.data(), row.size())));
  const T inv = static_cast<T>(1.0 / std::max(norm, kNormEps));
  for (std::size_t p = 0; p < row.size(); ++p) out[p] = row[p] * inv;
}

namespace detail {

template <Real T>
void unit_row(const Tensor<T>& m, std::size_t i, const std::optional<RoPEConfig>& rope, std::span<T> out) {
  normalize_row<T>(m.row(i), out);
  if (rope) rope_rotate_row(out, static_cast<double>(rope->positions[i]), rope->base);
}

template <Real T>
void check_rope(const AttentionBatch<T>& b, const std::optional<RoPEConfig>& rope) {
  if (!rope) return;
  require_even_dim(b.dim());
  if (rope->dim != b.dim()) throw ShapeError("RoPEConfig.dim differs from head dimension");
  if (rope->positions.size() != b.seq_len()) throw ShapeError("RoPEConfig needs one position per row");
}

}  // namespace detail

// Direct O(n²) evaluation with sim(q, k) = 1 + q̂·k̂, RoPE applied to the
// unit vectors when given.
template <Real T>
Tensor<T> cosine_linear_attention_naive(const AttentionBatch<T>& b, const std::optional<RoPEConfig>& rope = std::nullopt,
                                        double den_eps = kDenominatorEps) {
  b.validate();
  detail::check_rope(b, rope);
  const std::size_t n = b.seq_len(), d = b.dim(), dv = b.value_dim();
  Tensor<T> khat({n, d});
  for (std::size_t j = 0; j < n; ++j) detail::unit_row(b.k, j, rope, khat.row(j));
  Tensor<T> out({n, dv});
  std::vector<T> qhat(d);
  for (std::size_t i = 0; i < n; ++i) {
    detail::unit_row<T>(b.q, i, rope, qhat);
    T den = 0;
    auto oi = out.row(i);
    for (std::size_t j = 0; j < n; ++j) {
      const T sim = T{1} + detail::dot(qhat.data(), khat.data() + j * d, d);
      den += sim;
      const auto vj = b.v.row(j);
      for (std::size_t c = 0; c < dv; ++c) oi[c] += sim * vj[c];
    }
    if (!(den > static_cast<T>(den_eps))) throw DegenerateSimilarityError(i, den);
    for (std::size_t c = 0; c < dv; ++c) oi[c] /= den;
  }
  return out;
}

// Shared-term form: vsum, S = Σ k̂ᵀv and z = Σ k̂ᵀ are built once, then each
// query costs O(d·d_v). Extra memory is O(d·d_v).
template <Real T>
Tensor<T> cosine_linear_attention_fast(const AttentionBatch<T>& b, const std::optional<RoPEConfig>& rope = std::nullopt,
                                       double den_eps = kDenominatorEps) {
  b.validate();
  detail::check_rope(b, rope);
  const std::size_t n = b.seq_len(), d = b.dim(), dv = b.value_dim();
  LinearAttentionState<T> state(d, dv);
  std::vector<T> unit(d);
  for (std::size_t j = 0; j < n; ++j) {
    detail::unit_row<T>(b.k, j, rope, unit);
    state.ingest(unit, b.v.row(j));
  }
  Tensor<T> out({n, dv});
  for (std::size_t i = 0; i < n; ++i) {
    detail::unit_row<T>(b.q, i, rope, unit);
    const T den = state.query(unit, out.row(i), T{1}, static_cast<T>(den_eps));
    if (!(den > static_cast<T>(den_eps))) throw DegenerateSimilarityError(i, den);
  }
  return out;
}

// Self-attention across the frame axis of an (N, tokens, d) tensor: each
// token position attends over its own N frames with Q = K = V = x[:, t, :]
// and RoPE positions equal to frame indices.
template <Real T>
Tensor<T> temporal_attention_over_frames(const Tensor<T>& x, double rope_base = 10000.0) {
  if (x.rank() != 3) throw ShapeError("temporal attention expects (N, tokens, d)");
  const std::size_t frames = x.extent(0), tokens = x.extent(1), d = x.extent(2);
  const auto rope = RoPEConfig::sequential(d, frames, rope_base);
  Tensor<T> out(x.shape());
  for (std::size_t t = 0; t < tokens; ++t) {
    Tensor<T> seq({frames, d});
    for (std::size_t f = 0; f < frames; ++f)
      std::copy_n(x.data() + (f * tokens + t) * d, d, seq.data() + f * d);
    const Tensor<T> y = cosine_linear_attention_fast(AttentionBatch<T>{seq, seq, seq}, rope);
    for (std::size_t f = 0; f < frames; ++f)
      std::copy_n(y.data() + f * d, d, out.data() + (f * tokens + t) * d);
  }
  return out;
}

struct NegativityWitness {
  std::vector<double> q;  // φ(q), nonnegative
  std::vector<double> k;  // φ(k), nonnegative
  std::int64_t position_q = 0;
  std::int64_t position_k = 0;
  double inner_product = 0.0;  // [R_i φ(q)]·[R_j φ(k)]
  std::size_t trial = 0;
};

// Draws nonnegative φ(q) = ReLU(N(0,I)), φ(k) likewise and positions in
// [0, max_position], returning the first draw whose rotated inner product is
// negative. Shows ReLU features stop being a valid similarity under RoPE.
inline NegativityWitness demonstrate_rope_relu_negativity(Rng& rng, std::size_t d, std::size_t trials,
                                                          std::int64_t max_position = 1024, double base = 10000.0) {
  detail::require_even_dim(d);
  std::vector<double> q(d), k(d), rq(d), rk(d);
  for (std::size_t trial = 0; trial < trials; ++trial) {
    for (auto& x : q) x = std::max(rng.normal(), 0.0);
    for (auto& x : k) x = std::max(rng.normal(), 0.0);
    const std::int64_t pq = rng.uniform_int(0, max_position);
    const std::int64_t pk = rng.uniform_int(0, max_position);
    rq = q;
    rk = k;
    rope_rotate_row<double>(rq, static_cast<double>(pq), base);
    rope_rotate_row<double>(rk, static_cast<double>(pk), base);
    const double ip = detail::dot(rq.data(), rk.data(), d);
    if (ip < 0.0) return {q, k, pq, pk, ip, trial};
  }
  throw SearchExhaustedError("no negative RoPE/ReLU inner product in " + std::to_string(trials) + " trials");
}

}  // namespace mk
