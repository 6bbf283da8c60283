// Copyright 2026 The motionkit Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "mk/attention.hpp"

namespace mk {
namespace {

AttentionBatch<double> random_batch(Rng& r, std::size_t n, std::size_t d, std::size_t dv) {
  return {randn(r, {n, d}), randn(r, {n, d}), randn(r, {n, dv})};
}

Tensor<double> column_mean(const Tensor<double>& v) {
  Tensor<double> m({1, v.extent(1)});
  for (std::size_t j = 0; j < v.extent(0); ++j)
    for (std::size_t c = 0; c < v.extent(1); ++c) m(0, c) += v(j, c);
  for (std::size_t c = 0; c < v.extent(1); ++c) m(0, c) /= static_cast<double>(v.extent(0));
  return m;
}

void expect_rows_equal(const Tensor<double>& out, const Tensor<double>& row, double tol) {
  for (std::size_t i = 0; i < out.extent(0); ++i)
    for (std::size_t c = 0; c < out.extent(1); ++c) EXPECT_NEAR(out(i, c), row(0, c), tol) << i << "," << c;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Independent O(n²) evaluation of Σ_j sim_ij v_j / Σ_j sim_ij.
template <class Sim>
Tensor<double> weighted_average_oracle(const AttentionBatch<double>& b, Sim&& sim) {
  const std::size_t n = b.seq_len(), dv = b.value_dim();
  Tensor<double> out({n, dv});
  for (std::size_t i = 0; i < n; ++i) {
    double den = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double s = sim(i, j);
      den += s;
      for (std::size_t c = 0; c < dv; ++c) out(i, c) += s * b.v(j, c);
    }
    for (std::size_t c = 0; c < dv; ++c) out(i, c) /= den;
  }
  return out;
}

// ---- softmax -------------------------------------------------------------

TEST(SoftmaxAttention, IdenticalKeysGiveMeanOfValues) {
  Rng r(1);
  auto b = random_batch(r, 6, 4, 3);
  for (std::size_t j = 1; j < 6; ++j)
    for (std::size_t p = 0; p < 4; ++p) b.k(j, p) = b.k(0, p);
  expect_rows_equal(softmax_attention(b), column_mean(b.v), 1e-12);
}

TEST(SoftmaxAttention, SingleKeyReturnsItsValue) {
  Rng r(2);
  const auto b = random_batch(r, 1, 4, 5);
  EXPECT_LT(max_abs_diff(softmax_attention(b), b.v), 1e-15);
}

TEST(SoftmaxAttention, MatchesUnstabilizedDirectSum) {
  Rng r(3);
  const auto b = random_batch(r, 8, 4, 4);
  const double scale = 1.0 / std::sqrt(4.0);
  const auto oracle = weighted_average_oracle(b, [&](std::size_t i, std::size_t j) {
    return std::exp(dot(b.q.row(i), b.k.row(j)) * scale);
  });
  EXPECT_LT(max_rel_diff(softmax_attention(b), oracle), 1e-12);
}

// ---- ReLU linear attention ----------------------------------------------

TEST(ReluLinearAttention, IdenticalNonnegativeKeysGiveMeanOfValues) {
  Rng r(4);
  AttentionBatch<double> b{map(randn(r, {5, 4}), [](double x) { return std::abs(x); }), Tensor<double>({5, 4}),
                           randn(r, {5, 3})};
  for (std::size_t j = 0; j < 5; ++j)
    for (std::size_t p = 0; p < 4; ++p) b.k(j, p) = 0.5 + p;
  expect_rows_equal(relu_linear_attention(b), column_mean(b.v), 1e-12);
}

TEST(ReluLinearAttention, NegativeQueryIsDegenerateAndNamesRow) {
  Rng r(5);
  auto b = random_batch(r, 4, 3, 2);
  for (std::size_t p = 0; p < 3; ++p) b.q(2, p) = -1.0 - p;
  for (std::size_t i : {0u, 1u, 3u})
    for (std::size_t p = 0; p < 3; ++p) b.q(i, p) = 1.0;
  try {
    relu_linear_attention(b);
    FAIL() << "expected DegenerateSimilarityError";
  } catch (const DegenerateSimilarityError& e) {
    EXPECT_EQ(e.row(), 2u);
  }
}

TEST(ReluLinearAttention, MatchesDoubleLoopOracle) {
  Rng r(6);
  auto abs = [](double x) { return std::abs(x); };
  AttentionBatch<double> b{map(randn(r, {16, 8}), abs), map(randn(r, {16, 8}), abs), randn(r, {16, 5})};
  const auto oracle = weighted_average_oracle(b, [&](std::size_t i, std::size_t j) { return dot(b.q.row(i), b.k.row(j)); });
  EXPECT_LT(max_rel_diff(relu_linear_attention(b), oracle), 1e-12);
}

TEST(LinearAttentionState, AccumulatorsEqualDirectSums) {
  Rng r(7);
  const auto k = randn(r, {9, 4});
  const auto v = randn(r, {9, 3});
  LinearAttentionState<double> st(4, 3);
  for (std::size_t j = 0; j < 9; ++j) {
    st.ingest(k.row(j), v.row(j));
    ASSERT_EQ(st.count(), j + 1);
    for (std::size_t p = 0; p < 4; ++p) {
      double z = 0.0;
      for (std::size_t jj = 0; jj <= j; ++jj) z += k(jj, p);
      EXPECT_EQ(st.z()[p], z);
      for (std::size_t c = 0; c < 3; ++c) {
        double s = 0.0;
        for (std::size_t jj = 0; jj <= j; ++jj) s += k(jj, p) * v(jj, c);
        EXPECT_EQ(st.s()[p * 3 + c], s);
      }
    }
    for (std::size_t c = 0; c < 3; ++c) {
      double s = 0.0;
      for (std::size_t jj = 0; jj <= j; ++jj) s += v(jj, c);
      EXPECT_EQ(st.vsum()[c], s);
    }
  }
}

// ---- RoPE -----------------------------------------------------------------

TEST(Rope, PositionZeroIsIdentity) {
  Rng r(8);
  const auto x = randn(r, {3, 6});
  RoPEConfig cfg{6, 10000.0, {0, 0, 0}};
  EXPECT_TRUE(bitwise_equal(apply_rope(x, cfg), x));
}

TEST(Rope, PreservesRowNorms) {
  Rng r(9);
  const auto x = randn(r, {12, 8});
  const auto y = apply_rope(x, RoPEConfig::sequential(8, 12));
  for (std::size_t i = 0; i < 12; ++i) {
    const double nx = std::sqrt(dot(x.row(i), x.row(i))), ny = std::sqrt(dot(y.row(i), y.row(i)));
    EXPECT_NEAR(ny / nx, 1.0, 1e-12);
  }
}

TEST(Rope, TwoDimensionalSignConvention) {
  // Pair (x, y) -> (x cos θ - y sin θ, x sin θ + y cos θ), θ = 1 for d = 2, position 1.
  const auto x = Tensor<double>::matrix({{1.0, 0.0}});
  const auto y = apply_rope(x, RoPEConfig{2, 10000.0, {1}});
  EXPECT_DOUBLE_EQ(y(0, 0), std::cos(1.0));
  EXPECT_DOUBLE_EQ(y(0, 1), std::sin(1.0));
  EXPECT_NEAR(y(0, 0), 0.54030230586813977, 1e-16);
  EXPECT_NEAR(y(0, 1), 0.84147098480789650, 1e-16);
}

TEST(Rope, OddDimensionIsShapeError) {
  EXPECT_THROW(apply_rope(Tensor<double>({2, 3}), RoPEConfig{3, 10000.0, {0, 1}}), ShapeError);
}

TEST(Rope, InnerProductDependsOnlyOnRelativePosition) {
  Rng r(10);
  for (int trial = 0; trial < 20; ++trial) {
    const auto q = randn(r, {1, 8});
    const auto k = randn(r, {1, 8});
    const auto i = r.uniform_int(0, 200), j = r.uniform_int(0, 200), shift = r.uniform_int(0, 500);
    auto rot = [](const Tensor<double>& x, std::int64_t p) { return apply_rope(x, RoPEConfig{8, 10000.0, {p}}); };
    const double a = dot(rot(q, i).row(0), rot(k, j).row(0));
    const double b = dot(rot(q, i + shift).row(0), rot(k, j + shift).row(0));
    EXPECT_NEAR(a, b, 1e-12 * std::max(1.0, std::abs(a)));
  }
}

// ---- RoPE breaks ReLU non-negativity --------------------------------------

TEST(RopeReluNegativity, AntipodalRotationGivesMinusOne) {
  double qx = 1.0, qy = 0.0, kx = 1.0, ky = 0.0;
  rotate_pair(qx, qy, std::numbers::pi);
  rotate_pair(kx, ky, 0.0);
  EXPECT_NEAR(qx * kx + qy * ky, -1.0, 1e-15);
}

TEST(RopeReluNegativity, SeededSearchFindsPinnedWitness) {
  Rng r(3);
  const auto w = demonstrate_rope_relu_negativity(r, 8, 10000);
  EXPECT_LT(w.inner_product, 0.0);
  EXPECT_EQ(w.trial, 0u);
  EXPECT_EQ(w.position_q, 957);
  EXPECT_EQ(w.position_k, 38);
  EXPECT_NEAR(w.inner_product, -1.3197832718186748, 1e-12);
  for (double x : w.q) EXPECT_GE(x, 0.0);
  for (double x : w.k) EXPECT_GE(x, 0.0);
  // Independent recomputation of the witness.
  Tensor<double> q({1, 8}, w.q), k({1, 8}, w.k);
  const auto rq = apply_rope(q, RoPEConfig{8, 10000.0, {w.position_q}});
  const auto rk = apply_rope(k, RoPEConfig{8, 10000.0, {w.position_k}});
  EXPECT_NEAR(dot(rq.row(0), rk.row(0)), w.inner_product, 1e-12);
}

TEST(RopeReluNegativity, ZeroTrialsExhaustsSearch) {
  Rng r(3);
  EXPECT_THROW(demonstrate_rope_relu_negativity(r, 8, 0), SearchExhaustedError);
}

// ---- cosine linear attention --------------------------------------------

Tensor<double> cosine_oracle(const AttentionBatch<double>& b, const std::optional<RoPEConfig>& rope) {
  auto unit = [&](const Tensor<double>& m, std::size_t i) {
    Tensor<double> u({1, m.extent(1)});
    const double n = std::sqrt(dot(m.row(i), m.row(i)));
    for (std::size_t p = 0; p < m.extent(1); ++p) u(0, p) = m(i, p) / n;
    if (rope) u = apply_rope(u, RoPEConfig{rope->dim, rope->base, {rope->positions[i]}});
    return u;
  };
  return weighted_average_oracle(b, [&](std::size_t i, std::size_t j) {
    return 1.0 + dot(unit(b.q, i).row(0), unit(b.k, j).row(0));
  });
}

TEST(CosineLinearAttention, SingleKeyReturnsItsValue) {
  Rng r(11);
  const auto b = random_batch(r, 1, 6, 4);
  EXPECT_LT(max_rel_diff(cosine_linear_attention_naive(b), b.v), 1e-15);
  EXPECT_LT(max_rel_diff(cosine_linear_attention_fast(b), b.v), 1e-15);
}

TEST(CosineLinearAttention, OrthogonalQueriesGiveMeanOfValues) {
  Rng r(12);
  AttentionBatch<double> b{Tensor<double>({5, 4}), Tensor<double>({5, 4}), randn(r, {5, 3})};
  for (std::size_t i = 0; i < 5; ++i) {
    b.q(i, 0) = 1.0 + i;  // queries along e0
    b.k(i, 1) = 0.5 + i;  // keys in span(e1, e2)
    b.k(i, 2) = -0.3 * i;
  }
  expect_rows_equal(cosine_linear_attention_naive(b), column_mean(b.v), 1e-12);
  expect_rows_equal(cosine_linear_attention_fast(b), column_mean(b.v), 1e-12);
}

TEST(CosineLinearAttention, AntipodalSinglePairIsDegenerate) {
  AttentionBatch<double> b{Tensor<double>::matrix({{1.0, 2.0}}), Tensor<double>::matrix({{-1.0, -2.0}}),
                           Tensor<double>::matrix({{3.0}})};
  EXPECT_THROW(cosine_linear_attention_naive(b), DegenerateSimilarityError);
  EXPECT_THROW(cosine_linear_attention_fast(b), DegenerateSimilarityError);
}

TEST(CosineLinearAttention, NaiveMatchesIndependentOracle) {
  Rng r(13);
  const auto b = random_batch(r, 10, 6, 3);
  EXPECT_LT(max_rel_diff(cosine_linear_attention_naive(b), cosine_oracle(b, std::nullopt)), 1e-12);
  const auto rope = RoPEConfig::sequential(6, 10);
  EXPECT_LT(max_rel_diff(cosine_linear_attention_naive(b, rope), cosine_oracle(b, rope)), 1e-12);
}

TEST(CosineLinearAttention, FastMatchesNaiveProperty) {
  Rng r(14);
  for (int trial = 0; trial < 40; ++trial) {
    const auto n = static_cast<std::size_t>(r.uniform_int(1, 64));
    const auto d = 2 * static_cast<std::size_t>(r.uniform_int(1, 8));
    const auto dv = static_cast<std::size_t>(r.uniform_int(1, 8));
    const auto b = random_batch(r, n, d, dv);
    std::optional<RoPEConfig> rope;
    if (trial % 2) rope = RoPEConfig::sequential(d, n);
    ASSERT_LT(max_rel_diff(cosine_linear_attention_fast(b, rope), cosine_linear_attention_naive(b, rope)), 1e-10)
        << "n=" << n << " d=" << d;
  }
}

TEST(CosineLinearAttention, ZeroNormRowsUseNormFloor) {
  Rng r(15);
  auto b = random_batch(r, 4, 4, 2);
  for (std::size_t p = 0; p < 4; ++p) b.q(1, p) = 0.0;
  const auto out = cosine_linear_attention_fast(b);
  // q̂ = 0 makes every similarity 1, so the row is the mean of V.
  const auto m = column_mean(b.v);
  for (std::size_t c = 0; c < 2; ++c) EXPECT_NEAR(out(1, c), m(0, c), 1e-12);
  EXPECT_TRUE(all_finite(out));
}

TEST(CosineSimilarity, BoundedInZeroTwo) {
  Rng r(16);
  std::vector<double> qu(5), ku(5);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto q = randn(r, {1, 5}), k = randn(r, {1, 5});
    normalize_row<double>(q.row(0), qu);
    normalize_row<double>(k.row(0), ku);
    const double sim = 1.0 + dot(qu, ku);
    ASSERT_GE(sim, -1e-15);
    ASSERT_LE(sim, 2.0 + 1e-15);
  }
}

TEST(AttentionProperties, OutputsLieInConvexHullOfValues) {
  Rng r(17);
  for (int trial = 0; trial < 10; ++trial) {
    auto b = random_batch(r, 12, 4, 3);
    AttentionBatch<double> nonneg{map(b.q, [](double x) { return std::abs(x) + 0.1; }),
                                  map(b.k, [](double x) { return std::abs(x) + 0.1; }), b.v};
    for (const auto& out : {softmax_attention(b), cosine_linear_attention_fast(b), relu_linear_attention(nonneg)}) {
      for (std::size_t c = 0; c < 3; ++c) {
        double lo = 1e300, hi = -1e300;
        for (std::size_t j = 0; j < 12; ++j) {
          lo = std::min(lo, b.v(j, c));
          hi = std::max(hi, b.v(j, c));
        }
        for (std::size_t i = 0; i < 12; ++i) {
          EXPECT_GE(out(i, c), lo - 1e-12);
          EXPECT_LE(out(i, c), hi + 1e-12);
        }
      }
    }
  }
}

TEST(AttentionProperties, ConstantShiftOfValuesShiftsOutputs) {
  Rng r(18);
  const auto b = random_batch(r, 9, 4, 3);
  const double shift[3] = {2.5, -1.0, 0.75};
  AttentionBatch<double> shifted = b;
  for (std::size_t j = 0; j < 9; ++j)
    for (std::size_t c = 0; c < 3; ++c) shifted.v(j, c) += shift[c];
  const auto rope = RoPEConfig::sequential(4, 9);
  const auto base = cosine_linear_attention_fast(b, rope), moved = cosine_linear_attention_fast(shifted, rope);
  const auto sbase = softmax_attention(b), smoved = softmax_attention(shifted);
  for (std::size_t i = 0; i < 9; ++i)
    for (std::size_t c = 0; c < 3; ++c) {
      EXPECT_NEAR(moved(i, c) - base(i, c), shift[c], 1e-12);
      EXPECT_NEAR(smoved(i, c) - sbase(i, c), shift[c], 1e-12);
    }
}

TEST(AttentionFloat, FastPathRunsInSinglePrecision) {
  Rng r(19);
  const auto b = random_batch(r, 32, 8, 8);
  const AttentionBatch<float> bf{b.q.cast<float>(), b.k.cast<float>(), b.v.cast<float>()};
  const auto out = cosine_linear_attention_fast(bf);
  EXPECT_LT(max_rel_diff(out.cast<double>(), cosine_linear_attention_fast(b)), 1e-5);
}

// ---- temporal attention over frames --------------------------------------

TEST(TemporalAttention, SingleFrameIsIdentity) {
  Rng r(20);
  const auto x = randn(r, {1, 5, 4});
  EXPECT_LT(max_rel_diff(temporal_attention_over_frames(x), x), 1e-15);
}

TEST(TemporalAttention, IdenticalFramesGiveIdenticalOutputs) {
  Rng r(21);
  const auto f = randn(r, {3, 4});
  const auto x = broadcast_frames(f, 5);
  const auto y = temporal_attention_over_frames(x);
  for (std::size_t n = 1; n < 5; ++n) EXPECT_LT(max_abs_diff(frame(y, n), frame(y, 0)), 1e-14);
}

TEST(TemporalAttention, MatchesPerTokenNaiveEvaluation) {
  Rng r(22);
  const auto x = randn(r, {4, 9, 8});
  const auto y = temporal_attention_over_frames(x);
  const auto rope = RoPEConfig::sequential(8, 4);
  for (std::size_t t = 0; t < 9; ++t) {
    Tensor<double> seq({4, 8});
    for (std::size_t n = 0; n < 4; ++n)
      for (std::size_t p = 0; p < 8; ++p) seq(n, p) = x(n, t, p);
    const auto expect = cosine_oracle({seq, seq, seq}, rope);
    for (std::size_t n = 0; n < 4; ++n)
      for (std::size_t p = 0; p < 8; ++p) EXPECT_NEAR(y(n, t, p), expect(n, p), 1e-12);
  }
}

}  // namespace
}  // namespace mk
