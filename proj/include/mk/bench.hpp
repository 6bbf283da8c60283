// Copyright 2026 The motionkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <string>
#include <vector>

#include "mk/attention.hpp"
#include "mk/rng.hpp"

namespace mk {

enum class BenchMethod { softmax, relu_linear, cosine_linear_fast, cosine_linear_naive };

inline constexpr BenchMethod kAllBenchMethods[] = {BenchMethod::softmax, BenchMethod::relu_linear,
                                                   BenchMethod::cosine_linear_fast, BenchMethod::cosine_linear_naive};

inline std::string method_name(BenchMethod m) {
  switch (m) {
    case BenchMethod::softmax: return "softmax";
    case BenchMethod::relu_linear: return "relu_linear";
    case BenchMethod::cosine_linear_fast: return "cosine_linear_fast";
    case BenchMethod::cosine_linear_naive: return "cosine_linear_naive";
  }
  return "?";
}

inline BenchMethod parse_method(const std::string& s) {
  for (BenchMethod m : kAllBenchMethods)
    if (method_name(m) == s) return m;
  throw ParameterError("unknown attention method '" + s + "'");
}

// Simultaneously live intermediate scalars implied by each method's
// definition, excluding the n×d inputs and the n×d_v output:
//   softmax       n² score matrix
//   cosine naive  n² similarity matrix + 2nd unit-normalized Q and K
//   relu linear   S (d·d_v) + z (d) + one feature row (d)
//   cosine fast   S (d·d_v) + z (d) + one unit row (d) + Σv (d_v)
inline std::size_t analytic_peak_elements(BenchMethod m, std::size_t n, std::size_t d, std::size_t dv) {
  switch (m) {
    case BenchMethod::softmax: return n * n;
    case BenchMethod::cosine_linear_naive: return n * n + 2 * n * d;
    case BenchMethod::relu_linear: return d * dv + 2 * d;
    case BenchMethod::cosine_linear_fast: return d * dv + 2 * d + dv;
  }
  return 0;
}

// Inputs (Q, K, V) plus output.
inline std::size_t io_elements(std::size_t n, std::size_t d, std::size_t dv) { return 2 * n * d + 2 * n * dv; }

inline constexpr std::size_t kDefaultElementBudget = std::size_t{1} << 30;

// MK_ELEMENT_BUDGET if set, else 2^30 elements.
inline std::size_t element_budget() {
  const char* env = std::getenv("MK_ELEMENT_BUDGET");
  if (!env || !*env) return kDefaultElementBudget;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(env, &end, 10);
  if (*end != '\0' || v == 0) throw ConfigError(std::string("MK_ELEMENT_BUDGET must be a positive integer, got '") + env + "'");
  return static_cast<std::size_t>(v);
}

inline void check_budget(BenchMethod m, std::size_t n, std::size_t d, std::size_t dv, std::size_t budget) {
  const std::size_t need = analytic_peak_elements(m, n, d, dv) + io_elements(n, d, dv);
  if (need > budget)
    throw BudgetError(method_name(m) + " at seq_len " + std::to_string(n) + " needs " + std::to_string(need) +
                      " elements, over the budget of " + std::to_string(budget) + " (MK_ELEMENT_BUDGET)");
}

struct BenchRecord {
  BenchMethod method = BenchMethod::softmax;
  std::size_t seq_len = 0;
  std::size_t dim = 0;
  std::size_t repeats = 0;
  double median_wall_time_s = 0.0;
  std::size_t analytic_peak_elements = 0;
};

inline double median(std::vector<double> xs) {
  if (xs.empty()) throw ParameterError("median of an empty sample");
  std::sort(xs.begin(), xs.end());
  const std::size_t h = xs.size() / 2;
  return xs.size() % 2 ? xs[h] : 0.5 * (xs[h - 1] + xs[h]);
}

template <Real T>
Tensor<T> run_attention(BenchMethod m, const AttentionBatch<T>& b) {
  switch (m) {
    case BenchMethod::softmax: return softmax_attention(b);
    case BenchMethod::relu_linear: return relu_linear_attention(b);
    case BenchMethod::cosine_linear_fast: return cosine_linear_attention_fast(b);
    case BenchMethod::cosine_linear_naive: return cosine_linear_attention_naive(b);
  }
  throw ParameterError("unknown attention method");
}

// Median wall time of `repeats` runs after one discarded warm-up, on Q, K, V
// drawn from `rng` (d_v = d). The budget is checked before anything is
// allocated.
template <Real T>
BenchRecord bench_attention(BenchMethod m, std::size_t n, std::size_t d, std::size_t repeats, Rng& rng,
                            std::size_t budget = element_budget()) {
  if (repeats == 0) throw ParameterError("repeats must be at least 1");
  if (n == 0 || d == 0) throw ParameterError("seq_len and dim must be positive");
  check_budget(m, n, d, d, budget);
  const AttentionBatch<T> b{randn<T>(rng, {n, d}), randn<T>(rng, {n, d}), randn<T>(rng, {n, d})};
  using clock = std::chrono::steady_clock;
  volatile T sink = run_attention(m, b)[0];
  std::vector<double> times;
  for (std::size_t r = 0; r < repeats; ++r) {
    const auto t0 = clock::now();
    const Tensor<T> out = run_attention(m, b);
    times.push_back(std::chrono::duration<double>(clock::now() - t0).count());
    sink = out[0];
  }
  (void)sink;
  return {m, n, d, repeats, median(times), analytic_peak_elements(m, n, d, d)};
}

// Least-squares slope of log(y) against log(x).
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw ParameterError("slope fit needs at least two matched points");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0 && y[i] > 0.0)) throw ParameterError("slope fit needs positive values");
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(x.size());
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  if (sxx == 0.0) throw ParameterError("slope fit needs distinct x values");
  return sxy / sxx;
}

// Slope of median time vs seq_len over the records of one method.
inline double time_slope(const std::vector<BenchRecord>& recs, BenchMethod m) {
  std::vector<double> x, y;
  for (const auto& r : recs)
    if (r.method == m) {
      x.push_back(static_cast<double>(r.seq_len));
      y.push_back(r.median_wall_time_s);
    }
  return loglog_slope(x, y);
}

struct BenchSweep {
  std::vector<BenchRecord> records;
  std::vector<std::pair<BenchMethod, double>> slopes;
};

// Every method at every sequence length. Lengths must be strictly ascending.
// Each (method, n) draws its inputs from rng.split(method index · 2^32 + n).
template <Real T>
BenchSweep bench_sweep(const std::vector<BenchMethod>& methods, const std::vector<std::size_t>& seq_lens, std::size_t d,
                       std::size_t repeats, const Rng& rng, std::size_t budget = element_budget()) {
  if (seq_lens.empty()) throw ParameterError("at least one seq_len is required");
  for (std::size_t i = 1; i < seq_lens.size(); ++i)
    if (seq_lens[i] <= seq_lens[i - 1]) throw ParameterError("seq_lens must be strictly ascending");
  if (repeats == 0) throw ParameterError("repeats must be at least 1");
  // Refuse the whole sweep up front rather than part-way through.
  for (BenchMethod m : methods)
    for (std::size_t n : seq_lens) check_budget(m, n, d, d, budget);
  BenchSweep s;
  for (BenchMethod m : methods) {
    for (std::size_t n : seq_lens) {
      Rng r = rng.split((static_cast<std::uint64_t>(m) << 32) + n);
      s.records.push_back(bench_attention<T>(m, n, d, repeats, r, budget));
    }
    if (seq_lens.size() >= 2) s.slopes.emplace_back(m, time_slope(s.records, m));
  }
  return s;
}

}  // namespace mk
