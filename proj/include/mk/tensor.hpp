// Copyright 2026 The motionkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <initializer_list>
#include <limits>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "mk/error.hpp"

namespace mk {

using Shape = std::vector<std::size_t>;

enum class DType : std::uint8_t { f32 = 1, f64 = 2 };

template <class T>
concept Real = std::is_same_v<T, float> || std::is_same_v<T, double>;

template <Real T>
constexpr DType dtype_of() {
  return std::is_same_v<T, float> ? DType::f32 : DType::f64;
}

inline std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ')';
  return os.str();
}

// Element count for `shape`. Rejects rank 0, zero extents and overflow.
inline std::size_t shape_numel(const Shape& shape) {
  if (shape.empty()) throw ShapeError("shape must have rank >= 1");
  std::size_t n = 1;
  for (std::size_t e : shape) {
    if (e == 0) throw ShapeError("zero extent in shape " + shape_string(shape));
    if (n > std::numeric_limits<std::size_t>::max() / e)
      throw ShapeError("element count overflows for shape " + shape_string(shape));
    n *= e;
  }
  return n;
}

// Dense row-major array. A default-constructed tensor is an empty
// placeholder; every other tensor satisfies data.size() == numel(shape).
template <Real T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;

  explicit Tensor(Shape shape, T fill = T{0})
      : shape_(std::move(shape)), data_(shape_numel(shape_), fill) {}

  Tensor(Shape shape, std::vector<T> data) : shape_(std::move(shape)), data_(std::move(data)) {
    if (data_.size() != shape_numel(shape_))
      throw ShapeError("data length " + std::to_string(data_.size()) +
                       " does not match shape " + shape_string(shape_));
  }

  // 2-D literal, e.g. Tensor<double>::matrix({{1, 2}, {3, 4}}).
  static Tensor matrix(std::initializer_list<std::initializer_list<T>> rows) {
    const std::size_t r = rows.size();
    const std::size_t c = r ? rows.begin()->size() : 0;
    std::vector<T> data;
    data.reserve(r * c);
    for (const auto& row : rows) {
      if (row.size() != c) throw ShapeError("ragged matrix literal");
      data.insert(data.end(), row.begin(), row.end());
    }
    return Tensor({r, c}, std::move(data));
  }

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }
  std::size_t extent(std::size_t axis) const { return shape_.at(axis); }

  T* data() noexcept { return data_.data(); }
  const T* data() const noexcept { return data_.data(); }
  std::span<T> values() noexcept { return data_; }
  std::span<const T> values() const noexcept { return data_; }
  const std::vector<T>& storage() const noexcept { return data_; }

  T& operator[](std::size_t i) noexcept { return data_[i]; }
  const T& operator[](std::size_t i) const noexcept { return data_[i]; }

  template <class... I>
  T& operator()(I... idx) noexcept {
    return data_[offset(idx...)];
  }
  template <class... I>
  const T& operator()(I... idx) const noexcept {
    return data_[offset(idx...)];
  }

  // Row `i` of a 2-D tensor.
  std::span<T> row(std::size_t i) noexcept {
    const std::size_t c = shape_[1];
    return {data_.data() + i * c, c};
  }
  std::span<const T> row(std::size_t i) const noexcept {
    const std::size_t c = shape_[1];
    return {data_.data() + i * c, c};
  }

  Tensor reshaped(Shape shape) const {
    if (shape_numel(shape) != size())
      throw ShapeError("cannot reshape " + shape_string(shape_) + " to " + shape_string(shape));
    return Tensor(std::move(shape), data_);
  }

  template <Real U>
  Tensor<U> cast() const {
    std::vector<U> out(data_.begin(), data_.end());
    return Tensor<U>(shape_, std::move(out));
  }

 private:
  template <class... I>
  std::size_t offset(I... idx) const noexcept {
    const std::size_t ids[] = {static_cast<std::size_t>(idx)...};
    std::size_t off = 0;
    for (std::size_t a = 0; a < sizeof...(I); ++a) off = off * shape_[a] + ids[a];
    return off;
  }

  Shape shape_;
  std::vector<T> data_;
};

using Tensor64 = Tensor<double>;
using Tensor32 = Tensor<float>;

template <Real T>
void require_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* what) {
  if (a.shape() != b.shape())
    throw ShapeError(std::string(what) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                     shape_string(b.shape()));
}

// Same shape and identical bit patterns (distinguishes -0.0 from +0.0).
template <Real T>
bool bitwise_equal(const Tensor<T>& a, const Tensor<T>& b) {
  return a.shape() == b.shape() &&
         (a.size() == 0 || std::memcmp(a.data(), b.data(), a.size() * sizeof(T)) == 0);
}

template <Real T>
bool all_finite(const Tensor<T>& t) {
  return std::all_of(t.values().begin(), t.values().end(), [](T x) { return std::isfinite(x); });
}

template <Real T, class F>
Tensor<T> map(const Tensor<T>& a, F&& f) {
  Tensor<T> out = a;
  for (T& x : out.values()) x = f(x);
  return out;
}

template <Real T, class F>
Tensor<T> zip(const Tensor<T>& a, const Tensor<T>& b, F&& f, const char* what = "zip") {
  require_same_shape(a, b, what);
  Tensor<T> out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = f(a[i], b[i]);
  return out;
}

template <Real T>
Tensor<T> operator+(const Tensor<T>& a, const Tensor<T>& b) {
  return zip(a, b, [](T x, T y) { return x + y; }, "add");
}
template <Real T>
Tensor<T> operator-(const Tensor<T>& a, const Tensor<T>& b) {
  return zip(a, b, [](T x, T y) { return x - y; }, "sub");
}
template <Real T>
Tensor<T> hadamard(const Tensor<T>& a, const Tensor<T>& b) {
  return zip(a, b, [](T x, T y) { return x * y; }, "hadamard");
}
template <Real T>
Tensor<T> operator*(T s, const Tensor<T>& a) {
  return map(a, [s](T x) { return s * x; });
}
template <Real T>
Tensor<T> operator*(const Tensor<T>& a, T s) {
  return s * a;
}

template <Real T>
T sum(const Tensor<T>& a) {
  T s = 0;
  for (T x : a.values()) s += x;
  return s;
}

template <Real T>
T mean(const Tensor<T>& a) {
  return sum(a) / static_cast<T>(a.size());
}

template <Real T>
T norm2(const Tensor<T>& a) {
  T s = 0;
  for (T x : a.values()) s += x * x;
  return std::sqrt(s);
}

template <Real T>
T max_abs(const Tensor<T>& a) {
  T m = 0;
  for (T x : a.values()) m = std::max(m, std::abs(x));
  return m;
}

template <Real T>
T max_abs_diff(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a, b, "max_abs_diff");
  T m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

// max |a-b| / max(max|b|, tiny): relative error against reference `b`.
template <Real T>
T max_rel_diff(const Tensor<T>& a, const Tensor<T>& b) {
  const T scale = std::max(max_abs(b), std::numeric_limits<T>::min());
  return max_abs_diff(a, b) / scale;
}

// ‖a-b‖₂ / ‖b‖₂.
template <Real T>
T rel_l2_error(const Tensor<T>& a, const Tensor<T>& b) {
  return norm2(a - b) / std::max(norm2(b), std::numeric_limits<T>::min());
}

template <Real T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.rank() != 2 || b.rank() != 2) throw ShapeError("matmul expects 2-D operands");
  const std::size_t n = a.extent(0), k = a.extent(1), m = b.extent(1);
  if (b.extent(0) != k)
    throw ShapeError("matmul inner extents differ: " + shape_string(a.shape()) + " x " +
                     shape_string(b.shape()));
  Tensor<T> out({n, m});
  const T* pa = a.data();
  const T* pb = b.data();
  T* po = out.data();
  // i-k-j order keeps each output's accumulation sequence k = 0, 1, ... as in
  // the textbook triple loop, so results agree exactly.
  for (std::size_t i = 0; i < n; ++i) {
    T* orow = po + i * m;
    for (std::size_t p = 0; p < k; ++p) {
      const T aip = pa[i * k + p];
      const T* brow = pb + p * m;
      for (std::size_t j = 0; j < m; ++j) orow[j] += aip * brow[j];
    }
  }
  return out;
}

template <Real T>
Tensor<T> transpose(const Tensor<T>& a) {
  if (a.rank() != 2) throw ShapeError("transpose expects a 2-D tensor");
  const std::size_t r = a.extent(0), c = a.extent(1);
  Tensor<T> out({c, r});
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out(j, i) = a(i, j);
  return out;
}

// Number of elements in one slice along axis 0.
template <Real T>
std::size_t frame_numel(const Tensor<T>& t) {
  return t.size() / t.extent(0);
}

// Slices [begin, end) along axis 0.
template <Real T>
Tensor<T> slice_frames(const Tensor<T>& t, std::size_t begin, std::size_t end) {
  if (t.rank() < 1 || begin >= end || end > t.extent(0))
    throw ShapeError("slice_frames: bad range [" + std::to_string(begin) + "," +
                     std::to_string(end) + ") for shape " + shape_string(t.shape()));
  Shape shape = t.shape();
  shape[0] = end - begin;
  const std::size_t fs = frame_numel(t);
  std::vector<T> data(t.data() + begin * fs, t.data() + end * fs);
  return Tensor<T>(std::move(shape), std::move(data));
}

// Frame `i` with the leading axis dropped (rank-1 input yields shape {1}).
template <Real T>
Tensor<T> frame(const Tensor<T>& t, std::size_t i) {
  Tensor<T> s = slice_frames(t, i, i + 1);
  Shape shape(t.shape().begin() + 1, t.shape().end());
  if (shape.empty()) shape = {1};
  return s.reshaped(std::move(shape));
}

template <Real T>
void set_frame(Tensor<T>& t, std::size_t i, const Tensor<T>& f) {
  const std::size_t fs = frame_numel(t);
  if (f.size() != fs || i >= t.extent(0)) throw ShapeError("set_frame: frame does not fit");
  std::copy(f.data(), f.data() + fs, t.data() + i * fs);
}

// Concatenates along axis 0; trailing extents must agree.
template <Real T>
Tensor<T> concat_frames(std::span<const Tensor<T>> parts) {
  if (parts.empty()) throw ShapeError("concat_frames: nothing to concatenate");
  Shape tail(parts[0].shape().begin() + 1, parts[0].shape().end());
  std::size_t n = 0;
  std::vector<T> data;
  for (const auto& p : parts) {
    if (Shape(p.shape().begin() + 1, p.shape().end()) != tail)
      throw ShapeError("concat_frames: trailing extents differ");
    n += p.extent(0);
    data.insert(data.end(), p.values().begin(), p.values().end());
  }
  Shape shape{n};
  shape.insert(shape.end(), tail.begin(), tail.end());
  return Tensor<T>(std::move(shape), std::move(data));
}

template <Real T>
Tensor<T> concat_frames(const Tensor<T>& a, const Tensor<T>& b) {
  const Tensor<T> parts[] = {a, b};
  return concat_frames<T>(std::span<const Tensor<T>>(parts));
}

// Stacks `count` copies of `f` along a new leading axis.
template <Real T>
Tensor<T> broadcast_frames(const Tensor<T>& f, std::size_t count) {
  Shape shape{count};
  shape.insert(shape.end(), f.shape().begin(), f.shape().end());
  Tensor<T> out(std::move(shape));
  for (std::size_t i = 0; i < count; ++i) std::copy(f.data(), f.data() + f.size(), out.data() + i * f.size());
  return out;
}

// Adds `f` to every frame of `t`.
template <Real T>
Tensor<T> add_to_frames(const Tensor<T>& t, const Tensor<T>& f) {
  const std::size_t fs = frame_numel(t);
  if (f.size() != fs) throw ShapeError("add_to_frames: frame size mismatch");
  Tensor<T> out = t;
  for (std::size_t i = 0; i < t.extent(0); ++i)
    for (std::size_t j = 0; j < fs; ++j) out[i * fs + j] += f[j];
  return out;
}

}  // namespace mk
