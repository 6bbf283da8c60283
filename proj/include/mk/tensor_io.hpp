// Copyright 2026 The motionkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <span>
#include <variant>
#include <vector>

#include "mk/tensor.hpp"

namespace mk {

// TensorFile layout (all integers little-endian):
//   8 bytes   magic "MKTENSR\0"
//   1 byte    dtype code (1 = f32, 2 = f64)
//   1 byte    rank
//   rank x 8  extents, uint64
//   payload   row-major IEEE-754 values
inline constexpr std::array<char, 8> kTensorMagic = {'M', 'K', 'T', 'E', 'N', 'S', 'R', '\0'};

using AnyTensor = std::variant<Tensor<float>, Tensor<double>>;

namespace detail {

template <class U>
void put_le(std::vector<std::byte>& out, U v) {
  for (std::size_t i = 0; i < sizeof(U); ++i) out.push_back(static_cast<std::byte>((v >> (8 * i)) & 0xff));
}

template <class U>
U get_le(std::span<const std::byte> in, std::size_t& pos) {
  if (in.size() - pos < sizeof(U)) throw FormatError("truncated TensorFile");
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(std::to_integer<std::uint8_t>(in[pos + i])) << (8 * i);
  pos += sizeof(U);
  return v;
}

template <Real T>
using bits_t = std::conditional_t<std::is_same_v<T, float>, std::uint32_t, std::uint64_t>;

template <Real T>
Tensor<T> decode_payload(Shape shape, std::span<const std::byte> in, std::size_t pos) {
  const std::size_t n = shape_numel(shape);
  if ((in.size() - pos) / sizeof(T) < n) throw FormatError("TensorFile payload shorter than extents imply");
  if (in.size() - pos != n * sizeof(T)) throw FormatError("trailing bytes after TensorFile payload");
  std::vector<T> data(n);
  for (auto& x : data) x = std::bit_cast<T>(get_le<bits_t<T>>(in, pos));
  return Tensor<T>(std::move(shape), std::move(data));
}

}  // namespace detail

template <Real T>
std::vector<std::byte> encode_tensor(const Tensor<T>& t) {
  if (t.rank() == 0 || t.rank() > 255) throw ShapeError("TensorFile rank must be in [1, 255]");
  std::vector<std::byte> out;
  out.reserve(10 + 8 * t.rank() + t.size() * sizeof(T));
  for (char c : kTensorMagic) out.push_back(static_cast<std::byte>(c));
  out.push_back(static_cast<std::byte>(dtype_of<T>()));
  out.push_back(static_cast<std::byte>(t.rank()));
  for (std::size_t e : t.shape()) detail::put_le<std::uint64_t>(out, e);
  for (T x : t.values()) detail::put_le(out, std::bit_cast<detail::bits_t<T>>(x));
  return out;
}

inline AnyTensor decode_tensor(std::span<const std::byte> in) {
  if (in.size() < 10) throw FormatError("truncated TensorFile header");
  for (std::size_t i = 0; i < kTensorMagic.size(); ++i)
    if (in[i] != static_cast<std::byte>(kTensorMagic[i])) throw FormatError("bad TensorFile magic");
  const auto code = std::to_integer<std::uint8_t>(in[8]);
  const auto rank = std::to_integer<std::uint8_t>(in[9]);
  if (rank == 0) throw FormatError("TensorFile rank 0");
  std::size_t pos = 10;
  Shape shape(rank);
  for (auto& e : shape) {
    const auto v = detail::get_le<std::uint64_t>(in, pos);
    if (v == 0) throw FormatError("TensorFile has a zero extent");
    e = static_cast<std::size_t>(v);
  }
  try {
    shape_numel(shape);
  } catch (const ShapeError& e) {
    throw FormatError(std::string("TensorFile extents: ") + e.what());
  }
  switch (code) {
    case static_cast<std::uint8_t>(DType::f32):
      return detail::decode_payload<float>(std::move(shape), in, pos);
    case static_cast<std::uint8_t>(DType::f64):
      return detail::decode_payload<double>(std::move(shape), in, pos);
    default:
      throw FormatError("unknown TensorFile dtype code " + std::to_string(code));
  }
}

inline std::vector<std::byte> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileError("cannot open " + path.string());
  std::vector<char> raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::vector<std::byte> bytes(raw.size());
  std::memcpy(bytes.data(), raw.data(), raw.size());
  return bytes;
}

inline void write_file_bytes(const std::filesystem::path& path, std::span<const std::byte> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FileError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FileError("short write to " + path.string());
}

template <Real T>
void save_tensor(const std::filesystem::path& path, const Tensor<T>& t) {
  const auto bytes = encode_tensor(t);
  write_file_bytes(path, bytes);
}

inline AnyTensor load_any_tensor(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  return decode_tensor(bytes);
}

// Loads a tensor of exactly dtype T; a file of the other dtype is a format error.
template <Real T>
Tensor<T> load_tensor(const std::filesystem::path& path) {
  AnyTensor any = load_any_tensor(path);
  if (auto* t = std::get_if<Tensor<T>>(&any)) return std::move(*t);
  throw FormatError("TensorFile " + path.string() + " has a different dtype than requested");
}

}  // namespace mk
