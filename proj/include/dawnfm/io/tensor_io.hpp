#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "dawnfm/core/tensor.hpp"

namespace dawnfm::io {

// DWNT layout: "DWNT", version 0x01, dtype (0x01 float32, 0x02 float64),
// ndim, ndim little-endian uint32 extents, little-endian row-major payload.
inline constexpr char kTensorMagic[4] = {'D', 'W', 'N', 'T'};
inline constexpr std::uint8_t kTensorVersion = 0x01;
inline constexpr std::uint8_t kDtypeF32 = 0x01;
inline constexpr std::uint8_t kDtypeF64 = 0x02;

using Bytes = std::vector<std::uint8_t>;

namespace detail {

template <typename U>
void put_le(Bytes& out, U v) {
  for (std::size_t i = 0; i < sizeof(U); ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

template <typename U>
U get_le(const std::uint8_t* p) {
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(p[i]) << (8 * i);
  return v;
}

template <typename T>
using Bits = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;

}  // namespace detail

template <typename T>
Bytes encode_tensor(const BasicTensor<T>& t) {
  if (t.ndim() > 255) throw IoError("tensor has too many dimensions to serialize");
  Bytes out(std::begin(kTensorMagic), std::end(kTensorMagic));
  out.push_back(kTensorVersion);
  out.push_back(sizeof(T) == 4 ? kDtypeF32 : kDtypeF64);
  out.push_back(static_cast<std::uint8_t>(t.ndim()));
  for (auto e : t.shape()) {
    if (e > UINT32_MAX) throw IoError("tensor extent exceeds 32 bits");
    detail::put_le(out, static_cast<std::uint32_t>(e));
  }
  out.reserve(out.size() + t.size() * sizeof(T));
  for (T v : t.values()) detail::put_le(out, std::bit_cast<detail::Bits<T>>(v));
  return out;
}

/// Decodes either dtype into the requested precision.
template <typename T = double>
BasicTensor<T> decode_tensor(const Bytes& bytes, const std::string& origin = "tensor") {
  auto fail = [&](const std::string& why) { return IoError(origin + ": " + why); };
  if (bytes.size() < 7) throw fail("truncated header");
  if (std::memcmp(bytes.data(), kTensorMagic, 4) != 0) throw fail("bad magic (expected DWNT)");
  if (bytes[4] != kTensorVersion) throw fail("unsupported version " + std::to_string(bytes[4]));
  const std::uint8_t dtype = bytes[5];
  if (dtype != kDtypeF32 && dtype != kDtypeF64) throw fail("unknown dtype " + std::to_string(dtype));
  const std::size_t ndim = bytes[6];
  std::size_t pos = 7;
  if (bytes.size() < pos + 4 * ndim) throw fail("truncated shape");
  Shape shape;
  for (std::size_t i = 0; i < ndim; ++i, pos += 4) shape.push_back(detail::get_le<std::uint32_t>(&bytes[pos]));
  const std::size_t width = dtype == kDtypeF32 ? 4 : 8;
  const std::size_t count = shape_numel(shape);
  if (bytes.size() != pos + count * width) {
    throw fail("payload holds " + std::to_string(bytes.size() - pos) + " bytes, expected " +
               std::to_string(count * width));
  }
  std::vector<T> data(count);
  for (std::size_t i = 0; i < count; ++i, pos += width) {
    data[i] = dtype == kDtypeF32 ? static_cast<T>(std::bit_cast<float>(detail::get_le<std::uint32_t>(&bytes[pos])))
                                 : static_cast<T>(std::bit_cast<double>(detail::get_le<std::uint64_t>(&bytes[pos])));
  }
  return BasicTensor<T>(std::move(shape), std::move(data));
}

inline Bytes read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

inline void write_file(const std::filesystem::path& path, const Bytes& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

template <typename T>
void serialize_tensor(const BasicTensor<T>& t, const std::filesystem::path& path) {
  write_file(path, encode_tensor(t));
}

template <typename T = double>
BasicTensor<T> deserialize_tensor(const std::filesystem::path& path) {
  return decode_tensor<T>(read_file(path), path.string());
}

}  // namespace dawnfm::io
