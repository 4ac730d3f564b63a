#pragma once

#include <filesystem>
#include <string>

#include "dawnfm/io/tensor_io.hpp"

namespace dawnfm::io {

inline constexpr std::uint32_t kIdxImages = 0x00000803;
inline constexpr std::uint32_t kIdxLabels = 0x00000801;

/// Parses unsigned-byte IDX data (3D images or 1D labels); bytes / 255.
inline Tensor decode_idx(const Bytes& bytes, const std::string& origin = "idx") {
  auto be32 = [&](std::size_t off) {
    if (bytes.size() < off + 4) {
      throw ParseError(origin + ": truncated header at byte offset " + std::to_string(bytes.size()));
    }
    return std::uint32_t{bytes[off]} << 24 | std::uint32_t{bytes[off + 1]} << 16 | std::uint32_t{bytes[off + 2]} << 8 |
           std::uint32_t{bytes[off + 3]};
  };
  const std::uint32_t magic = be32(0);
  std::size_t ndim = 0;
  if (magic == kIdxImages) {
    ndim = 3;
  } else if (magic == kIdxLabels) {
    ndim = 1;
  } else {
    char buf[16];
    std::snprintf(buf, sizeof buf, "0x%08x", magic);
    throw ParseError(origin + ": bad magic " + buf + " at byte offset 0");
  }
  Shape shape;
  for (std::size_t i = 0; i < ndim; ++i) {
    const std::uint32_t e = be32(4 + 4 * i);
    if (e == 0) throw ParseError(origin + ": zero dimension at byte offset " + std::to_string(4 + 4 * i));
    shape.push_back(e);
  }
  const std::size_t pos = 4 + 4 * ndim;
  const std::size_t expected = shape_numel(shape);
  const std::size_t actual = bytes.size() - pos;
  if (actual != expected) {
    throw ParseError(origin + ": payload at byte offset " + std::to_string(pos) + " holds " + std::to_string(actual) +
                     " bytes, expected " + std::to_string(expected));
  }
  Tensor t(std::move(shape));
  for (std::size_t i = 0; i < expected; ++i) t[i] = static_cast<double>(bytes[pos + i]) / 255.0;
  return t;
}

inline Tensor load_idx(const std::filesystem::path& path) { return decode_idx(read_file(path), path.string()); }

}  // namespace dawnfm::io
