// SPDX-License-Identifier: Apache-2.0
#pragma once

// Whole-tensor MXFP4 quantization and the MXQ4 container.
//
// MXQ4 layout, little-endian, no padding between fields:
//   "MXQ4" | u32 rows | u32 cols | u32 group_size
//   | i8 scale exponent per group (row-major group order)
//   | E2M1 codes, two per byte, low nibble first, row-major
// An odd element count leaves a single zero pad nibble in the last byte.

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "mxrot/error.hpp"
#include "mxrot/fp4.hpp"
#include "mxrot/tensor.hpp"
#include "mxrot/tensor_io.hpp"

namespace mxrot {

inline constexpr std::string_view kMxq4Magic = "MXQ4";
inline constexpr std::size_t kMxq4HeaderBytes = 4 + 4 + 4 + 4;

// Groups run along each row and never straddle rows.
class MxQuantizedTensor {
 public:
  MxQuantizedTensor() = default;

  MxQuantizedTensor(std::size_t rows, std::size_t cols, std::size_t group_size, std::vector<E8m0Scale> scales,
                    std::vector<std::uint8_t> packed_codes)
      : rows_(rows), cols_(cols), group_size_(group_size), scales_(std::move(scales)),
        packed_(std::move(packed_codes)) {
    if (group_size_ == 0 || cols_ % group_size_ != 0) {
      throw ShapeError("cols " + std::to_string(cols_) + " not divisible by group size " +
                       std::to_string(group_size_));
    }
    if (scales_.size() != num_groups()) throw ShapeError("scale count does not match group count");
    if (packed_.size() != (rows_ * cols_ + 1) / 2) throw ShapeError("packed code length does not match shape");
    for (E8m0Scale s : scales_) {
      if (s.exponent < kE8m0MinExponent) throw DomainError("E8M0 NaN pattern in scales");
    }
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t group_size() const noexcept { return group_size_; }
  std::size_t num_groups() const noexcept { return group_size_ == 0 ? 0 : rows_ * cols_ / group_size_; }
  std::size_t num_codes() const noexcept { return rows_ * cols_; }

  const std::vector<E8m0Scale>& scales() const noexcept { return scales_; }
  const std::vector<std::uint8_t>& packed_codes() const noexcept { return packed_; }

  Fp4Code code(std::size_t flat_index) const noexcept {
    const std::uint8_t byte = packed_[flat_index / 2];
    return Fp4Code{static_cast<std::uint8_t>((flat_index % 2 == 0) ? (byte & 0x0F) : (byte >> 4))};
  }

  friend bool operator==(const MxQuantizedTensor&, const MxQuantizedTensor&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::size_t group_size_ = kDefaultGroupSize;
  std::vector<E8m0Scale> scales_;
  std::vector<std::uint8_t> packed_;
};

inline MxQuantizedTensor quantize_tensor_mx(const Tensor& t, std::size_t group_size = kDefaultGroupSize) {
  if (group_size == 0 || t.cols() % group_size != 0) {
    throw ShapeError("cols " + std::to_string(t.cols()) + " not divisible by group size " +
                     std::to_string(group_size));
  }
  const std::size_t n = t.size();
  std::vector<E8m0Scale> scales(n / group_size);
  std::vector<std::uint8_t> packed((n + 1) / 2, 0);
  std::vector<Fp4Code> codes(group_size);
  const auto data = t.data();
  for (std::size_t g = 0; g < scales.size(); ++g) {
    scales[g] = quantize_block_into(data.subspan(g * group_size, group_size), codes);
    for (std::size_t i = 0; i < group_size; ++i) {
      const std::size_t flat = g * group_size + i;
      packed[flat / 2] |= static_cast<std::uint8_t>(codes[i].bits << ((flat % 2) * 4));
    }
  }
  return MxQuantizedTensor(t.rows(), t.cols(), group_size, std::move(scales), std::move(packed));
}

inline Tensor dequantize_tensor_mx(const MxQuantizedTensor& q) {
  std::vector<float> out(q.num_codes());
  const std::size_t gs = q.group_size();
  for (std::size_t g = 0; g < q.num_groups(); ++g) {
    const E8m0Scale s = q.scales()[g];
    for (std::size_t i = 0; i < gs; ++i) {
      const std::size_t flat = g * gs + i;
      out[flat] = std::ldexp(q.code(flat).decode(), s.exponent);
    }
  }
  return Tensor(q.rows(), q.cols(), std::move(out));
}

// Quantize-dequantize in one pass.
inline Tensor fake_quantize_mx(const Tensor& t, std::size_t group_size = kDefaultGroupSize) {
  return dequantize_tensor_mx(quantize_tensor_mx(t, group_size));
}

inline std::vector<unsigned char> encode_mxq4(const MxQuantizedTensor& q) {
  std::vector<unsigned char> out;
  out.reserve(kMxq4HeaderBytes + q.num_groups() + q.packed_codes().size());
  out.insert(out.end(), kMxq4Magic.begin(), kMxq4Magic.end());
  detail::put_u32(out, detail::checked_u32(q.rows(), "rows"));
  detail::put_u32(out, detail::checked_u32(q.cols(), "cols"));
  detail::put_u32(out, detail::checked_u32(q.group_size(), "group_size"));
  for (E8m0Scale s : q.scales()) out.push_back(static_cast<unsigned char>(s.exponent));
  out.insert(out.end(), q.packed_codes().begin(), q.packed_codes().end());
  return out;
}

inline MxQuantizedTensor decode_mxq4(std::span<const unsigned char> bytes) {
  if (bytes.size() < kMxq4HeaderBytes || std::memcmp(bytes.data(), kMxq4Magic.data(), kMxq4Magic.size()) != 0) {
    throw FormatError("not an MXQ4 file (bad magic or short header)");
  }
  const std::uint64_t rows = detail::get_u32(bytes.data() + 4);
  const std::uint64_t cols = detail::get_u32(bytes.data() + 8);
  const std::uint64_t group_size = detail::get_u32(bytes.data() + 12);
  if (group_size == 0 || cols % group_size != 0) {
    throw FormatError("MXQ4 header: cols " + std::to_string(cols) + " not divisible by group size " +
                      std::to_string(group_size));
  }
  const std::uint64_t groups = rows * cols / group_size;
  const std::uint64_t packed = (rows * cols + 1) / 2;
  if (bytes.size() != kMxq4HeaderBytes + groups + packed) {
    throw TruncationError("MXQ4 payload size does not match header");
  }
  std::vector<E8m0Scale> scales(groups);
  const unsigned char* p = bytes.data() + kMxq4HeaderBytes;
  for (auto& s : scales) {
    s.exponent = static_cast<std::int8_t>(*p++);
    if (s.exponent < kE8m0MinExponent) throw FormatError("MXQ4 scale uses the E8M0 NaN pattern");
  }
  std::vector<std::uint8_t> codes(p, p + packed);
  if ((rows * cols) % 2 == 1 && (codes.back() & 0xF0) != 0) throw FormatError("MXQ4 pad nibble is not zero");
  return MxQuantizedTensor(rows, cols, group_size, std::move(scales), std::move(codes));
}

inline void save_mxq4(const MxQuantizedTensor& q, const std::filesystem::path& path) {
  detail::write_file(path, encode_mxq4(q));
}

inline MxQuantizedTensor load_mxq4(const std::filesystem::path& path) { return decode_mxq4(detail::read_file(path)); }

}  // namespace mxrot
