// SPDX-License-Identifier: Apache-2.0
#pragma once

// MXTEN1 tensor files and CSV import.
//
// MXTEN1 layout, all little-endian, no padding:
//   "MXTEN1" | u32 rows | u32 cols | rows*cols binary32, row-major

#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <limits>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "mxrot/error.hpp"
#include "mxrot/tensor.hpp"

namespace mxrot {

inline constexpr std::string_view kTensorMagic = "MXTEN1";
inline constexpr std::size_t kTensorHeaderBytes = 6 + 4 + 4;

namespace detail {

inline void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>(v >> (8 * i)));
}

inline std::uint32_t get_u32(const unsigned char* p) noexcept {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

inline std::uint32_t checked_u32(std::size_t v, const char* what) {
  if (v > std::numeric_limits<std::uint32_t>::max()) {
    throw ArgumentError(std::string(what) + " does not fit in a u32 header field");
  }
  return static_cast<std::uint32_t>(v);
}

inline std::vector<unsigned char> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string() + " for reading");
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failure on " + path.string());
  return bytes;
}

inline void write_file(const std::filesystem::path& path, const std::vector<unsigned char>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  out.flush();
  if (!out) throw IoError("write failure on " + path.string());
}

}  // namespace detail

inline std::vector<unsigned char> encode_tensor(const Tensor& t) {
  std::vector<unsigned char> out;
  out.reserve(kTensorHeaderBytes + 4 * t.size());
  out.insert(out.end(), kTensorMagic.begin(), kTensorMagic.end());
  detail::put_u32(out, detail::checked_u32(t.rows(), "rows"));
  detail::put_u32(out, detail::checked_u32(t.cols(), "cols"));
  for (float v : t.data()) detail::put_u32(out, std::bit_cast<std::uint32_t>(v));
  return out;
}

inline Tensor decode_tensor(std::span<const unsigned char> bytes) {
  if (bytes.size() < kTensorHeaderBytes ||
      std::memcmp(bytes.data(), kTensorMagic.data(), kTensorMagic.size()) != 0) {
    throw FormatError("not an MXTEN1 tensor file (bad magic or short header)");
  }
  const std::uint64_t rows = detail::get_u32(bytes.data() + 6);
  const std::uint64_t cols = detail::get_u32(bytes.data() + 10);
  const std::uint64_t expected = kTensorHeaderBytes + 4 * rows * cols;
  if (bytes.size() != expected) {
    throw TruncationError("MXTEN1 payload is " + std::to_string(bytes.size() - kTensorHeaderBytes) +
                          " bytes, header declares " + std::to_string(expected - kTensorHeaderBytes));
  }
  std::vector<float> data(rows * cols);
  const unsigned char* p = bytes.data() + kTensorHeaderBytes;
  for (std::size_t i = 0; i < data.size(); ++i, p += 4) data[i] = std::bit_cast<float>(detail::get_u32(p));
  return Tensor(rows, cols, std::move(data));
}

inline void save_tensor(const Tensor& t, const std::filesystem::path& path) {
  detail::write_file(path, encode_tensor(t));
}

inline Tensor load_tensor(const std::filesystem::path& path) { return decode_tensor(detail::read_file(path)); }

// Comma-separated decimal floats, one row per line. Blank lines are skipped;
// every row must have the same number of fields.
inline Tensor parse_csv_tensor(std::string_view text) {
  std::vector<float> data;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto eol = text.find('\n');
    std::string_view line = text.substr(0, eol);
    text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;

    std::size_t fields = 0;
    while (true) {
      const auto comma = line.find(',');
      std::string_view field = line.substr(0, comma);
      while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
      while (!field.empty() && (field.back() == ' ' || field.back() == '\t')) field.remove_suffix(1);
      if (!field.empty() && field.front() == '+') field.remove_prefix(1);
      float value = 0.0f;
      const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
      if (ec != std::errc{} || ptr != field.data() + field.size() || field.empty()) {
        throw FormatError("CSV line " + std::to_string(line_no) + ": cannot parse '" + std::string(field) + "'");
      }
      data.push_back(value);
      ++fields;
      if (comma == std::string_view::npos) break;
      line.remove_prefix(comma + 1);
    }
    if (rows == 0) {
      cols = fields;
    } else if (fields != cols) {
      throw FormatError("CSV line " + std::to_string(line_no) + ": expected " + std::to_string(cols) +
                        " fields, got " + std::to_string(fields));
    }
    ++rows;
  }
  return Tensor(rows, cols, std::move(data));
}

inline Tensor load_csv_tensor(const std::filesystem::path& path) {
  const auto bytes = detail::read_file(path);
  return parse_csv_tensor(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

// Dispatches on extension: ".csv" is parsed as CSV, anything else as MXTEN1.
inline Tensor load_tensor_any(const std::filesystem::path& path) {
  return path.extension() == ".csv" ? load_csv_tensor(path) : load_tensor(path);
}

}  // namespace mxrot
