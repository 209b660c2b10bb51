// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mxrot/error.hpp"

namespace mxrot {

// Dense row-major binary32 matrix. Immutable once constructed; every value is
// finite. Activations are token x channel, weights are in x out.
class Tensor {
 public:
  Tensor() = default;

  Tensor(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0f) {}

  Tensor(std::size_t rows, std::size_t cols, std::vector<float> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
      throw ShapeError("tensor data length " + std::to_string(data_.size()) + " does not match " +
                       std::to_string(rows_) + "x" + std::to_string(cols_));
    }
    for (std::size_t i = 0; i < data_.size(); ++i) {
      if (!std::isfinite(data_[i])) {
        throw DomainError("non-finite tensor value at flat index " + std::to_string(i));
      }
    }
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  std::span<const float> data() const noexcept { return data_; }
  const std::vector<float>& values() const noexcept { return data_; }

  std::span<const float> row(std::size_t r) const noexcept {
    return std::span<const float>(data_).subspan(r * cols_, cols_);
  }

  float operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

  Tensor transposed() const {
    std::vector<float> out(data_.size());
    for (std::size_t r = 0; r < rows_; ++r)
      for (std::size_t c = 0; c < cols_; ++c) out[c * rows_ + r] = data_[r * cols_ + c];
    return Tensor(cols_, rows_, std::move(out));
  }

  // Columns [first, first + count) of every row.
  Tensor column_slice(std::size_t first, std::size_t count) const {
    if (first + count > cols_) throw ShapeError("column slice out of range");
    std::vector<float> out;
    out.reserve(rows_ * count);
    for (std::size_t r = 0; r < rows_; ++r) {
      const auto src = row(r).subspan(first, count);
      out.insert(out.end(), src.begin(), src.end());
    }
    return Tensor(rows_, count, std::move(out));
  }

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<float> data_;
};

// Bitwise equality, distinguishing -0.0f from +0.0f.
inline bool bitwise_equal(const Tensor& a, const Tensor& b) noexcept {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  const auto x = a.data();
  const auto y = b.data();
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (std::signbit(x[i]) != std::signbit(y[i]) || x[i] != y[i]) return false;
  }
  return true;
}

inline float max_abs(std::span<const float> values) noexcept {
  float m = 0.0f;
  for (float v : values) m = std::max(m, std::fabs(v));
  return m;
}

}  // namespace mxrot
