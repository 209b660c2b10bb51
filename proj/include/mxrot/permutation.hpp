// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <numeric>
#include <string>
#include <vector>

#include "mxrot/error.hpp"
#include "mxrot/tensor.hpp"

namespace mxrot {

// Channel reordering; mapping[new_position] = original channel.
class Permutation {
 public:
  Permutation() = default;

  explicit Permutation(std::vector<std::size_t> mapping) : mapping_(std::move(mapping)) {
    std::vector<bool> seen(mapping_.size(), false);
    for (std::size_t m : mapping_) {
      if (m >= mapping_.size() || seen[m]) throw ArgumentError("mapping is not a permutation");
      seen[m] = true;
    }
  }

  static Permutation identity(std::size_t n) {
    std::vector<std::size_t> m(n);
    std::iota(m.begin(), m.end(), std::size_t{0});
    return Permutation(std::move(m));
  }

  std::size_t size() const noexcept { return mapping_.size(); }
  const std::vector<std::size_t>& mapping() const noexcept { return mapping_; }
  std::size_t operator[](std::size_t i) const noexcept { return mapping_[i]; }

  Permutation inverse() const {
    std::vector<std::size_t> inv(mapping_.size());
    for (std::size_t i = 0; i < mapping_.size(); ++i) inv[mapping_[i]] = i;
    return Permutation(std::move(inv));
  }

  bool is_identity() const noexcept {
    for (std::size_t i = 0; i < mapping_.size(); ++i)
      if (mapping_[i] != i) return false;
    return true;
  }

  friend bool operator==(const Permutation&, const Permutation&) = default;

 private:
  std::vector<std::size_t> mapping_;
};

// Balances per-block maxima: channels sorted by descending absmax (stable) are
// dealt across the blocks in serpentine order, forward then backward.
inline Permutation zigzag_permutation(const std::vector<float>& channel_absmax, std::size_t block_size) {
  const std::size_t n = channel_absmax.size();
  if (block_size == 0 || n % block_size != 0) {
    throw ShapeError("channel count " + std::to_string(n) + " not divisible by block size " +
                     std::to_string(block_size));
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return channel_absmax[a] > channel_absmax[b]; });

  const std::size_t blocks = n / block_size;
  std::vector<std::size_t> mapping(n);
  for (std::size_t rank = 0; rank < n; ++rank) {
    const std::size_t pass = rank / blocks;
    const std::size_t offset = rank % blocks;
    const std::size_t block = (pass % 2 == 0) ? offset : blocks - 1 - offset;
    mapping[block * block_size + pass] = order[rank];
  }
  return Permutation(std::move(mapping));
}

// X'[:, i] = X[:, p[i]]
inline Tensor permute_columns(const Tensor& t, const Permutation& p) {
  if (p.size() != t.cols()) throw ShapeError("permutation length does not match column count");
  std::vector<float> out(t.size());
  for (std::size_t r = 0; r < t.rows(); ++r) {
    const auto src = t.row(r);
    for (std::size_t i = 0; i < p.size(); ++i) out[r * t.cols() + i] = src[p[i]];
  }
  return Tensor(t.rows(), t.cols(), std::move(out));
}

// W'[i, :] = W[p[i], :]; the weight-side partner of permute_columns.
inline Tensor permute_rows(const Tensor& t, const Permutation& p) {
  if (p.size() != t.rows()) throw ShapeError("permutation length does not match row count");
  std::vector<float> out;
  out.reserve(t.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    const auto src = t.row(p[i]);
    out.insert(out.end(), src.begin(), src.end());
  }
  return Tensor(t.rows(), t.cols(), std::move(out));
}

}  // namespace mxrot
