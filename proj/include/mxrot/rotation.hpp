// SPDX-License-Identifier: Apache-2.0
#pragma once

// Block-diagonal orthogonal rotations.
//
// A Rotation is one B x B orthogonal matrix R. Activations are rotated on the
// right, one row segment of length B at a time (X -> X * BlockDiag(R, ..., R)),
// and the matching weight transform is BlockDiag(R^T, ..., R^T) * W, so the
// product X * W is unchanged.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mxrot/error.hpp"
#include "mxrot/linalg.hpp"
#include "mxrot/rng.hpp"
#include "mxrot/tensor.hpp"

namespace mxrot {

enum class RotationKind { identity, hadamard, outlier_aware };

inline std::string_view to_string(RotationKind kind) noexcept {
  switch (kind) {
    case RotationKind::identity: return "identity";
    case RotationKind::hadamard: return "hadamard";
    case RotationKind::outlier_aware: return "outlier-aware";
  }
  return "identity";
}

inline std::optional<RotationKind> parse_rotation_kind(std::string_view name) noexcept {
  if (name == "identity") return RotationKind::identity;
  if (name == "hadamard") return RotationKind::hadamard;
  if (name == "outlier-aware") return RotationKind::outlier_aware;
  return std::nullopt;
}

struct Rotation {
  std::size_t block_size = 0;
  Matrix matrix;
  RotationKind provenance = RotationKind::identity;
  std::uint64_t seed = 0;
  std::size_t steps_used = 0;

  static Rotation identity(std::size_t block_size) {
    return Rotation{block_size, Matrix::identity(block_size), RotationKind::identity, 0, 0};
  }

  // The inverse rotation.
  Rotation transposed() const {
    Rotation r = *this;
    r.matrix = matrix.transposed();
    return r;
  }

  friend bool operator==(const Rotation&, const Rotation&) = default;
};

inline bool is_power_of_two(std::size_t n) noexcept { return n != 0 && (n & (n - 1)) == 0; }

// D * H_B / sqrt(B) with H_B the Sylvester Hadamard matrix and D a diagonal
// of seeded random signs (D = I when randomize_signs is false).
inline Rotation hadamard_rotation(std::size_t block_size, std::uint64_t seed, bool randomize_signs = true) {
  if (!is_power_of_two(block_size)) {
    throw ArgumentError("Hadamard block size must be a power of two, got " + std::to_string(block_size));
  }
  const double norm = 1.0 / std::sqrt(static_cast<double>(block_size));
  Matrix m(block_size, block_size);
  Rng rng(seed);
  for (std::size_t i = 0; i < block_size; ++i) {
    const double sign = randomize_signs ? ((rng.next() >> 63) != 0 ? -1.0 : 1.0) : 1.0;
    for (std::size_t j = 0; j < block_size; ++j) {
      // Sylvester entry: (-1)^{popcount(i & j)}
      const bool odd = (__builtin_popcountll(i & j) & 1) != 0;
      m(i, j) = sign * (odd ? -norm : norm);
    }
  }
  return Rotation{block_size, std::move(m), RotationKind::hadamard, seed, 0};
}

namespace detail {

// Four independent partial sums keep the adds off one dependency chain.
inline double dot(const double* a, const double* b, std::size_t n) noexcept {
  double s[4] = {0.0, 0.0, 0.0, 0.0};
  std::size_t j = 0;
  for (; j + 4 <= n; j += 4) {
    s[0] += a[j] * b[j];
    s[1] += a[j + 1] * b[j + 1];
    s[2] += a[j + 2] * b[j + 2];
    s[3] += a[j + 3] * b[j + 3];
  }
  for (; j < n; ++j) s[0] += a[j] * b[j];
  return (s[0] + s[1]) + (s[2] + s[3]);
}

}  // namespace detail

// One greedy dispersal step R = E * Q. E swaps coordinates 0 and peak_dim; Q
// has a uniform first row 1/sqrt(B) and a seeded orthonormal completion. A
// unit impulse at peak_dim therefore maps to a vector with every coordinate
// equal to 1/sqrt(B).
inline Rotation greedy_rotation_step(std::size_t peak_dim, std::size_t block_size, std::uint64_t seed) {
  if (block_size == 0 || peak_dim >= block_size) {
    throw ArgumentError("peak dimension " + std::to_string(peak_dim) + " outside block of size " +
                        std::to_string(block_size));
  }
  const std::size_t b = block_size;
  Matrix q(b, b);
  const double uniform = 1.0 / std::sqrt(static_cast<double>(b));
  for (std::size_t j = 0; j < b; ++j) q(0, j) = uniform;

  Rng rng(seed);
  double* const base = q.data().data();
  for (std::size_t i = 1; i < b; ++i) {
    double* const v = base + i * b;
    while (true) {
      for (std::size_t j = 0; j < b; ++j) v[j] = rng.normal();
      // Two passes of modified Gram-Schmidt against the fixed rows.
      for (int pass = 0; pass < 2; ++pass) {
        for (std::size_t k = 0; k < i; ++k) {
          const double* const qk = base + k * b;
          const double dot = detail::dot(v, qk, b);
          for (std::size_t j = 0; j < b; ++j) v[j] -= dot * qk[j];
        }
      }
      double n2 = 0.0;
      for (std::size_t j = 0; j < b; ++j) n2 += v[j] * v[j];
      if (n2 > 1e-12) {
        const double inv = 1.0 / std::sqrt(n2);
        for (std::size_t j = 0; j < b; ++j) v[j] *= inv;
        break;
      }
    }
  }

  // E * Q swaps rows 0 and peak_dim of Q.
  if (peak_dim != 0) std::swap_ranges(q.row(0).begin(), q.row(0).end(), q.row(peak_dim).begin());
  return Rotation{b, std::move(q), RotationKind::outlier_aware, seed, 1};
}

// Per-step record of the greedy search. peaks[0] is the unrotated peak and
// peaks[k] the peak after k composed steps; target_dims[k-1] is the column
// step k dispersed.
struct GreedySearchTrace {
  std::vector<double> peaks;
  std::vector<std::size_t> target_dims;
  std::size_t best_step = 0;
};

namespace detail {

inline double peak_abs(const Matrix& m) noexcept {
  double p = 0.0;
  for (double v : m.data()) p = std::max(p, std::fabs(v));
  return p;
}

// Column holding the largest |value| over all rows; ties go to the lowest index.
inline std::size_t peak_column(const Matrix& m) noexcept {
  std::size_t best = 0;
  double best_val = -1.0;
  for (std::size_t c = 0; c < m.cols(); ++c) {
    double col_max = 0.0;
    for (std::size_t r = 0; r < m.rows(); ++r) col_max = std::max(col_max, std::fabs(m(r, c)));
    if (col_max > best_val) {
      best_val = col_max;
      best = c;
    }
  }
  return best;
}

}  // namespace detail

// Greedy outlier-aware rotation for one calibration block (rows x B). Each
// step disperses the column holding the current peak; the product of the
// first k* steps is returned, where k* minimises the peak max|value| over the
// whole block. k* = 0 (identity) is a candidate so the result never raises
// the peak. Ties take the smallest k.
inline Rotation build_outlier_aware_rotation(const Tensor& calib_block, std::size_t block_size,
                                             std::size_t max_steps, std::uint64_t seed,
                                             GreedySearchTrace* trace = nullptr) {
  if (calib_block.cols() != block_size) {
    throw ShapeError("calibration block has " + std::to_string(calib_block.cols()) + " columns, expected " +
                     std::to_string(block_size));
  }
  if (max_steps == 0) throw ArgumentError("max_steps must be at least 1");

  Matrix current = Matrix::from(calib_block);
  GreedySearchTrace local;
  local.peaks.push_back(detail::peak_abs(current));

  Rotation best = Rotation::identity(block_size);
  best.provenance = RotationKind::outlier_aware;
  best.seed = seed;

  if (local.peaks[0] > 0.0) {
    // Steps are kept and only the winning prefix is multiplied out.
    std::vector<Matrix> steps;
    steps.reserve(max_steps);
    double best_peak = local.peaks[0];
    for (std::size_t k = 1; k <= max_steps; ++k) {
      const std::size_t dim = detail::peak_column(current);
      steps.push_back(greedy_rotation_step(dim, block_size, derive_seed(seed, k)).matrix);
      current = matmul(current, steps.back());
      const double peak = detail::peak_abs(current);
      local.target_dims.push_back(dim);
      local.peaks.push_back(peak);
      if (peak < best_peak) {
        best_peak = peak;
        best.steps_used = k;
      }
    }
    if (best.steps_used > 0) {
      Matrix composed = steps.front();
      for (std::size_t k = 1; k < best.steps_used; ++k) composed = matmul(composed, steps[k]);
      best.matrix = std::move(composed);
    }
  }
  local.best_step = best.steps_used;
  if (trace != nullptr) *trace = std::move(local);
  return best;
}

// Index of the column block holding the largest |value|; lowest index on ties.
inline std::size_t select_reference_block(const Tensor& x, std::size_t block_size) {
  if (block_size == 0 || x.cols() % block_size != 0) {
    throw ShapeError("cols " + std::to_string(x.cols()) + " not divisible by block size " +
                     std::to_string(block_size));
  }
  const std::size_t blocks = x.cols() / block_size;
  std::vector<float> block_max(blocks, 0.0f);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const auto row = x.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) {
      float& m = block_max[c / block_size];
      m = std::max(m, std::fabs(row[c]));
    }
  }
  std::size_t best = 0;
  for (std::size_t k = 1; k < blocks; ++k)
    if (block_max[k] > block_max[best]) best = k;
  return best;
}

// One rotation per column block, or a single rotation shared by all of them.
struct BlockRotation {
  std::size_t block_size = 0;
  std::vector<Rotation> blocks;

  bool shared() const noexcept { return blocks.size() == 1; }
  const Rotation& for_block(std::size_t k) const { return shared() ? blocks.front() : blocks.at(k); }

  static BlockRotation uniform(Rotation r) {
    const std::size_t b = r.block_size;
    return BlockRotation{b, {std::move(r)}};
  }

  BlockRotation transposed() const {
    BlockRotation t{block_size, {}};
    t.blocks.reserve(blocks.size());
    for (const auto& r : blocks) t.blocks.push_back(r.transposed());
    return t;
  }
};

enum class RotationSharing { shared, per_block };

// Outlier-aware block-diagonal rotation calibrated on X. Shared mode builds a
// single rotation from the block with the largest outlier and reuses it for
// every block; per-block mode calibrates each block separately.
inline BlockRotation build_block_rotation(const Tensor& x, std::size_t block_size, std::size_t max_steps,
                                          std::uint64_t seed, RotationSharing sharing = RotationSharing::shared) {
  if (block_size == 0 || x.cols() % block_size != 0) {
    throw ShapeError("cols " + std::to_string(x.cols()) + " not divisible by block size " +
                     std::to_string(block_size));
  }
  BlockRotation out{block_size, {}};
  if (sharing == RotationSharing::shared) {
    const std::size_t ref = select_reference_block(x, block_size);
    out.blocks.push_back(
        build_outlier_aware_rotation(x.column_slice(ref * block_size, block_size), block_size, max_steps, seed));
  } else {
    const std::size_t blocks = x.cols() / block_size;
    for (std::size_t k = 0; k < blocks; ++k) {
      out.blocks.push_back(build_outlier_aware_rotation(x.column_slice(k * block_size, block_size), block_size,
                                                        max_steps, derive_seed(seed, 1000 + k)));
    }
  }
  return out;
}

enum class RotationSide {
  activation,  // T * BlockDiag(R)
  weight,      // BlockDiag(R^T) * T
};

inline Tensor apply_block_rotation(const Tensor& t, const BlockRotation& rot, RotationSide side) {
  const std::size_t b = rot.block_size;
  const std::size_t dim = side == RotationSide::activation ? t.cols() : t.rows();
  if (b == 0 || dim % b != 0) {
    throw ShapeError("dimension " + std::to_string(dim) + " not divisible by rotation block size " +
                     std::to_string(b));
  }
  const std::size_t blocks = dim / b;
  if (!rot.shared() && rot.blocks.size() != blocks) throw ShapeError("per-block rotation count mismatch");
  for (const auto& r : rot.blocks) {
    if (r.block_size != b || r.matrix.rows() != b || r.matrix.cols() != b) {
      throw ShapeError("rotation matrix does not match its block size");
    }
  }

  std::vector<float> out(t.size());
  const auto in = t.data();
  if (side == RotationSide::activation) {
    std::vector<double> acc(b);
    for (std::size_t r = 0; r < t.rows(); ++r) {
      for (std::size_t k = 0; k < blocks; ++k) {
        const Matrix& m = rot.for_block(k).matrix;
        const float* seg = in.data() + r * t.cols() + k * b;
        std::fill(acc.begin(), acc.end(), 0.0);
        for (std::size_t i = 0; i < b; ++i) {
          const double xi = seg[i];
          if (xi == 0.0) continue;
          const auto mrow = m.row(i);
          for (std::size_t j = 0; j < b; ++j) acc[j] += xi * mrow[j];
        }
        float* dst = out.data() + r * t.cols() + k * b;
        for (std::size_t j = 0; j < b; ++j) dst[j] = static_cast<float>(acc[j]);
      }
    }
  } else {
    const std::size_t cols = t.cols();
    std::vector<double> acc(b * cols);
    for (std::size_t k = 0; k < blocks; ++k) {
      const Matrix& m = rot.for_block(k).matrix;
      std::fill(acc.begin(), acc.end(), 0.0);
      // out[i, :] = sum_j R[j][i] * T[kB + j, :]
      for (std::size_t j = 0; j < b; ++j) {
        const float* src = in.data() + (k * b + j) * cols;
        const auto mrow = m.row(j);
        for (std::size_t i = 0; i < b; ++i) {
          const double rji = mrow[i];
          if (rji == 0.0) continue;
          double* dst = acc.data() + i * cols;
          for (std::size_t c = 0; c < cols; ++c) dst[c] += rji * src[c];
        }
      }
      for (std::size_t i = 0; i < b * cols; ++i) out[k * b * cols + i] = static_cast<float>(acc[i]);
    }
  }
  return Tensor(t.rows(), t.cols(), std::move(out));
}

inline Tensor apply_block_rotation(const Tensor& t, const Rotation& rot, RotationSide side) {
  return apply_block_rotation(t, BlockRotation::uniform(rot), side);
}

}  // namespace mxrot
