// SPDX-License-Identifier: Apache-2.0
#pragma once

// Per-channel smoothing: Y = X W = (X diag(lambda)^-1)(diag(lambda) W) with
//   lambda_j = max|X[:, j]|^alpha / max|W[j, :]|^(1 - alpha).

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "mxrot/error.hpp"
#include "mxrot/rotation.hpp"
#include "mxrot/tensor.hpp"

namespace mxrot {

struct CalibStats {
  std::vector<float> channel_absmax;  // per input channel, over activation rows
  std::vector<float> weight_absmax;   // per input channel, over weight columns
};

struct SmoothScale {
  std::vector<double> lambda;
  double alpha = 0.5;
};

inline std::vector<float> column_absmax(const Tensor& t) {
  std::vector<float> m(t.cols(), 0.0f);
  for (std::size_t r = 0; r < t.rows(); ++r) {
    const auto row = t.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) m[c] = std::max(m[c], std::fabs(row[c]));
  }
  return m;
}

inline std::vector<float> row_absmax(const Tensor& t) {
  std::vector<float> m(t.rows(), 0.0f);
  for (std::size_t r = 0; r < t.rows(); ++r) m[r] = max_abs(t.row(r));
  return m;
}

inline CalibStats collect_calib_stats(const Tensor& x, const Tensor& w) {
  if (x.cols() != w.rows()) {
    throw ShapeError("activation has " + std::to_string(x.cols()) + " channels but weight has " +
                     std::to_string(w.rows()) + " rows");
  }
  return CalibStats{column_absmax(x), row_absmax(w)};
}

// Dead channels (zero activation max, or zero weight max with alpha < 1) get
// lambda = 1.
inline SmoothScale compute_smooth_scale(const CalibStats& stats, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ArgumentError("alpha must lie in [0, 1]");
  if (stats.channel_absmax.size() != stats.weight_absmax.size()) {
    throw ShapeError("calibration statistics have mismatched lengths");
  }
  SmoothScale s{std::vector<double>(stats.channel_absmax.size(), 1.0), alpha};
  for (std::size_t j = 0; j < s.lambda.size(); ++j) {
    const double a = stats.channel_absmax[j];
    const double w = stats.weight_absmax[j];
    if (a == 0.0) continue;
    const double num = std::pow(a, alpha);
    const double den = std::pow(w, 1.0 - alpha);
    if (num == 0.0 || den == 0.0) continue;
    const double lam = num / den;
    if (std::isfinite(lam) && lam > 0.0) s.lambda[j] = lam;
  }
  return s;
}

inline void check_lambda(const SmoothScale& s, std::size_t channels) {
  if (s.lambda.size() != channels) {
    throw ShapeError("smooth scale has " + std::to_string(s.lambda.size()) + " entries for " +
                     std::to_string(channels) + " channels");
  }
}

// Returns (X diag(lambda)^-1, diag(lambda) W).
inline std::pair<Tensor, Tensor> apply_smooth(const Tensor& x, const Tensor& w, const SmoothScale& s) {
  if (x.cols() != w.rows()) throw ShapeError("activation/weight channel mismatch");
  check_lambda(s, x.cols());
  std::vector<float> xs(x.size());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const auto row = x.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) xs[r * x.cols() + c] = static_cast<float>(row[c] / s.lambda[c]);
  }
  std::vector<float> ws(w.size());
  for (std::size_t r = 0; r < w.rows(); ++r) {
    const auto row = w.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) ws[r * w.cols() + c] = static_cast<float>(row[c] * s.lambda[r]);
  }
  return {Tensor(x.rows(), x.cols(), std::move(xs)), Tensor(w.rows(), w.cols(), std::move(ws))};
}

// BlockDiag(R^T) * diag(lambda) * W, accumulated in double and rounded once.
inline Tensor fuse_into_weight(const Tensor& w, const SmoothScale& s, const BlockRotation& rot) {
  check_lambda(s, w.rows());
  const std::size_t b = rot.block_size;
  if (b == 0 || w.rows() % b != 0) {
    throw ShapeError("weight rows " + std::to_string(w.rows()) + " not divisible by rotation block size " +
                     std::to_string(b));
  }
  const std::size_t cols = w.cols();
  std::vector<float> out(w.size());
  std::vector<double> acc(b * cols);
  for (std::size_t k = 0; k < w.rows() / b; ++k) {
    const Matrix& m = rot.for_block(k).matrix;
    std::fill(acc.begin(), acc.end(), 0.0);
    for (std::size_t j = 0; j < b; ++j) {
      const std::size_t src_row = k * b + j;
      const double lam = s.lambda[src_row];
      const auto src = w.row(src_row);
      for (std::size_t i = 0; i < b; ++i) {
        const double coeff = m(j, i) * lam;
        if (coeff == 0.0) continue;
        double* dst = acc.data() + i * cols;
        for (std::size_t c = 0; c < cols; ++c) dst[c] += coeff * src[c];
      }
    }
    for (std::size_t i = 0; i < b * cols; ++i) out[k * b * cols + i] = static_cast<float>(acc[i]);
  }
  return Tensor(w.rows(), w.cols(), std::move(out));
}

inline Tensor fuse_into_weight(const Tensor& w, const SmoothScale& s, const Rotation& rot) {
  return fuse_into_weight(w, s, BlockRotation::uniform(rot));
}

// X diag(lambda)^-1 BlockDiag(R) in one pass, the activation half of the fused transform.
inline Tensor transform_activation(const Tensor& x, const SmoothScale& s, const BlockRotation& rot) {
  check_lambda(s, x.cols());
  const std::size_t b = rot.block_size;
  if (b == 0 || x.cols() % b != 0) throw ShapeError("activation cols not divisible by rotation block size");
  std::vector<float> out(x.size());
  std::vector<double> seg(b), acc(b);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const auto row = x.row(r);
    for (std::size_t k = 0; k < x.cols() / b; ++k) {
      const Matrix& m = rot.for_block(k).matrix;
      for (std::size_t i = 0; i < b; ++i) seg[i] = row[k * b + i] / s.lambda[k * b + i];
      std::fill(acc.begin(), acc.end(), 0.0);
      for (std::size_t i = 0; i < b; ++i) {
        if (seg[i] == 0.0) continue;
        const auto mrow = m.row(i);
        for (std::size_t j = 0; j < b; ++j) acc[j] += seg[i] * mrow[j];
      }
      for (std::size_t j = 0; j < b; ++j) out[r * x.cols() + k * b + j] = static_cast<float>(acc[j]);
    }
  }
  return Tensor(x.rows(), x.cols(), std::move(out));
}

}  // namespace mxrot
