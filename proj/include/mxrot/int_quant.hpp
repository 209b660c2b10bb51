// SPDX-License-Identifier: Apache-2.0
#pragma once

// Per-tensor asymmetric b-bit integer quantization:
//   s = (max - min) / (2^b - 1),  z = -round(min / s)
//   q = clamp(round(x / s) + z, 0, 2^b - 1),  x_hat = (q - z) * s
// round() is half away from zero.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "mxrot/error.hpp"
#include "mxrot/tensor.hpp"

namespace mxrot {

struct IntQuantParams {
  int bits = 0;
  double step = 1.0;
  std::int64_t zero_point = 0;

  std::int64_t max_code() const noexcept { return (std::int64_t{1} << bits) - 1; }
};

struct IntQuantized {
  IntQuantParams params;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::int32_t> codes;
};

inline IntQuantized int_uniform_quantize(const Tensor& t, int bits) {
  if (bits < 2 || bits > 30) throw ArgumentError("bits must lie in [2, 30]");
  IntQuantized out;
  out.params.bits = bits;
  out.rows = t.rows();
  out.cols = t.cols();
  out.codes.resize(t.size());
  if (t.empty()) return out;

  const auto [lo_it, hi_it] = std::minmax_element(t.data().begin(), t.data().end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  const std::int64_t qmax = out.params.max_code();

  if (lo == hi) {
    // Degenerate range: one step of |c| maps the constant onto code 1 (c > 0)
    // or code 0 with zero point 1 (c < 0); reconstruction is exact.
    out.params.step = lo == 0.0 ? 1.0 : std::fabs(lo);
    out.params.zero_point = lo < 0.0 ? 1 : 0;
    const std::int32_t code = lo > 0.0 ? 1 : 0;
    std::fill(out.codes.begin(), out.codes.end(), code);
    return out;
  }

  const double s = (hi - lo) / static_cast<double>(qmax);
  const auto z = static_cast<std::int64_t>(-std::round(lo / s));
  out.params.step = s;
  out.params.zero_point = z;
  const auto data = t.data();
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto q = static_cast<std::int64_t>(std::round(static_cast<double>(data[i]) / s)) + z;
    out.codes[i] = static_cast<std::int32_t>(std::clamp<std::int64_t>(q, 0, qmax));
  }
  return out;
}

inline std::vector<double> int_dequantize(const IntQuantized& q) {
  std::vector<double> out(q.codes.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = static_cast<double>(q.codes[i] - q.params.zero_point) * q.params.step;
  }
  return out;
}

}  // namespace mxrot
