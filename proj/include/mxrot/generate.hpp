// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "mxrot/error.hpp"
#include "mxrot/rng.hpp"
#include "mxrot/tensor.hpp"

namespace mxrot {

enum class BaseDistribution { standard_normal, uniform_symmetric };

// Synthetic activation recipe. Normal outliers scale whole channels
// (columns) across every token; massive outliers scale isolated cells.
struct OutlierSpec {
  double normal_fraction = 0.0;
  double normal_magnitude = 1.0;
  std::size_t massive_count = 0;
  double massive_magnitude = 1.0;
  BaseDistribution base = BaseDistribution::standard_normal;
  std::uint64_t seed = 0;
};

// Which cells generate_tensor touched, for summaries and tests.
struct InjectionRecord {
  std::vector<std::size_t> normal_columns;  // ascending
  std::vector<std::size_t> massive_cells;   // flat row-major indices, ascending
};

namespace detail {

// Streams are split so the base draw is independent of the injection
// parameters: a cell that is not injected is bitwise equal to the base draw.
inline constexpr std::uint64_t kBaseStream = 0;
inline constexpr std::uint64_t kColumnStream = 1;
inline constexpr std::uint64_t kCellStream = 2;

// k distinct values from [0, n), Floyd's algorithm, returned ascending.
inline std::vector<std::size_t> sample_distinct(std::size_t n, std::size_t k, Rng& rng) {
  std::vector<std::size_t> picked;
  picked.reserve(k);
  std::vector<bool> taken(n, false);
  for (std::size_t j = n - k; j < n; ++j) {
    const auto t = static_cast<std::size_t>(rng.below(j + 1));
    const std::size_t pick = taken[t] ? j : t;
    taken[pick] = true;
    picked.push_back(pick);
  }
  std::sort(picked.begin(), picked.end());
  return picked;
}

}  // namespace detail

inline void validate(const OutlierSpec& spec) {
  if (!(spec.normal_fraction >= 0.0 && spec.normal_fraction <= 1.0)) {
    throw ArgumentError("normal_fraction must lie in [0, 1]");
  }
  if (!(spec.normal_magnitude >= 1.0) || !std::isfinite(spec.normal_magnitude)) {
    throw ArgumentError("normal_magnitude must be a finite value >= 1");
  }
  if (!(spec.massive_magnitude >= 1.0) || !std::isfinite(spec.massive_magnitude)) {
    throw ArgumentError("massive_magnitude must be a finite value >= 1");
  }
}

inline std::size_t normal_outlier_column_count(std::size_t cols, double fraction) {
  return std::min(cols, static_cast<std::size_t>(std::llround(fraction * static_cast<double>(cols))));
}

inline Tensor generate_tensor(std::size_t rows, std::size_t cols, const OutlierSpec& spec,
                              InjectionRecord* record = nullptr) {
  validate(spec);
  const std::size_t cells = rows * cols;
  if (spec.massive_count > cells) {
    throw ArgumentError("massive_count " + std::to_string(spec.massive_count) + " exceeds the " +
                        std::to_string(cells) + " cells of a " + std::to_string(rows) + "x" +
                        std::to_string(cols) + " tensor");
  }

  std::vector<float> data(cells);
  Rng base(derive_seed(spec.seed, detail::kBaseStream));
  for (auto& v : data) {
    v = static_cast<float>(spec.base == BaseDistribution::standard_normal ? base.normal()
                                                                          : base.uniform(-1.0, 1.0));
  }

  Rng column_rng(derive_seed(spec.seed, detail::kColumnStream));
  const auto columns =
      detail::sample_distinct(cols, normal_outlier_column_count(cols, spec.normal_fraction), column_rng);
  const auto normal_mag = static_cast<float>(spec.normal_magnitude);
  for (std::size_t c : columns)
    for (std::size_t r = 0; r < rows; ++r) data[r * cols + c] *= normal_mag;

  Rng cell_rng(derive_seed(spec.seed, detail::kCellStream));
  const auto massive = detail::sample_distinct(cells, spec.massive_count, cell_rng);
  const auto massive_mag = static_cast<float>(spec.massive_magnitude);
  for (std::size_t idx : massive) data[idx] *= massive_mag;

  if (record != nullptr) *record = InjectionRecord{columns, massive};
  return Tensor(rows, cols, std::move(data));
}

}  // namespace mxrot
