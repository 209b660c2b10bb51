// SPDX-License-Identifier: Apache-2.0
#pragma once

// Quantization error measurement and the multi-pipeline comparison harness.
//
// Activation and weight errors are measured in each pipeline's own transformed
// domain, group by group. The GEMM error always compares against the
// untransformed full-precision product X * W, which every pipeline preserves
// before quantization, so it is comparable across pipelines.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mxrot/error.hpp"
#include "mxrot/fp4.hpp"
#include "mxrot/linalg.hpp"
#include "mxrot/mx_tensor.hpp"
#include "mxrot/pipeline.hpp"
#include "mxrot/smooth.hpp"
#include "mxrot/tensor.hpp"

namespace mxrot {

// Per-group ||rec - orig||_2 / ||orig||_2. Groups whose original norm is zero
// are recorded as 0 and left out of the mean.
struct GroupErrorStats {
  std::vector<double> per_group;
  double mean = 0.0;
  double max = 0.0;
  std::size_t num_groups = 0;
  std::size_t included_groups = 0;

  friend bool operator==(const GroupErrorStats&, const GroupErrorStats&) = default;
};

inline GroupErrorStats per_group_error(const Tensor& original, const Tensor& reconstructed,
                                       std::size_t group_size = kDefaultGroupSize) {
  if (original.rows() != reconstructed.rows() || original.cols() != reconstructed.cols()) {
    throw ShapeError("per_group_error: shapes differ");
  }
  if (group_size == 0 || original.cols() % group_size != 0) {
    throw ShapeError("per_group_error: cols not divisible by group size");
  }
  GroupErrorStats s;
  s.num_groups = original.size() / group_size;
  s.per_group.assign(s.num_groups, 0.0);
  const auto o = original.data();
  const auto q = reconstructed.data();
  double sum = 0.0;
  for (std::size_t g = 0; g < s.num_groups; ++g) {
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = g * group_size; i < (g + 1) * group_size; ++i) {
      const double d = static_cast<double>(q[i]) - static_cast<double>(o[i]);
      num += d * d;
      den += static_cast<double>(o[i]) * static_cast<double>(o[i]);
    }
    if (den == 0.0) continue;
    const double e = std::sqrt(num) / std::sqrt(den);
    s.per_group[g] = e;
    sum += e;
    s.max = std::max(s.max, e);
    ++s.included_groups;
  }
  s.mean = s.included_groups == 0 ? 0.0 : sum / static_cast<double>(s.included_groups);
  return s;
}

struct GemmError {
  double value = 0.0;
  bool absolute = false;  // set when ||X W||_F == 0, value is then ||Xq Wq||_F
};

inline GemmError gemm_relative_error(const Matrix& reference, const Tensor& xq, const Tensor& wq) {
  if (xq.cols() != wq.rows()) throw ShapeError("gemm_relative_error: operands not conformable");
  const Matrix approx = matmul(xq, wq);
  if (approx.rows() != reference.rows() || approx.cols() != reference.cols()) {
    throw ShapeError("gemm_relative_error: product shapes differ");
  }
  const double diff = frobenius_distance(approx, reference);
  const double ref = frobenius_norm(reference);
  if (ref == 0.0) return GemmError{diff, true};
  return GemmError{diff / ref, false};
}

inline GemmError gemm_relative_error(const Tensor& x, const Tensor& w, const Tensor& xq, const Tensor& wq) {
  if (x.cols() != w.rows()) throw ShapeError("gemm_relative_error: operands not conformable");
  return gemm_relative_error(matmul(x, w), xq, wq);
}

enum class TransformKind { original, hadamard, duquant_single, duquant_dual };

inline std::string_view to_string(TransformKind k) noexcept {
  switch (k) {
    case TransformKind::original: return "original";
    case TransformKind::hadamard: return "hadamard";
    case TransformKind::duquant_single: return "duquant-single";
    case TransformKind::duquant_dual: return "duquant-dual";
  }
  return "original";
}

inline std::optional<TransformKind> parse_transform_kind(std::string_view name) noexcept {
  if (name == "original") return TransformKind::original;
  if (name == "hadamard") return TransformKind::hadamard;
  if (name == "duquant-single") return TransformKind::duquant_single;
  if (name == "duquant-dual") return TransformKind::duquant_dual;
  return std::nullopt;
}

struct PipelineConfig {
  TransformKind transform = TransformKind::original;
  double alpha = 0.5;
  std::size_t block_size = kDefaultGroupSize;  // rotation block == quantization group
  std::size_t max_steps = 128;
  std::uint64_t seed = 0;
  bool randomize_hadamard_signs = true;
  RotationSharing sharing = RotationSharing::shared;

  friend bool operator==(const PipelineConfig&, const PipelineConfig&) = default;
};

struct PhaseTimes {
  double transform_ms = 0.0;
  double quantize_ms = 0.0;
  double metrics_ms = 0.0;
};

struct PipelineReport {
  PipelineConfig config;
  GroupErrorStats activation_stats;
  GroupErrorStats weight_stats;
  double gemm_relative_error = 0.0;
  bool gemm_error_absolute = false;
  TransformTrace trace;
  PhaseTimes wall_time_ms;  // informational only
};

// Deterministic part of a report: everything except wall times.
inline bool same_results(const PipelineReport& a, const PipelineReport& b) {
  return a.config == b.config && a.activation_stats == b.activation_stats && a.weight_stats == b.weight_stats &&
         a.gemm_relative_error == b.gemm_relative_error && a.gemm_error_absolute == b.gemm_error_absolute &&
         a.trace == b.trace;
}

inline TransformedOperands apply_transform(const Tensor& x, const Tensor& w, const PipelineConfig& cfg) {
  check_pair(x, w, cfg.block_size);
  switch (cfg.transform) {
    case TransformKind::original:
      return TransformedOperands{x, w, {}, {}};
    case TransformKind::hadamard: {
      const auto r = BlockRotation::uniform(hadamard_rotation(cfg.block_size, cfg.seed, cfg.randomize_hadamard_signs));
      return apply_rotation_pair(x, w, r);
    }
    case TransformKind::duquant_single: {
      // Calibrate on the smoothed activation, then apply smoothing and
      // rotation to the unsmoothed operands in one rounding step each.
      const SmoothScale s = compute_smooth_scale(collect_calib_stats(x, w), cfg.alpha);
      const Tensor xs = apply_smooth(x, w, s).first;
      const BlockRotation r = build_block_rotation(xs, cfg.block_size, cfg.max_steps, cfg.seed, cfg.sharing);
      TransformedOperands out{transform_activation(x, s, r), fuse_into_weight(w, s, r), {}, {r}};
      out.trace.record_smooth();
      out.trace.record_rotation(r);
      return out;
    }
    case TransformKind::duquant_dual: {
      const SmoothScale s = compute_smooth_scale(collect_calib_stats(x, w), cfg.alpha);
      const auto [xs, ws] = apply_smooth(x, w, s);
      auto out = dual_rotation_pipeline(xs, ws, cfg.block_size, cfg.max_steps, cfg.seed, cfg.sharing);
      out.trace.ops.insert(out.trace.ops.begin(), "smooth");
      ++out.trace.smooth_applications;
      return out;
    }
  }
  throw ArgumentError("unknown transform");
}

// Runs one pipeline. reference, when given, must be X * W in double.
inline PipelineReport run_pipeline(const Tensor& x, const Tensor& w, const PipelineConfig& cfg,
                                   const Matrix* reference = nullptr) {
  using clock = std::chrono::steady_clock;
  const auto ms = [](clock::duration d) { return std::chrono::duration<double, std::milli>(d).count(); };

  PipelineReport report;
  report.config = cfg;

  const auto t0 = clock::now();
  TransformedOperands t = apply_transform(x, w, cfg);
  report.trace = t.trace;

  const auto t1 = clock::now();
  // Weight groups run along the input-channel (reduction) axis, matching the
  // rotation blocks, so the weight is quantized as W^T.
  const Tensor xq = fake_quantize_mx(t.activation, cfg.block_size);
  const Tensor wt = t.weight.transposed();
  const Tensor wtq = fake_quantize_mx(wt, cfg.block_size);

  const auto t2 = clock::now();
  report.activation_stats = per_group_error(t.activation, xq, cfg.block_size);
  report.weight_stats = per_group_error(wt, wtq, cfg.block_size);
  const GemmError g = reference != nullptr ? gemm_relative_error(*reference, xq, wtq.transposed())
                                           : gemm_relative_error(x, w, xq, wtq.transposed());
  report.gemm_relative_error = g.value;
  report.gemm_error_absolute = g.absolute;
  const auto t3 = clock::now();

  report.wall_time_ms = PhaseTimes{ms(t1 - t0), ms(t2 - t1), ms(t3 - t2)};
  return report;
}

inline std::string format_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

inline constexpr std::string_view kSummaryCsvHeader =
    "pipeline,alpha,block_size,max_steps,seed,act_mean_err,act_max_err,wt_mean_err,wt_max_err,gemm_rel_err,"
    "rot_apply_count";

inline std::string summary_csv(const std::vector<PipelineReport>& reports) {
  std::string out(kSummaryCsvHeader);
  out += '\n';
  for (const auto& r : reports) {
    const auto& c = r.config;
    out += std::string(to_string(c.transform)) + ',' + format_real(c.alpha) + ',' + std::to_string(c.block_size) +
           ',' + std::to_string(c.max_steps) + ',' + std::to_string(c.seed) + ',' +
           format_real(r.activation_stats.mean) + ',' + format_real(r.activation_stats.max) + ',' +
           format_real(r.weight_stats.mean) + ',' + format_real(r.weight_stats.max) + ',' +
           format_real(r.gemm_relative_error) + ',' + std::to_string(r.trace.rotation_applications) + '\n';
  }
  return out;
}

struct Comparison {
  std::vector<PipelineReport> reports;
  std::string summary_csv;
};

inline Comparison compare_pipelines(const Tensor& x, const Tensor& w, const std::vector<PipelineConfig>& configs) {
  if (x.cols() != w.rows()) throw ShapeError("compare_pipelines: operands not conformable");
  const Matrix reference = matmul(x, w);
  Comparison c;
  c.reports.reserve(configs.size());
  for (const auto& cfg : configs) c.reports.push_back(run_pipeline(x, w, cfg, &reference));
  c.summary_csv = summary_csv(c.reports);
  return c;
}

}  // namespace mxrot
