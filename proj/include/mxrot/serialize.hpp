// SPDX-License-Identifier: Apache-2.0
#pragma once

// JSON forms of rotations, permutations and pipeline reports.
//
// Rotation:    {"block_size", "provenance", "seed", "steps_used", "matrix": [row-major reals]}
// Permutation: {"mapping": [indices]}
// Report:      see README.md, "Report JSON".

#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "mxrot/analysis.hpp"
#include "mxrot/error.hpp"
#include "mxrot/permutation.hpp"
#include "mxrot/rotation.hpp"

namespace mxrot {

using Json = nlohmann::json;

inline Json to_json(const Rotation& r) {
  return Json{{"block_size", r.block_size},
              {"provenance", std::string(to_string(r.provenance))},
              {"seed", r.seed},
              {"steps_used", r.steps_used},
              {"matrix", std::vector<double>(r.matrix.data().begin(), r.matrix.data().end())}};
}

inline Rotation rotation_from_json(const Json& j) {
  try {
    Rotation r;
    r.block_size = j.at("block_size").get<std::size_t>();
    const auto kind = parse_rotation_kind(j.at("provenance").get<std::string>());
    if (!kind) throw FormatError("rotation JSON: unknown provenance");
    r.provenance = *kind;
    r.seed = j.at("seed").get<std::uint64_t>();
    r.steps_used = j.at("steps_used").get<std::size_t>();
    auto values = j.at("matrix").get<std::vector<double>>();
    if (values.size() != r.block_size * r.block_size) throw FormatError("rotation JSON: matrix is not B x B");
    r.matrix = Matrix(r.block_size, r.block_size, std::move(values));
    return r;
  } catch (const Json::exception& e) {
    throw FormatError(std::string("rotation JSON: ") + e.what());
  }
}

inline Json to_json(const Permutation& p) { return Json{{"mapping", p.mapping()}}; }

inline Permutation permutation_from_json(const Json& j) {
  try {
    return Permutation(j.at("mapping").get<std::vector<std::size_t>>());
  } catch (const Json::exception& e) {
    throw FormatError(std::string("permutation JSON: ") + e.what());
  } catch (const ArgumentError& e) {
    throw FormatError(std::string("permutation JSON: ") + e.what());
  }
}

inline Json to_json(const PipelineConfig& c) {
  return Json{{"pipeline", std::string(to_string(c.transform))},
              {"alpha", c.alpha},
              {"block_size", c.block_size},
              {"max_steps", c.max_steps},
              {"seed", c.seed},
              {"randomize_hadamard_signs", c.randomize_hadamard_signs},
              {"rotation_sharing", c.sharing == RotationSharing::shared ? "shared" : "per-block"}};
}

inline Json to_json(const GroupErrorStats& s, bool include_per_group) {
  Json j{{"num_groups", s.num_groups}, {"included_groups", s.included_groups}, {"mean", s.mean}, {"max", s.max}};
  if (include_per_group) j["per_group"] = s.per_group;
  return j;
}

struct ReportJsonOptions {
  bool include_timing = false;  // wall times vary run to run
  bool include_per_group = true;
};

inline Json to_json(const PipelineReport& r, ReportJsonOptions opts = {}) {
  Json j{{"config", to_json(r.config)},
         {"activation_error", to_json(r.activation_stats, opts.include_per_group)},
         {"weight_error", to_json(r.weight_stats, opts.include_per_group)},
         {"gemm_relative_error", r.gemm_relative_error},
         {"gemm_error_is_absolute", r.gemm_error_absolute},
         {"trace",
          {{"ops", r.trace.ops},
           {"smooth_applications", r.trace.smooth_applications},
           {"rotation_applications_per_group", r.trace.rotation_applications},
           {"permutation_applications", r.trace.permutation_applications},
           {"rotation_steps_used", r.trace.steps_used}}}};
  if (opts.include_timing) {
    j["wall_time_ms"] = {{"transform", r.wall_time_ms.transform_ms},
                         {"quantize", r.wall_time_ms.quantize_ms},
                         {"metrics", r.wall_time_ms.metrics_ms}};
  }
  return j;
}

inline void save_json(const Json& j, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << j.dump(2) << '\n';
  if (!out) throw IoError("write failure on " + path.string());
}

inline Json load_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string() + " for reading");
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

}  // namespace mxrot
