// SPDX-License-Identifier: Apache-2.0
#pragma once

// Command-line front end. Kept in a header so tests can drive it in-process.
//
// Exit codes: 0 success, 1 domain/shape/argument errors, 2 I/O, format and
// command-line parse errors. stdout carries only results; diagnostics go to
// stderr.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mxrot/mxrot.hpp"

namespace mxrot::cli {

// Raised for flag combinations CLI11 cannot express; maps to exit code 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline bool starts_with_magic(const std::filesystem::path& path, std::string_view magic) {
  std::ifstream in(path, std::ios::binary);
  std::string head(magic.size(), '\0');
  in.read(head.data(), static_cast<std::streamsize>(head.size()));
  return in.gcount() == static_cast<std::streamsize>(magic.size()) && head == magic;
}

// MXTEN1, CSV, or an MXQ4 file (dequantized on load).
inline Tensor load_any_tensor(const std::filesystem::path& path) {
  if (starts_with_magic(path, kMxq4Magic)) return dequantize_tensor_mx(load_mxq4(path));
  return load_tensor_any(path);
}

inline std::string stats_line(const GroupErrorStats& s) {
  return "groups=" + std::to_string(s.num_groups) + " mean_err=" + format_real(s.mean) +
         " max_err=" + format_real(s.max);
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw IoError("write failure on " + path.string());
}

inline std::vector<std::string> split_list(const std::string& list) {
  std::vector<std::string> items;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) items.push_back(item);
  }
  return items;
}

}  // namespace detail

struct GenOptions {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::uint64_t seed = 0;
  double normal_fraction = 0.0;
  double normal_mag = 1.0;
  std::size_t massive_count = 0;
  double massive_mag = 1.0;
  std::string dist = "normal";
  std::string output;
};

struct QuantizeOptions {
  std::string input;
  std::string output;
  std::size_t group_size = kDefaultGroupSize;
};

struct RotateOptions {
  std::string input;
  std::string output;
  std::string kind;
  std::string calib;
  std::string rotation_in;
  std::string emit_rotation;
  std::size_t max_steps = 128;
  std::size_t block_size = kDefaultGroupSize;
  std::uint64_t seed = 0;
  bool no_signs = false;
  bool inverse = false;
};

struct AnalyzeOptions {
  std::string orig;
  std::string recon;
  std::size_t group_size = kDefaultGroupSize;
};

struct CompareOptions {
  std::string act;
  std::string weight;
  std::string pipelines;
  double alpha = 0.5;
  std::uint64_t seed = 0;
  std::size_t max_steps = 128;
  std::size_t group_size = kDefaultGroupSize;
  bool no_signs = false;
  bool per_block = false;
  std::string output;
  std::string json;
  bool with_timing = false;
};

inline void cmd_gen(const GenOptions& o, std::ostream& out) {
  OutlierSpec spec;
  spec.normal_fraction = o.normal_fraction;
  spec.normal_magnitude = o.normal_mag;
  spec.massive_count = o.massive_count;
  spec.massive_magnitude = o.massive_mag;
  spec.base = o.dist == "uniform" ? BaseDistribution::uniform_symmetric : BaseDistribution::standard_normal;
  spec.seed = o.seed;
  InjectionRecord record;
  const Tensor t = generate_tensor(o.rows, o.cols, spec, &record);
  save_tensor(t, o.output);
  std::string cols;
  for (std::size_t c : record.normal_columns) cols += (cols.empty() ? "" : ";") + std::to_string(c);
  out << "rows=" << t.rows() << " cols=" << t.cols() << " seed=" << o.seed
      << " normal_outlier_cols=" << record.normal_columns.size() << " massive_cells=" << record.massive_cells.size()
      << " normal_cols=" << (cols.empty() ? "-" : cols) << '\n';
}

inline void cmd_quantize(const QuantizeOptions& o, std::ostream& out) {
  const Tensor t = detail::load_any_tensor(o.input);
  const MxQuantizedTensor q = quantize_tensor_mx(t, o.group_size);
  save_mxq4(q, o.output);
  out << detail::stats_line(per_group_error(t, dequantize_tensor_mx(q), o.group_size)) << '\n';
}

inline void cmd_dequantize(const QuantizeOptions& o, std::ostream& out) {
  const MxQuantizedTensor q = load_mxq4(o.input);
  const Tensor t = dequantize_tensor_mx(q);
  save_tensor(t, o.output);
  out << "rows=" << t.rows() << " cols=" << t.cols() << " groups=" << q.num_groups() << '\n';
}

inline void cmd_rotate(const RotateOptions& o, std::ostream& out) {
  const Tensor x = detail::load_any_tensor(o.input);
  Rotation r;
  if (!o.rotation_in.empty()) {
    r = rotation_from_json(load_json(o.rotation_in));
    if (orthogonality_error(r.matrix) > 1e-5) throw DomainError("loaded rotation is not orthogonal");
  } else if (o.kind.empty()) {
    throw UsageError("rotate needs --kind or --rotation");
  } else if (o.kind == "hadamard") {
    r = hadamard_rotation(o.block_size, o.seed, !o.no_signs);
  } else {
    if (o.calib.empty()) throw UsageError("--kind outlier-aware requires --calib PATH");
    const Tensor calib = detail::load_any_tensor(o.calib);
    const std::size_t ref = select_reference_block(calib, o.block_size);
    r = build_outlier_aware_rotation(calib.column_slice(ref * o.block_size, o.block_size), o.block_size,
                                     o.max_steps, o.seed);
  }
  if (!o.emit_rotation.empty()) save_json(to_json(r), o.emit_rotation);
  const Tensor y = apply_block_rotation(x, o.inverse ? r.transposed() : r, RotationSide::activation);
  save_tensor(y, o.output);
  out << "kind=" << to_string(r.provenance) << " block_size=" << r.block_size << " steps_used=" << r.steps_used
      << " inverse=" << (o.inverse ? 1 : 0) << '\n';
}

inline void cmd_analyze(const AnalyzeOptions& o, std::ostream& out) {
  const Tensor a = detail::load_any_tensor(o.orig);
  const Tensor b = detail::load_any_tensor(o.recon);
  out << detail::stats_line(per_group_error(a, b, o.group_size)) << '\n';
}

inline void cmd_compare(const CompareOptions& o, std::ostream& out) {
  std::vector<PipelineConfig> configs;
  for (const auto& name : detail::split_list(o.pipelines)) {
    const auto kind = parse_transform_kind(name);
    if (!kind) throw UsageError("unknown pipeline '" + name + "'");
    PipelineConfig c;
    c.transform = *kind;
    c.alpha = o.alpha;
    c.block_size = o.group_size;
    c.max_steps = o.max_steps;
    c.seed = o.seed;
    c.randomize_hadamard_signs = !o.no_signs;
    c.sharing = o.per_block ? RotationSharing::per_block : RotationSharing::shared;
    configs.push_back(c);
  }
  if (configs.empty()) throw UsageError("--pipelines names no pipeline");
  const Tensor x = detail::load_any_tensor(o.act);
  const Tensor w = detail::load_any_tensor(o.weight);
  const Comparison cmp = compare_pipelines(x, w, configs);
  if (!o.json.empty()) {
    Json reports = Json::array();
    for (const auto& r : cmp.reports) reports.push_back(to_json(r, ReportJsonOptions{o.with_timing, true}));
    save_json(Json{{"reports", reports}}, o.json);
  }
  if (o.output.empty()) {
    out << cmp.summary_csv;
  } else {
    detail::write_text(o.output, cmp.summary_csv);
  }
}

inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"MXFP4 quantization with outlier-aware block rotations"};
  app.name("mxrot");
  app.require_subcommand(1);

  GenOptions gen;
  auto* g = app.add_subcommand("gen", "Generate a synthetic activation tensor with injected outliers");
  g->add_option("--rows", gen.rows, "Token count")->required();
  g->add_option("--cols", gen.cols, "Channel count")->required();
  g->add_option("--seed", gen.seed, "Generator seed (xoshiro256**)")->required();
  g->add_option("--normal-fraction", gen.normal_fraction, "Share of channels scaled across all tokens")
      ->capture_default_str();
  g->add_option("--normal-mag", gen.normal_mag, "Scale applied to normal-outlier channels")->capture_default_str();
  g->add_option("--massive-count", gen.massive_count, "Number of isolated cells to scale")->capture_default_str();
  g->add_option("--massive-mag", gen.massive_mag, "Scale applied to massive-outlier cells")->capture_default_str();
  g->add_option("--dist", gen.dist, "Base distribution")
      ->check(CLI::IsMember({"normal", "uniform"}))
      ->capture_default_str();
  g->add_option("-o,--output", gen.output, "Output MXTEN1 path")->required();

  QuantizeOptions quant;
  auto* q = app.add_subcommand("quantize", "MXFP4-quantize a tensor into an MXQ4 file");
  q->add_option("-i,--input", quant.input, "Input MXTEN1 or .csv path")->required();
  q->add_option("-o,--output", quant.output, "Output MXQ4 path")->required();
  q->add_option("--group-size", quant.group_size, "Elements sharing one E8M0 scale")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  QuantizeOptions dequant;
  auto* d = app.add_subcommand("dequantize", "Expand an MXQ4 file back to MXTEN1");
  d->add_option("-i,--input", dequant.input, "Input MXQ4 path")->required();
  d->add_option("-o,--output", dequant.output, "Output MXTEN1 path")->required();

  RotateOptions rot;
  auto* r = app.add_subcommand("rotate", "Apply a block-diagonal rotation to every row of a tensor");
  r->add_option("-i,--input", rot.input, "Input tensor path")->required();
  r->add_option("-o,--output", rot.output, "Output MXTEN1 path")->required();
  r->add_option("--kind", rot.kind, "Rotation family (not needed with --rotation)")
      ->check(CLI::IsMember({"hadamard", "outlier-aware"}));
  r->add_option("--calib", rot.calib, "Calibration tensor for outlier-aware rotations");
  r->add_option("--rotation", rot.rotation_in, "Reuse a rotation JSON instead of building one");
  r->add_option("--max-steps", rot.max_steps, "Greedy search step budget")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  r->add_option("--group-size", rot.block_size, "Rotation block size (equal to the quantization group)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  r->add_option("--seed", rot.seed, "Seed for random signs or orthonormal completion")->capture_default_str();
  r->add_flag("--no-signs", rot.no_signs, "Plain Sylvester Hadamard without random signs");
  r->add_flag("--inverse", rot.inverse, "Apply the transpose (inverse) rotation");
  r->add_option("--emit-rotation", rot.emit_rotation, "Write the rotation as JSON");

  AnalyzeOptions an;
  auto* a = app.add_subcommand("analyze", "Per-group normalized error between two tensors");
  a->add_option("--orig", an.orig, "Reference tensor")->required();
  a->add_option("--recon", an.recon, "Reconstructed tensor (MXTEN1, CSV or MXQ4)")->required();
  a->add_option("--group-size", an.group_size, "Group length")->check(CLI::PositiveNumber)->capture_default_str();

  CompareOptions cmp;
  auto* c = app.add_subcommand("compare", "Run transform pipelines and emit a CSV error summary");
  c->add_option("--act", cmp.act, "Activation tensor (tokens x channels)")->required();
  c->add_option("--weight", cmp.weight, "Weight tensor (channels x outputs)")->required();
  c->add_option("--pipelines", cmp.pipelines, "Comma list of original,hadamard,duquant-single,duquant-dual")
      ->required();
  c->add_option("--alpha", cmp.alpha, "Smoothing migration strength")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  c->add_option("--seed", cmp.seed, "Seed for every randomized construction")->capture_default_str();
  c->add_option("--max-steps", cmp.max_steps, "Greedy search step budget")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  c->add_option("--group-size", cmp.group_size, "Quantization group and rotation block size")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  c->add_flag("--no-signs", cmp.no_signs, "Hadamard pipeline without random signs");
  c->add_flag("--per-block", cmp.per_block, "Calibrate one rotation per block instead of a shared one");
  c->add_option("-o,--output", cmp.output, "Write the CSV here instead of stdout");
  c->add_option("--json", cmp.json, "Write full per-pipeline reports as JSON");
  c->add_flag("--with-timing", cmp.with_timing, "Include wall times in the JSON reports");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (g->parsed()) cmd_gen(gen, out);
    if (q->parsed()) cmd_quantize(quant, out);
    if (d->parsed()) cmd_dequantize(dequant, out);
    if (r->parsed()) cmd_rotate(rot, out);
    if (a->parsed()) cmd_analyze(an, out);
    if (c->parsed()) cmd_compare(cmp, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const IoError& e) {
    err << "i/o error: " << e.what() << '\n';
    return 2;
  } catch (const FormatError& e) {
    err << "format error: " << e.what() << '\n';
    return 2;
  } catch (const TruncationError& e) {
    err << "format error: " << e.what() << '\n';
    return 2;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv;
  argv.reserve(args.size() + 1);
  argv.push_back("mxrot");
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace mxrot::cli
