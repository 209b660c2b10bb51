// SPDX-License-Identifier: Apache-2.0
#pragma once

// Transform pipelines applied to an (activation, weight) pair before
// quantization. Every pipeline keeps X * W unchanged in exact arithmetic.
//
//   single: X -> X * BlockDiag(R)                W -> BlockDiag(R^T) * W
//   dual:   X -> X * BlockDiag(R1) * P * BlockDiag(R2)
//           W -> BlockDiag(R2^T) * P^T * BlockDiag(R1^T) * W

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "mxrot/permutation.hpp"
#include "mxrot/rotation.hpp"
#include "mxrot/smooth.hpp"
#include "mxrot/tensor.hpp"

namespace mxrot {

// Operation log of a pipeline. rotation_applications counts block-diagonal
// multiplies on the online activation path, i.e. B x B products per group.
struct TransformTrace {
  std::vector<std::string> ops;
  std::size_t smooth_applications = 0;
  std::size_t rotation_applications = 0;
  std::size_t permutation_applications = 0;
  std::vector<std::size_t> steps_used;

  void record_smooth() {
    ops.emplace_back("smooth");
    ++smooth_applications;
  }
  void record_rotation(const BlockRotation& r) {
    ops.emplace_back("block-rotation");
    ++rotation_applications;
    for (const auto& b : r.blocks) steps_used.push_back(b.steps_used);
  }
  void record_permutation() {
    ops.emplace_back("permutation");
    ++permutation_applications;
  }

  friend bool operator==(const TransformTrace&, const TransformTrace&) = default;
};

struct TransformedOperands {
  Tensor activation;
  Tensor weight;
  TransformTrace trace;
  std::vector<BlockRotation> rotations;  // in application order
};

inline void check_pair(const Tensor& x, const Tensor& w, std::size_t block_size) {
  if (x.cols() != w.rows()) {
    throw ShapeError("activation has " + std::to_string(x.cols()) + " channels but weight has " +
                     std::to_string(w.rows()) + " rows");
  }
  if (block_size == 0 || x.cols() % block_size != 0) {
    throw ShapeError("channel count " + std::to_string(x.cols()) + " not divisible by block size " +
                     std::to_string(block_size));
  }
}

inline TransformedOperands apply_rotation_pair(const Tensor& x, const Tensor& w, const BlockRotation& r) {
  TransformedOperands out{apply_block_rotation(x, r, RotationSide::activation),
                          apply_block_rotation(w, r, RotationSide::weight),
                          {},
                          {r}};
  out.trace.record_rotation(r);
  return out;
}

inline TransformedOperands single_rotation_pipeline(const Tensor& x, const Tensor& w, std::size_t block_size,
                                                    std::size_t max_steps, std::uint64_t seed,
                                                    RotationSharing sharing = RotationSharing::shared) {
  check_pair(x, w, block_size);
  return apply_rotation_pair(x, w, build_block_rotation(x, block_size, max_steps, seed, sharing));
}

// Dual pipeline from explicit parts.
inline TransformedOperands compose_dual_rotation(const Tensor& x, const Tensor& w, const BlockRotation& first,
                                                 const Permutation& perm, const BlockRotation& second) {
  auto stage = apply_rotation_pair(x, w, first);
  Tensor xp = permute_columns(stage.activation, perm);
  Tensor wp = permute_rows(stage.weight, perm);
  stage.trace.record_permutation();
  auto last = apply_rotation_pair(xp, wp, second);
  stage.trace.record_rotation(second);
  stage.rotations.push_back(second);
  return TransformedOperands{std::move(last.activation), std::move(last.weight), std::move(stage.trace),
                             std::move(stage.rotations)};
}

// Rotation, zigzag permutation, then a second rotation calibrated on the
// rotated-and-permuted activation. The second rotation reuses max_steps.
inline TransformedOperands dual_rotation_pipeline(const Tensor& x, const Tensor& w, std::size_t block_size,
                                                  std::size_t max_steps, std::uint64_t seed,
                                                  RotationSharing sharing = RotationSharing::shared) {
  check_pair(x, w, block_size);
  const BlockRotation first = build_block_rotation(x, block_size, max_steps, seed, sharing);
  auto stage = apply_rotation_pair(x, w, first);

  const Permutation perm = zigzag_permutation(column_absmax(stage.activation), block_size);
  Tensor xp = permute_columns(stage.activation, perm);
  Tensor wp = permute_rows(stage.weight, perm);
  stage.trace.record_permutation();

  const BlockRotation second = build_block_rotation(xp, block_size, max_steps, derive_seed(seed, 2), sharing);
  auto last = apply_rotation_pair(xp, wp, second);
  stage.trace.record_rotation(second);
  stage.rotations.push_back(second);
  return TransformedOperands{std::move(last.activation), std::move(last.weight), std::move(stage.trace),
                             std::move(stage.rotations)};
}

}  // namespace mxrot
