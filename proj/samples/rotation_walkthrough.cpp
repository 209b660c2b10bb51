// SPDX-License-Identifier: Apache-2.0
//
// One 32-wide block with a single large outlier: shows how the greedy search
// flattens it and what that does to the MXFP4 error of the block.
#include <cstdio>

#include "mxrot/mxrot.hpp"

int main() {
  using namespace mxrot;

  Rng rng(3);
  std::vector<float> v(32);
  for (auto& e : v) e = static_cast<float>(rng.normal());
  v[11] = 40.0f;
  const Tensor block(1, 32, v);

  GreedySearchTrace trace;
  const Rotation r = build_outlier_aware_rotation(block, 32, 16, 5, &trace);
  std::printf("peak before: %.4f\n", trace.peaks.front());
  for (std::size_t k = 1; k < trace.peaks.size(); ++k) std::printf("  step %2zu peak %.4f\n", k, trace.peaks[k]);
  std::printf("kept %zu step(s)\n", r.steps_used);

  const Tensor rotated = apply_block_rotation(block, r, RotationSide::activation);
  const double before = per_group_error(block, fake_quantize_mx(block)).mean;
  const double after = per_group_error(rotated, fake_quantize_mx(rotated)).mean;
  std::printf("mxfp4 group error: %.4f -> %.4f\n", before, after);
  return 0;
}
