// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <sstream>

#include "mxrot/analysis.hpp"
#include "mxrot/serialize.hpp"
#include "oracles.hpp"
#include "test_helpers.hpp"

using namespace mxrot;

TEST(GroupError, IdentityReconstructionIsZero) {
  const Tensor x = testutil::random_tensor(2, 64, 1);
  const auto s = per_group_error(x, x);
  EXPECT_EQ(s.num_groups, 4u);
  EXPECT_EQ(s.mean, 0.0);
  EXPECT_EQ(s.max, 0.0);
}

TEST(GroupError, UnitCase) {
  std::vector<float> o(32, 0.0f), r(32, 0.0f);
  o[0] = 1.0f;
  const auto s = per_group_error(Tensor(1, 32, o), Tensor(1, 32, r));
  EXPECT_DOUBLE_EQ(s.mean, 1.0);
}

TEST(GroupError, ZeroGroupsAreExcluded) {
  std::vector<float> o(64, 0.0f), r(64, 0.0f);
  o[40] = 2.0f;
  r[40] = 1.0f;
  r[3] = 5.0f;  // error inside a zero group does not count
  const auto s = per_group_error(Tensor(1, 64, o), Tensor(1, 64, r));
  EXPECT_EQ(s.included_groups, 1u);
  EXPECT_DOUBLE_EQ(s.mean, 0.5);
  EXPECT_EQ(s.per_group[0], 0.0);
}

TEST(GroupError, MatchesLoopOracle) {
  const Tensor x = testutil::random_tensor(8, 128, 2, 3.0);
  const Tensor q = fake_quantize_mx(x);
  const auto s = per_group_error(x, q);
  EXPECT_NEAR(s.mean, oracle::mean_group_error(x.values(), q.values(), 32), 1e-7);
  EXPECT_THROW(per_group_error(x, Tensor(8, 64)), ShapeError);
  EXPECT_THROW(per_group_error(x, q, 48), ShapeError);
}

TEST(GemmError, WorkedCases) {
  const Tensor x = testutil::random_tensor(4, 32, 3);
  const Tensor w = testutil::random_tensor(32, 4, 4);
  EXPECT_EQ(gemm_relative_error(x, w, x, w).value, 0.0);
  std::vector<float> w2 = w.values();
  for (auto& v : w2) v *= 2.0f;
  EXPECT_NEAR(gemm_relative_error(x, w, x, Tensor(32, 4, w2)).value, 1.0, 1e-12);

  const Tensor xq = fake_quantize_mx(x);
  const Tensor wq = fake_quantize_mx(w.transposed()).transposed();
  const auto ref = oracle::matmul(oracle::to_double(x.values()), oracle::to_double(w.values()), 4, 32, 4);
  const auto got = oracle::matmul(oracle::to_double(xq.values()), oracle::to_double(wq.values()), 4, 32, 4);
  EXPECT_NEAR(gemm_relative_error(x, w, xq, wq).value, oracle::frob_rel(got, ref), 1e-6);

  const auto zero = gemm_relative_error(Tensor(4, 32), w, x, w);
  EXPECT_TRUE(zero.absolute);
  EXPECT_GT(zero.value, 0.0);
}

TEST(RunPipeline, RepresentableInputsAreExact) {
  // Every value is an FP4 grid point times a power-of-two group scale.
  std::vector<float> xv(2 * 64), wv(64 * 2);
  for (std::size_t i = 0; i < xv.size(); ++i) xv[i] = static_cast<float>(kFp4Magnitudes[i % 8]) * ((i % 3) ? 1.0f : -1.0f);
  for (std::size_t i = 0; i < wv.size(); ++i) wv[i] = 0.5f;
  const auto rep = run_pipeline(Tensor(2, 64, xv), Tensor(64, 2, wv), PipelineConfig{});
  EXPECT_EQ(rep.activation_stats.mean, 0.0);
  EXPECT_EQ(rep.weight_stats.mean, 0.0);
  EXPECT_EQ(rep.gemm_relative_error, 0.0);
}

TEST(RunPipeline, Deterministic) {
  const Tensor x = testutil::random_tensor(8, 64, 5, 2.0);
  const Tensor w = testutil::random_tensor(64, 8, 6);
  for (auto kind : {TransformKind::original, TransformKind::hadamard, TransformKind::duquant_single,
                    TransformKind::duquant_dual}) {
    PipelineConfig cfg;
    cfg.transform = kind;
    cfg.seed = 17;
    EXPECT_TRUE(same_results(run_pipeline(x, w, cfg), run_pipeline(x, w, cfg))) << to_string(kind);
  }
}

TEST(Compare, CsvHasOneRowPerConfig) {
  const Tensor x = testutil::random_tensor(4, 64, 7);
  const Tensor w = testutil::random_tensor(64, 4, 8);
  std::vector<PipelineConfig> cfgs(3);
  cfgs[1].transform = TransformKind::hadamard;
  cfgs[2].transform = TransformKind::hadamard;  // duplicates stay separate rows
  const auto c = compare_pipelines(x, w, cfgs);
  std::istringstream in(c.summary_csv);
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(in, line)) lines.push_back(line);
  ASSERT_EQ(lines.size(), 4u);
  EXPECT_EQ(lines[0], kSummaryCsvHeader);
  EXPECT_EQ(lines[2], lines[3]);
  EXPECT_EQ(lines[1].substr(0, 9), "original,");
}

TEST(Analysis, OrthogonalTransformOfIidGroupIsNoHelp) {
  // Rotating a block of iid Gaussians yields iid Gaussians, so quantization
  // error stays at the same floor on average.
  const Tensor x = testutil::random_tensor(512, 32, 9);
  const double base = per_group_error(x, fake_quantize_mx(x)).mean;
  const Tensor y = apply_block_rotation(x, hadamard_rotation(32, 3, true), RotationSide::activation);
  const double rotated = per_group_error(y, fake_quantize_mx(y)).mean;
  EXPECT_NEAR(rotated / base, 1.0, 0.05);
}

TEST(Analysis, ParseAndJson) {
  EXPECT_EQ(parse_transform_kind("duquant-dual"), TransformKind::duquant_dual);
  EXPECT_FALSE(parse_transform_kind("dual"));
  const Tensor x = testutil::random_tensor(2, 32, 1);
  const Tensor w = testutil::random_tensor(32, 2, 2);
  const auto rep = run_pipeline(x, w, PipelineConfig{});
  const Json j = to_json(rep);
  EXPECT_FALSE(j.contains("wall_time_ms"));
  EXPECT_TRUE(to_json(rep, ReportJsonOptions{true, true}).contains("wall_time_ms"));
}
