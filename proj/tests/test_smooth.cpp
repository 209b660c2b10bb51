// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>

#include "mxrot/smooth.hpp"
#include "oracles.hpp"
#include "test_helpers.hpp"

using namespace mxrot;

TEST(CalibStats, ColumnAndRowMaxima) {
  const Tensor x(2, 3, {1.0f, -5.0f, 0.0f, -2.0f, 4.0f, 0.0f});
  const Tensor w(3, 2, {0.5f, -1.0f, 3.0f, 2.0f, 0.0f, 0.0f});
  const CalibStats s = collect_calib_stats(x, w);
  EXPECT_EQ(s.channel_absmax, (std::vector<float>{2.0f, 5.0f, 0.0f}));
  EXPECT_EQ(s.weight_absmax, (std::vector<float>{1.0f, 3.0f, 0.0f}));
  EXPECT_THROW(collect_calib_stats(x, Tensor(2, 2)), ShapeError);
}

TEST(SmoothScale, WorkedValues) {
  const CalibStats s{{4.0f, 9.0f, 0.0f, 3.0f}, {1.0f, 4.0f, 2.0f, 0.0f}};
  const SmoothScale half = compute_smooth_scale(s, 0.5);
  EXPECT_DOUBLE_EQ(half.lambda[0], 2.0);
  EXPECT_DOUBLE_EQ(half.lambda[1], 1.5);
  EXPECT_DOUBLE_EQ(half.lambda[2], 1.0);  // silent channel
  EXPECT_DOUBLE_EQ(half.lambda[3], 1.0);  // zero weight row

  const SmoothScale all_act = compute_smooth_scale(s, 1.0);
  EXPECT_DOUBLE_EQ(all_act.lambda[0], 4.0);
  EXPECT_DOUBLE_EQ(all_act.lambda[3], 3.0);  // w^0 == 1

  const SmoothScale none = compute_smooth_scale(s, 0.0);
  EXPECT_DOUBLE_EQ(none.lambda[1], 0.25);
}

TEST(SmoothScale, RejectsBadAlpha) {
  const CalibStats s{{1.0f}, {1.0f}};
  EXPECT_THROW(compute_smooth_scale(s, -0.1), ArgumentError);
  EXPECT_THROW(compute_smooth_scale(s, 1.5), ArgumentError);
  EXPECT_THROW(compute_smooth_scale(s, std::nan("")), ArgumentError);
}

TEST(Smooth, EqualizesChannelAndWeightRanges) {
  const Tensor x(1, 2, {4.0f, 9.0f});
  const Tensor w(2, 1, {1.0f, 1.0f});
  const auto s = compute_smooth_scale(collect_calib_stats(x, w), 0.5);
  const auto [xs, ws] = apply_smooth(x, w, s);
  EXPECT_EQ(xs.values(), (std::vector<float>{2.0f, 3.0f}));
  EXPECT_EQ(ws.values(), (std::vector<float>{2.0f, 3.0f}));
}

TEST(Smooth, PreservesProduct) {
  const Tensor x = testutil::random_tensor(8, 64, 1, 4.0);
  const Tensor w = testutil::random_tensor(64, 8, 2);
  const auto s = compute_smooth_scale(collect_calib_stats(x, w), 0.5);
  const auto [xs, ws] = apply_smooth(x, w, s);
  const auto want = oracle::matmul(oracle::to_double(x.values()), oracle::to_double(w.values()), 8, 64, 8);
  const auto got = oracle::matmul(oracle::to_double(xs.values()), oracle::to_double(ws.values()), 8, 64, 8);
  EXPECT_LE(oracle::frob_rel(got, want), 1e-6);
}

TEST(FusedTransform, IsLossless) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    std::vector<float> xv = testutil::random_tensor(16, 64, seed).values();
    xv[(seed * 13) % xv.size()] = 80.0f;
    const Tensor x(16, 64, xv);
    const Tensor w = testutil::random_tensor(64, 16, seed + 50);
    const auto s = compute_smooth_scale(collect_calib_stats(x, w), 0.5);
    const auto r = build_block_rotation(apply_smooth(x, w, s).first, 32, 32, seed);
    const Tensor xt = transform_activation(x, s, r);
    const Tensor wt = fuse_into_weight(w, s, r);
    const auto want = oracle::matmul(oracle::to_double(x.values()), oracle::to_double(w.values()), 16, 64, 16);
    const auto got = oracle::matmul(oracle::to_double(xt.values()), oracle::to_double(wt.values()), 16, 64, 16);
    EXPECT_LE(oracle::frob_rel(got, want), 1e-4);
  }
}

TEST(FusedTransform, IdentityRotationMatchesPlainSmoothing) {
  const Tensor x = testutil::random_tensor(4, 32, 3, 2.0);
  const Tensor w = testutil::random_tensor(32, 4, 4);
  const auto s = compute_smooth_scale(collect_calib_stats(x, w), 0.5);
  const auto [xs, ws] = apply_smooth(x, w, s);
  const auto id = BlockRotation::uniform(Rotation::identity(32));
  EXPECT_TRUE(bitwise_equal(transform_activation(x, s, id), xs));
  EXPECT_TRUE(bitwise_equal(fuse_into_weight(w, s, id), ws));
}

TEST(FusedTransform, ShapeChecks) {
  const SmoothScale s{std::vector<double>(16, 1.0), 0.5};
  const auto id = BlockRotation::uniform(Rotation::identity(32));
  EXPECT_THROW(transform_activation(Tensor(1, 32), s, id), ShapeError);
  EXPECT_THROW(fuse_into_weight(Tensor(16, 2), s, id), ShapeError);
}
