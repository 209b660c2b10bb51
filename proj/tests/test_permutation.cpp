// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mxrot/permutation.hpp"
#include "mxrot/serialize.hpp"
#include "oracles.hpp"
#include "test_helpers.hpp"

using namespace mxrot;

TEST(Zigzag, SmallWorkedExample) {
  // Sorted ranks 0..3 go to blocks 0, 1, 1, 0.
  const Permutation p = zigzag_permutation({10.0f, 7.0f, 5.0f, 1.0f}, 2);
  EXPECT_EQ(p.mapping(), (std::vector<std::size_t>{0, 3, 1, 2}));
}

TEST(Zigzag, BlockSizeOneSortsDescending) {
  const std::vector<float> a{0.5f, 3.0f, 2.0f, 3.0f, 1.0f};
  const Permutation p = zigzag_permutation(a, 1);
  EXPECT_EQ(p.mapping(), (std::vector<std::size_t>{1, 3, 2, 4, 0}));
}

TEST(Zigzag, BalancesBlockMaxima) {
  const Tensor t = testutil::random_tensor(1, 256, 4, 1.0);
  std::vector<float> a(t.data().begin(), t.data().end());
  for (auto& v : a) v = std::fabs(v);
  const Permutation p = zigzag_permutation(a, 32);
  // The eight largest channels land in eight different blocks.
  std::vector<std::size_t> order(a.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](auto i, auto j) { return a[i] > a[j]; });
  const Permutation inv = p.inverse();
  std::vector<bool> used(8, false);
  for (std::size_t k = 0; k < 8; ++k) {
    const std::size_t block = inv[order[k]] / 32;
    EXPECT_FALSE(used[block]);
    used[block] = true;
  }
}

TEST(Permutation, RejectsNonBijection) {
  EXPECT_THROW(Permutation({0, 0, 1}), ArgumentError);
  EXPECT_THROW(Permutation({0, 3}), ArgumentError);
  EXPECT_THROW(zigzag_permutation({1.0f, 2.0f, 3.0f}, 2), ShapeError);
}

TEST(Permutation, InverseRoundTrip) {
  const Permutation p({2, 0, 3, 1});
  const Tensor x = testutil::random_tensor(3, 4, 1);
  EXPECT_TRUE(bitwise_equal(permute_columns(permute_columns(x, p), p.inverse()), x));
  const Tensor w = testutil::random_tensor(4, 3, 2);
  EXPECT_TRUE(bitwise_equal(permute_rows(permute_rows(w, p), p.inverse()), w));
  EXPECT_TRUE(Permutation::identity(5).is_identity());
  EXPECT_FALSE(p.is_identity());
}

TEST(Permutation, MatchesDenseMatrixAndPreservesProduct) {
  const Permutation p({2, 0, 3, 1});
  const Tensor x = testutil::random_tensor(2, 4, 5);
  const Tensor w = testutil::random_tensor(4, 2, 6);
  const auto pm = oracle::permutation_matrix(p.mapping());
  const auto want = oracle::matmul(oracle::to_double(x.values()), pm, 2, 4, 4);
  const Tensor got = permute_columns(x, p);
  for (std::size_t i = 0; i < want.size(); ++i) EXPECT_EQ(got.data()[i], want[i]);

  const auto ref = oracle::matmul(oracle::to_double(x.values()), oracle::to_double(w.values()), 2, 4, 2);
  const auto prod = oracle::matmul(oracle::to_double(got.values()),
                                   oracle::to_double(permute_rows(w, p).values()), 2, 4, 2);
  EXPECT_LE(oracle::frob_rel(prod, ref), 1e-12);
}

TEST(Permutation, JsonRoundTrip) {
  const Permutation p = zigzag_permutation({3.0f, 1.0f, 4.0f, 1.0f, 5.0f, 9.0f}, 3);
  EXPECT_EQ(permutation_from_json(Json::parse(to_json(p).dump())), p);
  EXPECT_THROW(permutation_from_json(Json{{"mapping", {0, 0}}}), FormatError);
  EXPECT_THROW(permutation_from_json(Json{{"order", {0}}}), FormatError);
}
