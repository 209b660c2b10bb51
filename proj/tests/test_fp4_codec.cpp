// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "mxrot/fp4.hpp"
#include "mxrot/rng.hpp"
#include "oracles.hpp"

using namespace mxrot;

TEST(Fp4Nearest, WorkedValues) {
  EXPECT_EQ(fp4_nearest(0.0f).bits, 0);
  EXPECT_EQ(fp4_nearest(0.0f).decode(), 0.0f);
  EXPECT_EQ(fp4_nearest(5.1f).decode(), 6.0f);
  EXPECT_EQ(fp4_nearest(2.5f).decode(), 2.0f);
  EXPECT_EQ(fp4_nearest(-7.3f).decode(), -6.0f);
  EXPECT_EQ(fp4_nearest(5.0f).decode(), 4.0f);
  EXPECT_EQ(fp4_nearest(0.25f).decode(), 0.0f);
  EXPECT_EQ(fp4_nearest(0.75f).decode(), 1.0f);
  EXPECT_EQ(fp4_nearest(3.5f).decode(), 4.0f);
}

TEST(Fp4Nearest, NonFiniteIsDomainError) {
  EXPECT_THROW(fp4_nearest(std::nanf("")), DomainError);
  EXPECT_THROW(fp4_nearest(INFINITY), DomainError);
}

TEST(Fp4Nearest, MatchesExhaustiveScanOracle) {
  // Dense sweep over [-8, 8] in steps of 1/64 hits every midpoint exactly.
  for (int i = -512; i <= 512; ++i) {
    const float v = static_cast<float>(i) / 64.0f;
    EXPECT_EQ(fp4_nearest(v).decode(), static_cast<float>(oracle::fp4_round(v))) << v;
  }
  Rng rng(5);
  for (int i = 0; i < 20000; ++i) {
    const auto v = static_cast<float>(rng.uniform(-9.0, 9.0));
    EXPECT_EQ(fp4_nearest(v).decode(), static_cast<float>(oracle::fp4_round(v))) << v;
  }
}

TEST(Fp4Nearest, MonotoneNonDecreasing) {
  float prev = -INFINITY;
  for (int i = -4000; i <= 4000; ++i) {
    const float d = fp4_nearest(static_cast<float>(i) * 0.0025f).decode();
    EXPECT_GE(d, prev);
    prev = d;
  }
}

TEST(Fp4Code, GridIsBijective) {
  std::set<float> positives;
  std::set<float> negatives;
  for (std::uint8_t b = 0; b < 16; ++b) {
    const Fp4Code c{b};
    const float v = c.decode();
    EXPECT_EQ(fp4_nearest(v), c) << int(b);
    (std::signbit(v) ? negatives : positives).insert(std::fabs(v));
  }
  EXPECT_EQ(positives, (std::set<float>{0, 0.5f, 1, 1.5f, 2, 3, 4, 6}));
  EXPECT_EQ(negatives, positives);
  EXPECT_EQ(Fp4Code{0x8}.decode(), 0.0f);  // -0 compares equal to 0
}

TEST(BlockScale, WorkedValues) {
  std::vector<float> block(32, 0.0f);
  block[3] = 5.0f;
  EXPECT_EQ(block_scale(block).exponent, 0);
  block[3] = 6.0f;
  EXPECT_EQ(block_scale(block).exponent, 0);
  EXPECT_EQ(block_scale(std::vector<float>(32, 0.0f)).exponent, 0);
  EXPECT_EQ(block_scale(std::vector<float>(32, 1.0f)).value(), 0.25f);
  // Saturation beyond binary32 range.
  EXPECT_EQ(scale_for_absmax(std::ldexp(1.0, 130)).exponent, 127);
  EXPECT_EQ(scale_for_absmax(std::ldexp(1.0, -200)).exponent, -127);
  EXPECT_NE(E8m0Scale{127}.biased(), 0xFF);
}

TEST(BlockScale, MatchesLog2Oracle) {
  Rng rng(17);
  for (int i = 0; i < 5000; ++i) {
    std::vector<float> block(32);
    const double mag = std::ldexp(1.0, static_cast<int>(rng.below(60)) - 30);
    for (auto& v : block) v = static_cast<float>(rng.normal() * mag);
    EXPECT_EQ(block_scale(block).exponent, oracle::scale_exponent(block));
  }
}

TEST(QuantizeBlock, OnesBlock) {
  const auto q = quantize_block(std::vector<float>(32, 1.0f));
  EXPECT_EQ(q.scale.exponent, -2);
  for (auto c : q.codes) EXPECT_EQ(c.decode(), 4.0f);
  EXPECT_EQ(dequantize_block(q.scale, q.codes), std::vector<float>(32, 1.0f));
}

TEST(QuantizeBlock, ClipsTopOctave) {
  std::vector<float> block(32, 0.0f);
  block[0] = 7.9f;
  const auto q = quantize_block(block);
  EXPECT_EQ(q.scale.exponent, 0);
  const auto rec = dequantize_block(q.scale, q.codes);
  EXPECT_EQ(rec[0], 6.0f);
  EXPECT_NEAR(std::fabs(rec[0] - block[0]), 1.9f, 1e-6f);
  EXPECT_LE(std::fabs(rec[0] - block[0]), 2.0f * q.scale.value());
}

TEST(QuantizeBlock, AllZeroRoundTrip) {
  const auto q = quantize_block(std::vector<float>(32, 0.0f));
  EXPECT_EQ(q.scale.exponent, 0);
  for (auto c : q.codes) EXPECT_EQ(c.bits, 0);
  EXPECT_EQ(dequantize_block(q.scale, q.codes), std::vector<float>(32, 0.0f));
}

TEST(DequantizeBlock, WorkedValues) {
  const std::vector<Fp4Code> six{fp4_nearest(6.0f)};
  EXPECT_EQ(dequantize_block(E8m0Scale{0}, six)[0], 6.0f);
  const std::vector<Fp4Code> four{fp4_nearest(4.0f)};
  EXPECT_EQ(dequantize_block(E8m0Scale{-2}, four)[0], 1.0f);
}

TEST(QuantizeBlock, MatchesOracleAndBounds) {
  Rng rng(23);
  for (int i = 0; i < 2000; ++i) {
    std::vector<float> block(32);
    for (auto& v : block) v = static_cast<float>(rng.normal() * std::exp(rng.uniform(-5, 5)));
    const auto q = quantize_block(block);
    const auto rec = dequantize_block(q.scale, q.codes);
    const auto want = oracle::fake_quant_block(block);
    const float s = q.scale.value();
    float peak = 0.0f;
    for (std::size_t k = 0; k < 32; ++k) {
      EXPECT_EQ(static_cast<double>(rec[k]), want[k]);
      const float err = std::fabs(rec[k] - block[k]);
      EXPECT_LE(err, 2.0f * s);
      if (std::fabs(block[k] / s) <= 6.0f) {
        EXPECT_LE(err, s);
      }
      peak = std::max(peak, std::fabs(block[k] / s));
    }
    EXPECT_GE(peak, 4.0f);
    EXPECT_LT(peak, 8.0f);
  }
}

// Values g * 2^e are fixed points when the group also holds its own maximum.
TEST(QuantizeBlock, RepresentableValuesAreFixedPoints) {
  for (int e = -10; e <= 10; ++e) {
    for (std::uint8_t b = 0; b < 16; ++b) {
      std::vector<Fp4Code> codes(32, Fp4Code{b});
      codes[31] = Fp4Code{7};  // 6.0 pins the scale
      const E8m0Scale s{static_cast<std::int8_t>(e)};
      const auto values = dequantize_block(s, codes);
      const auto q = quantize_block(values);
      EXPECT_EQ(q.scale, s);
      EXPECT_EQ(q.codes, codes);
    }
  }
}
