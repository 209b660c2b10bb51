// SPDX-License-Identifier: Apache-2.0
#pragma once

// MXFP4 element and scale codecs.
//
// An MXFP4 group stores one E8M0 power-of-two scale and one E2M1 code per
// element. The scale exponent is floor(log2(max|x|)) - 2: the E2M1 grid tops
// out at 6 = 1.5 * 2^2, so dividing by the scale puts max|x/s| in [4, 8).
// Elements are then rounded to the nearest grid value (ties to the even
// mantissa) and clamped to +-6.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mxrot/error.hpp"

namespace mxrot {

// Largest element exponent of E2M1; subtracted from floor(log2(absmax)).
inline constexpr int kFp4MaxExponent = 2;
inline constexpr float kFp4Max = 6.0f;
inline constexpr int kE8m0MinExponent = -127;
inline constexpr int kE8m0MaxExponent = 127;
inline constexpr std::size_t kDefaultGroupSize = 32;

// Magnitude for each 3-bit code; bit 0 of the code is the mantissa bit.
inline constexpr std::array<float, 8> kFp4Magnitudes = {0.0f, 0.5f, 1.0f, 1.5f, 2.0f, 3.0f, 4.0f, 6.0f};

// E2M1 code: bit 3 sign, bits 2..1 exponent, bit 0 mantissa.
struct Fp4Code {
  std::uint8_t bits = 0;

  constexpr std::uint8_t magnitude_index() const noexcept { return bits & 0x7; }
  constexpr bool negative() const noexcept { return (bits & 0x8) != 0; }

  // Both zero codes compare equal to 0.0f; code 0x8 decodes to -0.0f.
  constexpr float decode() const noexcept {
    const float m = kFp4Magnitudes[magnitude_index()];
    return negative() ? -m : m;
  }

  friend constexpr bool operator==(Fp4Code, Fp4Code) = default;
};

// Shared group scale 2^exponent. The all-ones NaN pattern is never produced.
struct E8m0Scale {
  std::int8_t exponent = 0;

  float value() const noexcept { return std::ldexp(1.0f, exponent); }
  constexpr std::uint8_t biased() const noexcept { return static_cast<std::uint8_t>(exponent + 127); }

  friend constexpr bool operator==(E8m0Scale, E8m0Scale) = default;
};

// Nearest E2M1 value to v. Midpoints go to the even-mantissa neighbour and
// |v| > 6 saturates. The sign bit follows signbit(v), so -0.0f stays -0.
inline Fp4Code fp4_nearest(float v) {
  if (!std::isfinite(v)) throw DomainError("fp4_nearest: non-finite input");
  static constexpr std::array<float, 7> kMidpoints = {0.25f, 0.75f, 1.25f, 1.75f, 2.5f, 3.5f, 5.0f};
  const float a = std::fabs(v);
  std::uint8_t mag = 0;
  for (std::uint8_t i = 0; i < kMidpoints.size(); ++i) {
    const auto upper = static_cast<std::uint8_t>(i + 1);
    if (a > kMidpoints[i] || (a == kMidpoints[i] && (upper & 1) == 0)) {
      mag = upper;
    } else {
      break;
    }
  }
  return Fp4Code{static_cast<std::uint8_t>(mag | (std::signbit(v) ? 0x8 : 0x0))};
}

// Scale for a group whose largest magnitude is absmax. Taking a double lets
// callers probe the saturation edge beyond binary32 range.
inline E8m0Scale scale_for_absmax(double absmax) {
  if (!std::isfinite(absmax)) throw DomainError("block scale: non-finite magnitude");
  if (absmax == 0.0) return E8m0Scale{0};
  int exp2 = 0;
  std::frexp(absmax, &exp2);  // absmax = f * 2^exp2, f in [0.5, 1)
  int e = (exp2 - 1) - kFp4MaxExponent;
  e = std::clamp(e, kE8m0MinExponent, kE8m0MaxExponent);
  return E8m0Scale{static_cast<std::int8_t>(e)};
}

inline E8m0Scale block_scale(std::span<const float> block) {
  float m = 0.0f;
  for (float v : block) {
    if (!std::isfinite(v)) throw DomainError("block scale: non-finite element");
    m = std::max(m, std::fabs(v));
  }
  return scale_for_absmax(m);
}

// Quantizes one group into codes (codes.size() == block.size()).
inline E8m0Scale quantize_block_into(std::span<const float> block, std::span<Fp4Code> codes) {
  const E8m0Scale scale = block_scale(block);
  for (std::size_t i = 0; i < block.size(); ++i) {
    codes[i] = fp4_nearest(std::ldexp(block[i], -scale.exponent));
  }
  return scale;
}

inline void dequantize_block_into(E8m0Scale scale, std::span<const Fp4Code> codes, std::span<float> out) {
  for (std::size_t i = 0; i < codes.size(); ++i) out[i] = std::ldexp(codes[i].decode(), scale.exponent);
}

struct QuantizedBlock {
  E8m0Scale scale;
  std::vector<Fp4Code> codes;
};

inline QuantizedBlock quantize_block(std::span<const float> block) {
  QuantizedBlock q{{}, std::vector<Fp4Code>(block.size())};
  q.scale = quantize_block_into(block, q.codes);
  return q;
}

inline std::vector<float> dequantize_block(E8m0Scale scale, std::span<const Fp4Code> codes) {
  std::vector<float> out(codes.size());
  dequantize_block_into(scale, codes, out);
  return out;
}

}  // namespace mxrot
