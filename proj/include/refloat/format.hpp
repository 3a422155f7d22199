#pragma once
//
// refloat(b,e,f)(e_v,f_v): block floating point for crossbar-sized matrix
// blocks. A block shares one exponent base; each element keeps a sign, an
// e-bit signed offset from the base (saturating) and the leading f bits of
// its binary64 fraction (truncated, never rounded).
//

#include <bit>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>

namespace refloat {

struct ReFloatConfig {
  int block_bits = 7;  // block side is 2^block_bits
  int mat_exp = 3;     // offset bits for matrix elements
  int mat_frac = 3;    // fraction bits for matrix elements
  int vec_exp = 3;     // offset bits for vector elements
  int vec_frac = 8;    // fraction bits for vector elements

  int block_size() const { return 1 << block_bits; }

  void validate() const {
    if (block_bits < 1 || block_bits > 12)
      throw std::invalid_argument("block_bits must be in [1,12]");
    if (mat_exp < 1 || mat_exp > 11 || vec_exp < 1 || vec_exp > 11)
      throw std::invalid_argument("exponent offset bits must be in [1,11]");
    if (mat_frac < 0 || mat_frac > 52 || vec_frac < 0 || vec_frac > 52)
      throw std::invalid_argument("fraction bits must be in [0,52]");
  }

  // Wide enough to reproduce any normal binary64 input bit-exactly.
  static ReFloatConfig lossless(int block_bits = 7) {
    return ReFloatConfig{block_bits, 11, 52, 11, 52};
  }

  bool operator==(const ReFloatConfig&) const = default;
};

struct QuantizedScalar {
  bool negative = false;
  bool is_zero = true;
  int offset = 0;         // signed deviation from the block/segment base
  std::uint64_t fraction = 0;  // leading frac-bits of the binary64 fraction field

  bool operator==(const QuantizedScalar&) const = default;
};

// Largest representable offset magnitude: window is [-(2^(bits-1)-1), 2^(bits-1)-1].
inline int offset_window(int exp_bits) { return (1 << (exp_bits - 1)) - 1; }

namespace detail {

struct Decomposed {
  bool negative;
  int exponent;            // unbiased; subnormals use their effective exponent
  std::uint64_t frac52;    // 52-bit fraction field of the normalized value
};

inline Decomposed decompose(double value) {
  const std::uint64_t bits = std::bit_cast<std::uint64_t>(value);
  const bool neg = (bits >> 63) != 0;
  const int field = static_cast<int>((bits >> 52) & 0x7ff);
  if (field >= 1 && field <= 2046)
    return {neg, field - 1023, bits & 0xfffffffffffffULL};
  // Subnormal: renormalize so the hidden bit is explicit again.
  int exp2 = 0;
  const double m = std::frexp(std::fabs(value), &exp2);  // m in [0.5,1)
  const double scaled = (m * 2.0 - 1.0) * 4503599627370496.0;  // exact * 2^52
  return {neg, exp2 - 1, static_cast<std::uint64_t>(scaled)};
}

}  // namespace detail

// Argmin over integer bases of sum((a_e - e_b)^2): the rounded mean,
// ties rounding half away from zero.
inline int optimal_exponent_base(std::span<const int> exponents) {
  if (exponents.empty())
    throw std::invalid_argument("optimal_exponent_base: empty exponent list");
  long long sum = 0;
  for (int e : exponents) sum += e;
  // The double quotient is correctly rounded and can only equal x.5 when the
  // exact quotient is x.5, so llround realizes half-away-from-zero exactly.
  return static_cast<int>(std::llround(static_cast<double>(sum) /
                                       static_cast<double>(exponents.size())));
}

inline std::uint64_t block_loss(std::span<const int> exponents, int base) {
  if (exponents.empty())
    throw std::invalid_argument("block_loss: empty exponent list");
  std::uint64_t loss = 0;
  for (int e : exponents) {
    const long long d = static_cast<long long>(e) - base;
    loss += static_cast<std::uint64_t>(d * d);
  }
  return loss;
}

// Saturating conversion of one binary64 value against an exponent base.
// Values whose offset clamps keep their sign and truncated fraction.
inline QuantizedScalar quantize_scalar(double value, int base, int exp_bits,
                                       int frac_bits, bool* saturated = nullptr) {
  if (!std::isfinite(value))
    throw std::invalid_argument("quantize_scalar: value must be finite");
  if (exp_bits < 1)
    throw std::invalid_argument("quantize_scalar: exp_bits must be >= 1");
  QuantizedScalar q;
  if (value == 0.0) return q;

  const auto d = detail::decompose(value);
  const int window = offset_window(exp_bits);
  int offset = d.exponent - base;
  if (offset > window || offset < -window) {
    offset = offset > window ? window : -window;
    if (saturated) *saturated = true;
  }
  q.negative = d.negative;
  q.is_zero = false;
  q.offset = offset;
  q.fraction = frac_bits == 0 ? 0 : (d.frac52 >> (52 - frac_bits));
  return q;
}

// (-1)^sign * (1 + fraction/2^f) * 2^(base + offset); zero flag maps to +0.
inline double dequantize_scalar(const QuantizedScalar& q, int base, int frac_bits) {
  if (q.is_zero) return 0.0;
  const double mantissa =
      1.0 + std::ldexp(static_cast<double>(q.fraction), -frac_bits);
  const double magnitude = std::ldexp(mantissa, base + q.offset);
  return q.negative ? -magnitude : magnitude;
}

}  // namespace refloat
