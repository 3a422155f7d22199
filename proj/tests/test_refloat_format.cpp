#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "refloat/blocked.hpp"
#include "refloat/format.hpp"
#include "test_util.hpp"

using namespace refloat;

namespace {

// The 2x2 conversion example: values with exponents {7,8,9,7} quantized at
// base 8 with 2 offset bits and 2 fraction bits.
SparseMatrixCoo example_2x2() {
  SparseMatrixCoo m;
  m.n_rows = m.n_cols = 2;
  m.entries = {{0, 0, -248.0}, {0, 1, 336.0}, {1, 0, -512.0}, {1, 1, 136.0}};
  return m;
}

}  // namespace

TEST_CASE("optimal_exponent_base is the rounded mean") {
  REQUIRE(optimal_exponent_base(std::vector<int>{7, 8, 9, 7}) == 8);
  REQUIRE(optimal_exponent_base(std::vector<int>{5, 5, 5}) == 5);
  REQUIRE(optimal_exponent_base(std::vector<int>{-40, -40}) == -40);

  SECTION("ties round half away from zero and stay argmin") {
    REQUIRE(optimal_exponent_base(std::vector<int>{0, 1}) == 1);
    REQUIRE(block_loss(std::vector<int>{0, 1}, 0) ==
            block_loss(std::vector<int>{0, 1}, 1));
    REQUIRE(optimal_exponent_base(std::vector<int>{0, -1}) == -1);
  }
  SECTION("empty input is rejected") {
    REQUIRE_THROWS_AS(optimal_exponent_base(std::vector<int>{}), std::invalid_argument);
  }
}

TEST_CASE("block_loss is the exact squared deviation sum") {
  REQUIRE(block_loss(std::vector<int>{7, 8, 9, 7}, 8) == 3);
  REQUIRE(block_loss(std::vector<int>{13, 13, 13}, 13) == 0);
  REQUIRE(block_loss(std::vector<int>{0, 1}, 0) == 1);
  REQUIRE(block_loss(std::vector<int>{0, 1}, 1) == 1);
  REQUIRE_THROWS_AS(block_loss(std::vector<int>{}, 0), std::invalid_argument);
}

TEST_CASE("argmin property against brute force") {
  std::mt19937_64 rng(21);
  for (int round = 0; round < 1000; ++round) {
    const std::size_t len = 1 + rng() % 64;
    std::vector<int> exponents(len);
    for (auto& e : exponents) e = static_cast<int>(rng() % 41) - 20;
    const int base = optimal_exponent_base(exponents);
    REQUIRE(block_loss(exponents, base) ==
            block_loss(exponents, testutil::brute_force_base(exponents)));
  }
}

TEST_CASE("quantize_scalar worked values") {
  SECTION("-248 at base 8 with (2,2)") {
    const auto q = quantize_scalar(-248.0, 8, 2, 2);
    REQUIRE(q.negative);
    REQUIRE(q.offset == -1);
    REQUIRE(q.fraction == 0b11);
    REQUIRE(dequantize_scalar(q, 8, 2) == -224.0);
  }
  SECTION("336 at base 8 with (2,2)") {
    const auto q = quantize_scalar(336.0, 8, 2, 2);
    REQUIRE_FALSE(q.negative);
    REQUIRE(q.offset == 0);
    REQUIRE(q.fraction == 0b01);
    REQUIRE(dequantize_scalar(q, 8, 2) == 320.0);
  }
  SECTION("zero maps to the zero flag") {
    const auto q = quantize_scalar(0.0, 8, 2, 2);
    REQUIRE(q.is_zero);
    REQUIRE(dequantize_scalar(q, 8, 2) == 0.0);
  }
  SECTION("low clamp saturates instead of flushing") {
    bool saturated = false;
    const auto q = quantize_scalar(0x1.0p-20, 0, 3, 4, &saturated);
    REQUIRE(saturated);
    REQUIRE(q.offset == -3);
    REQUIRE_FALSE(q.is_zero);
    REQUIRE(dequantize_scalar(q, 0, 4) == 0.125);
  }
  SECTION("non-finite input is rejected") {
    REQUIRE_THROWS_AS(quantize_scalar(std::nan(""), 0, 3, 4), std::invalid_argument);
    REQUIRE_THROWS_AS(quantize_scalar(HUGE_VAL, 0, 3, 4), std::invalid_argument);
  }
}

TEST_CASE("subnormal inputs quantize via their effective exponent") {
  // 1.5 * 2^-1073 is subnormal; normalized it carries one fraction bit.
  const double v = 0x1.8p-1073;
  const auto q = quantize_scalar(v, -1073, 11, 52);
  REQUIRE_FALSE(q.is_zero);
  REQUIRE(q.offset == 0);
  REQUIRE(q.fraction == 0x8000000000000ull);
  REQUIRE(dequantize_scalar(q, -1073, 52) == v);

  // the smallest subnormal saturates against a base of 0 instead of flushing
  bool saturated = false;
  const auto tiny = quantize_scalar(0x1.0p-1074, 0, 3, 4, &saturated);
  REQUIRE(saturated);
  REQUIRE(tiny.offset == -3);
  REQUIRE_FALSE(tiny.is_zero);
}

TEST_CASE("dequantize_scalar worked values") {
  QuantizedScalar q{true, false, -1, 0b11};
  REQUIRE(dequantize_scalar(q, 8, 2) == -224.0);

  QuantizedScalar half_kib{false, false, 1, 0};
  REQUIRE(dequantize_scalar(half_kib, 8, 2) == 512.0);
  half_kib.negative = true;
  REQUIRE(dequantize_scalar(half_kib, 8, 2) == -512.0);
}

TEST_CASE("quantize/dequantize idempotence") {
  std::mt19937_64 rng(31);
  for (int round = 0; round < 2000; ++round) {
    const int e = 1 + static_cast<int>(rng() % 11);
    const int f = static_cast<int>(rng() % 53);
    QuantizedScalar q;
    q.is_zero = false;
    q.negative = (rng() & 1) != 0;
    const int window = offset_window(e);
    q.offset = static_cast<int>(rng() % (2 * window + 1)) - window;
    q.fraction = f == 0 ? 0 : (rng() & ((1ull << f) - 1));
    // keep base + offset inside the normal binary64 exponent range
    const int base = static_cast<int>(rng() % 1801) - 900 - q.offset;
    const double v = dequantize_scalar(q, base, f);
    REQUIRE(quantize_scalar(v, base, e, f) == q);
  }
}

TEST_CASE("lossless regime reproduces normal doubles bit-exactly") {
  std::mt19937_64 rng(41);
  for (int round = 0; round < 2000; ++round) {
    const int exponent = static_cast<int>(rng() % 1901) - 950;
    double v = std::ldexp(testutil::uniform(rng, 1.0, 2.0), exponent);
    if (rng() & 1) v = -v;
    const int base = detail::decompose(v).exponent + static_cast<int>(rng() % 41) - 20;
    const auto q = quantize_scalar(v, base, 11, 52);
    REQUIRE(dequantize_scalar(q, base, 52) == v);
  }
}

TEST_CASE("truncation error is non-increasing in the fraction width") {
  std::mt19937_64 rng(51);
  for (int round = 0; round < 500; ++round) {
    const double v = std::ldexp(testutil::uniform(rng, 1.0, 2.0),
                                static_cast<int>(rng() % 21) - 10);
    const int base = detail::decompose(v).exponent;  // keep the offset in window
    double previous = std::fabs(dequantize_scalar(quantize_scalar(v, base, 4, 0), base, 0) - v);
    for (int f = 1; f <= 52; ++f) {
      const double err =
          std::fabs(dequantize_scalar(quantize_scalar(v, base, 4, f), base, f) - v);
      REQUIRE(err <= previous);
      previous = err;
    }
    REQUIRE(previous == 0.0);  // 52 bits reproduce the value
  }
}

TEST_CASE("emitted offsets always stay inside the saturation window") {
  std::mt19937_64 rng(61);
  for (int round = 0; round < 5000; ++round) {
    const int e = 1 + static_cast<int>(rng() % 11);
    const int window = offset_window(e);
    const int exponent = static_cast<int>(rng() % 2001) - 1000;
    const int base = static_cast<int>(rng() % 2001) - 1000;
    double v = std::ldexp(testutil::uniform(rng, 1.0, 2.0), exponent);
    if (rng() & 1) v = -v;
    const auto q = quantize_scalar(v, base, e, static_cast<int>(rng() % 53));
    REQUIRE(q.offset >= -window);
    REQUIRE(q.offset <= window);
  }
}

TEST_CASE("convert_matrix reproduces the worked 2x2 block") {
  const auto blocked = convert_matrix(example_2x2(), ReFloatConfig{1, 2, 2, 2, 2});
  REQUIRE(blocked.blocks.size() == 1);
  const auto& block = blocked.blocks[0];
  REQUIRE(block.exponent_base == 8);
  REQUIRE(block.entries.size() == 4);

  const auto deq = [&](std::size_t i) {
    return dequantize_scalar(block.entries[i].value, block.exponent_base, 2);
  };
  REQUIRE(deq(0) == -224.0);  // (0,0)
  REQUIRE(deq(1) == 320.0);   // (0,1)
  REQUIRE(deq(2) == -512.0);  // (1,0)
  REQUIRE(deq(3) == 128.0);   // (1,1)
}

TEST_CASE("one nonzero per block pins the base to its exponent") {
  SparseMatrixCoo m;
  m.n_rows = m.n_cols = 16;
  for (std::uint32_t i = 0; i < 4; ++i)
    m.entries.push_back({i * 4 + 1, i * 4 + 1, std::ldexp(1.5, static_cast<int>(i) - 2)});
  const auto blocked = convert_matrix(m, ReFloatConfig{2, 3, 8, 3, 8});
  REQUIRE(blocked.blocks.size() == 4);
  for (const auto& block : blocked.blocks) {
    REQUIRE(block.entries.size() == 1);
    REQUIRE(block.entries[0].value.offset == 0);
    REQUIRE(block.exponent_base == static_cast<int>(block.block_row) - 2);
  }
}

TEST_CASE("lossless conversion reproduces a random 256x256 matrix") {
  std::mt19937_64 rng(71);
  const auto m = testutil::random_matrix(rng, 256, 256, 3000, -100.0, 100.0);
  const auto blocked = convert_matrix(m, ReFloatConfig::lossless(7));
  REQUIRE(blocked.conversion_saturations == 0);

  std::size_t checked = 0;
  for (const auto& block : blocked.blocks)
    for (const auto& entry : block.entries) {
      const std::uint32_t row = (block.block_row << 7) | entry.row;
      const std::uint32_t col = (block.block_col << 7) | entry.col;
      const double v = dequantize_scalar(entry.value, block.exponent_base, 52);
      const auto it = std::find_if(m.entries.begin(), m.entries.end(),
                                   [&](const SparseMatrixCoo::Entry& e) {
                                     return e.row == row && e.col == col;
                                   });
      REQUIRE(it != m.entries.end());
      REQUIRE(v == it->value);
      ++checked;
    }
  REQUIRE(checked == m.entries.size());
}

TEST_CASE("scaling a block by 2^k shifts its base and nothing else") {
  std::mt19937_64 rng(81);
  auto m = testutil::random_matrix(rng, 8, 8, 20);
  const ReFloatConfig cfg{3, 3, 5, 3, 8};
  const auto before = convert_matrix(m, cfg);
  REQUIRE(before.blocks.size() == 1);

  const int k = 9;
  for (auto& e : m.entries) e.value = std::ldexp(e.value, k);
  const auto after = convert_matrix(m, cfg);
  REQUIRE(after.blocks.size() == 1);
  REQUIRE(after.blocks[0].exponent_base == before.blocks[0].exponent_base + k);
  REQUIRE(after.blocks[0].entries == before.blocks[0].entries);
}

TEST_CASE("quantize_vector_segment") {
  const ReFloatConfig cfg{2, 3, 3, 3, 8};
  SECTION("all-zero segment") {
    const auto seg = quantize_vector_segment(std::vector<double>{0, 0, 0, 0}, cfg);
    REQUIRE(seg.exponent_base == 0);
    for (const auto& q : seg.elems) REQUIRE(q.is_zero);
  }
  SECTION("the (6,12,6,13) segment") {
    const auto seg = quantize_vector_segment(std::vector<double>{6, 12, 6, 13}, cfg, 2);
    REQUIRE(seg.segment_index == 2);
    REQUIRE(seg.exponent_base == 3);  // exponents {2,3,2,3}, mean 2.5
    const double bound = std::ldexp(1.0, seg.exponent_base + 1 - 8);
    const std::vector<double> original{6, 12, 6, 13};
    for (std::size_t i = 0; i < 4; ++i) {
      const double back = dequantize_scalar(seg.elems[i], seg.exponent_base, 8);
      REQUIRE(std::fabs(back - original[i]) < bound);
    }
  }
  SECTION("values with short fractions round-trip when f_v >= 3") {
    const std::vector<double> column{-224.0, -512.0, 96.0, 320.0};
    for (int fv : {3, 5, 12}) {
      ReFloatConfig c{2, 3, 3, 4, fv};
      const auto seg = quantize_vector_segment(column, c);
      for (std::size_t i = 0; i < column.size(); ++i)
        REQUIRE(dequantize_scalar(seg.elems[i], seg.exponent_base, fv) == column[i]);
    }
  }
  SECTION("wrong segment length is rejected") {
    REQUIRE_THROWS_AS(quantize_vector_segment(std::vector<double>{1, 2, 3}, cfg),
                      std::invalid_argument);
  }
}

TEST_CASE("memory footprints") {
  SECTION("the 8-nonzero block example: 151 vs 1024 bits") {
    std::mt19937_64 rng(91);
    const auto m = testutil::random_matrix(rng, 4, 4, 8);
    const auto blocked = convert_matrix(m, ReFloatConfig{2, 2, 3, 2, 3});
    REQUIRE(blocked.blocks.size() == 1);
    REQUIRE(memory_footprint_bits(blocked) == 151);
    REQUIRE(coo_footprint_bits(m) == 1024);
  }
  SECTION("empty matrix") {
    SparseMatrixCoo empty;
    empty.n_rows = empty.n_cols = 64;
    const auto blocked = convert_matrix(empty, ReFloatConfig{});
    REQUIRE(memory_footprint_bits(blocked) == 0);
    REQUIRE(coo_footprint_bits(empty) == 0);
  }
}

TEST_CASE("config validation") {
  REQUIRE_THROWS_AS((ReFloatConfig{0, 3, 3, 3, 8}.validate()), std::invalid_argument);
  REQUIRE_THROWS_AS((ReFloatConfig{7, 12, 3, 3, 8}.validate()), std::invalid_argument);
  REQUIRE_THROWS_AS((ReFloatConfig{7, 3, 53, 3, 8}.validate()), std::invalid_argument);
  REQUIRE_NOTHROW(ReFloatConfig{}.validate());
}
