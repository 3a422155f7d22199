#include <catch2/catch_amalgamated.hpp>

#include "refloat/cost.hpp"
#include "test_util.hpp"

using namespace refloat;

TEST_CASE("crossbar counts") {
  REQUIRE(crossbar_count(11, 52) == 8404);
  REQUIRE(crossbars_per_cluster(11, 52) == 2101);
  REQUIRE(crossbar_count(3, 3) == 48);
  REQUIRE(crossbars_per_cluster(3, 3) == 12);
  // The (6,52) baseline design carries one extra alignment plane per cluster.
  REQUIRE(crossbars_per_cluster(6, 52) + 1 == kEscmaClusterCrossbars);
  REQUIRE(kEscmaEngineCrossbars == 472);
}

TEST_CASE("cycle counts") {
  REQUIRE(cycle_count(11, 52, 11, 52) == 4201);
  REQUIRE(cycle_count(6, 52, 6, 52) == 233);
  REQUIRE(cycle_count(3, 3, 3, 8) == 28);
}

TEST_CASE("cost grows exponentially in exponent bits") {
  for (int e = 1; e < 11; ++e) {
    REQUIRE(crossbars_per_cluster(e + 1, 13) - crossbars_per_cluster(e, 13) ==
            (1u << e));
    REQUIRE(cycle_count(e + 1, 9, 4, 7) - cycle_count(e, 9, 4, 7) == (1u << e));
    REQUIRE(cycle_count(4, 9, e + 1, 7) - cycle_count(4, 9, e, 7) == (1u << e));
  }
  for (int f = 0; f < 52; ++f) {
    REQUIRE(crossbars_per_cluster(3, f + 1) - crossbars_per_cluster(3, f) == 1);
    REQUIRE(cycle_count(3, f + 1, 3, 8) - cycle_count(3, f, 3, 8) == 1);
  }
}

TEST_CASE("default refloat config beats the baseline on both axes") {
  REQUIRE(crossbar_count(3, 3) < kEscmaEngineCrossbars);
  REQUIRE(cycle_count(3, 3, 3, 8) < cycle_count(6, 52, 6, 52));
}

TEST_CASE("engine accounting") {
  const HardwareConfig hw;
  REQUIRE(hw.total_crossbars() == 1048576);  // 17.1 Gb of 128x128 single-bit cells
  REQUIRE(engines_available(hw, kEscmaEngineCrossbars) == 2221);
  REQUIRE(engines_available(hw, 3, 3) == 21845);

  SECTION("insufficient supply is an error") {
    HardwareConfig tiny;
    tiny.total_compute_bits = 128ull * 128ull;  // one crossbar
    REQUIRE_THROWS_AS(engines_available(tiny, 3, 3), std::runtime_error);
  }
}

TEST_CASE("scheduling rounds are ceiling division") {
  REQUIRE(scheduling_rounds(209263, 21845) == 10);
  REQUIRE(scheduling_rounds(381321, 21845) == 18);
  REQUIRE(scheduling_rounds(100, 21845) == 1);
  REQUIRE(scheduling_rounds(21845, 21845) == 1);
  REQUIRE(scheduling_rounds(21846, 21845) == 2);
}

TEST_CASE("schedule_spmv composes the report") {
  std::mt19937_64 rng(301);
  const auto m = testutil::random_matrix(rng, 256, 256, 900);
  const auto blocked = convert_matrix(m, ReFloatConfig{4, 3, 3, 3, 8});
  const HardwareConfig hw;
  const auto report = schedule_spmv(blocked, hw);

  REQUIRE(report.crossbars_per_engine == 48);
  REQUIRE(report.cycles_per_block_mvm == 28);
  REQUIRE(report.engines_available == 21845);
  REQUIRE(report.blocks_required == blocked.blocks.size());
  REQUIRE(report.rounds == 1);
  REQUIRE(report.estimated_spmv_latency_ns ==
          Catch::Approx(48 * 50.88 + 28 * 107.0));
  REQUIRE(report.memory_ratio ==
          Catch::Approx(static_cast<double>(memory_footprint_bits(blocked)) /
                        static_cast<double>(coo_footprint_bits(m))));

  SECTION("empty matrices are rejected") {
    SparseMatrixCoo empty;
    empty.n_rows = empty.n_cols = 8;
    const auto none = convert_matrix(empty, ReFloatConfig{2, 3, 3, 3, 8});
    REQUIRE_THROWS_AS(schedule_spmv(none, hw), std::invalid_argument);
  }
}

TEST_CASE("multi-round scheduling on a synthetic block population") {
  // 70 single-entry blocks against a supply of 16 engines: ceil(70/16) = 5.
  SparseMatrixCoo m;
  m.n_rows = m.n_cols = 1024;
  for (std::uint32_t k = 0; k < 70; ++k) {
    const std::uint32_t block = k % 32;
    const std::uint32_t band = k / 32;
    m.entries.push_back({band * 64 + 1, block * 32 + (k % 7), 1.0 + k});
  }
  canonicalize(m);
  auto blocked = convert_matrix(m, ReFloatConfig{5, 3, 3, 3, 8});
  REQUIRE(blocked.blocks.size() == 70);

  HardwareConfig hw;
  hw.total_compute_bits = 16ull * 48 * 128 * 128;  // exactly 16 engines at (3,3)
  const auto report = schedule_spmv(blocked, hw);
  REQUIRE(report.engines_available == 16);
  REQUIRE(report.rounds == 5);
}

TEST_CASE("hardware config validation") {
  HardwareConfig hw;
  hw.crossbar_dim = 96;  // not a power of two
  REQUIRE_THROWS_AS(hw.validate(), std::invalid_argument);
  hw = HardwareConfig{};
  hw.write_latency_ns = 0.0;
  REQUIRE_THROWS_AS(hw.validate(), std::invalid_argument);
}
