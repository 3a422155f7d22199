#pragma once
//
// Analytical hardware model. An engine is four clusters (one per operand
// sign combination); a cluster holds one crossbar per matrix bit plane,
// 2^e + f + 1 of them. A block MVM streams 2^e_v + f_v + 1 vector bit planes
// through a pipelined shift-and-add reduce.
//

#include <cstdint>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "refloat/blocked.hpp"

namespace refloat {

struct HardwareConfig {
  std::uint32_t crossbar_dim = 128;
  std::uint64_t total_compute_bits = 1ull << 34;  // 17.1 Gb of compute ReRAM
  std::uint32_t cell_bits = 1;
  double write_latency_ns = 50.88;          // per-crossbar write
  double block_compute_latency_ns = 107.0;  // per crossbar cycle incl. ADC

  void validate() const {
    if (crossbar_dim == 0 || (crossbar_dim & (crossbar_dim - 1)) != 0)
      throw std::invalid_argument("crossbar_dim must be a power of two");
    if (total_compute_bits == 0 || cell_bits == 0)
      throw std::invalid_argument("compute supply must be positive");
    if (write_latency_ns <= 0 || block_compute_latency_ns <= 0)
      throw std::invalid_argument("latencies must be positive");
  }

  std::uint64_t total_crossbars() const {
    return total_compute_bits /
           (static_cast<std::uint64_t>(crossbar_dim) * crossbar_dim * cell_bits);
  }
};

inline std::uint64_t crossbars_per_cluster(int mat_exp, int mat_frac) {
  if (mat_exp < 1) throw std::invalid_argument("mat_exp must be >= 1");
  return (1ull << mat_exp) + mat_frac + 1;
}

inline std::uint64_t crossbar_count(int mat_exp, int mat_frac) {
  return 4 * crossbars_per_cluster(mat_exp, mat_frac);
}

// The double-precision baseline design (ESCMA) pads each (6,52) cluster with
// one extra alignment plane: 118 crossbars per cluster, 472 per engine.
inline constexpr std::uint64_t kEscmaClusterCrossbars = 118;
inline constexpr std::uint64_t kEscmaEngineCrossbars = 4 * kEscmaClusterCrossbars;
inline constexpr int kEscmaExpBits = 6;
inline constexpr int kEscmaFracBits = 52;

inline std::uint64_t cycle_count(int mat_exp, int mat_frac, int vec_exp,
                                 int vec_frac) {
  if (mat_exp < 1 || vec_exp < 1)
    throw std::invalid_argument("exponent bits must be >= 1");
  return ((1ull << vec_exp) + vec_frac + 1) +
         ((1ull << mat_exp) + mat_frac + 1) - 1;
}

inline std::uint64_t engines_available(const HardwareConfig& hw,
                                       std::uint64_t crossbars_per_engine) {
  hw.validate();
  const std::uint64_t supply = hw.total_crossbars();
  if (crossbars_per_engine > supply)
    throw std::runtime_error("engine larger than the crossbar supply");
  return supply / crossbars_per_engine;
}

inline std::uint64_t engines_available(const HardwareConfig& hw, int mat_exp,
                                       int mat_frac) {
  return engines_available(hw, crossbar_count(mat_exp, mat_frac));
}

inline std::uint64_t scheduling_rounds(std::uint64_t blocks, std::uint64_t engines) {
  if (engines == 0) throw std::invalid_argument("engines must be >= 1");
  return (blocks + engines - 1) / engines;
}

struct CostReport {
  std::uint64_t crossbars_per_cluster = 0;
  std::uint64_t crossbars_per_engine = 0;
  std::uint64_t cycles_per_block_mvm = 0;
  std::uint64_t engines_available = 0;
  std::uint64_t blocks_required = 0;
  std::uint64_t rounds = 0;
  double estimated_spmv_latency_ns = 0.0;
  double memory_ratio = 0.0;  // refloat bits / coo bits

  std::string to_kv() const {
    std::ostringstream out;
    out << "crossbars_per_cluster=" << crossbars_per_cluster << '\n'
        << "crossbars_per_engine=" << crossbars_per_engine << '\n'
        << "cycles_per_block_mvm=" << cycles_per_block_mvm << '\n'
        << "engines_available=" << engines_available << '\n'
        << "blocks_required=" << blocks_required << '\n'
        << "rounds=" << rounds << '\n'
        << "estimated_spmv_latency_ns=" << estimated_spmv_latency_ns << '\n'
        << "memory_ratio=" << memory_ratio << '\n';
    return out.str();
  }

  void print_table(std::ostream& out, const std::string& label) const {
    out << label << ":\n"
        << "  crossbars/cluster   " << crossbars_per_cluster << '\n'
        << "  crossbars/engine    " << crossbars_per_engine << '\n'
        << "  cycles/block MVM    " << cycles_per_block_mvm << '\n'
        << "  engines available   " << engines_available << '\n'
        << "  blocks required     " << blocks_required << '\n'
        << "  scheduling rounds   " << rounds << '\n'
        << "  est. SpMV latency   " << estimated_spmv_latency_ns << " ns\n"
        << "  memory ratio        " << memory_ratio << '\n';
  }
};

// Each round rewrites a full engine's cells and runs one block MVM worth of
// crossbar cycles.
inline CostReport schedule_spmv(const BlockedMatrix& m, const HardwareConfig& hw) {
  if (m.blocks.empty())
    throw std::invalid_argument("schedule_spmv: blocked matrix is empty");
  hw.validate();
  const auto& c = m.config;

  CostReport report;
  report.crossbars_per_cluster = crossbars_per_cluster(c.mat_exp, c.mat_frac);
  report.crossbars_per_engine = crossbar_count(c.mat_exp, c.mat_frac);
  report.cycles_per_block_mvm =
      cycle_count(c.mat_exp, c.mat_frac, c.vec_exp, c.vec_frac);
  report.engines_available = engines_available(hw, report.crossbars_per_engine);
  report.blocks_required = m.blocks.size();
  report.rounds = scheduling_rounds(report.blocks_required, report.engines_available);
  report.estimated_spmv_latency_ns =
      static_cast<double>(report.rounds) *
      (static_cast<double>(report.crossbars_per_engine) * hw.write_latency_ns +
       static_cast<double>(report.cycles_per_block_mvm) *
           hw.block_compute_latency_ns);
  const std::uint64_t coo_bits = m.nnz() * (32 + 32 + 64);
  report.memory_ratio =
      coo_bits == 0 ? 0.0
                    : static_cast<double>(memory_footprint_bits(m)) /
                          static_cast<double>(coo_bits);
  return report;
}

}  // namespace refloat
