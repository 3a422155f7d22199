#pragma once
//
// Blocked refloat matrices. Nonzeros are grouped into 2^b x 2^b blocks, each
// block gets the loss-minimizing exponent base, and blocks are kept in the
// block-major order the streaming container serializes: bands (rows of
// blocks) top to bottom, each band split into runs of P blocks on ascending
// block column, run order reversed on odd bands (the zig-zag).
//

#include <cstdint>
#include <map>
#include <span>
#include <utility>
#include <vector>

#include "refloat/coo.hpp"
#include "refloat/format.hpp"

namespace refloat {

struct BlockEntry {
  std::uint16_t row = 0;  // local index inside the block, low b bits
  std::uint16_t col = 0;
  QuantizedScalar value;

  bool operator==(const BlockEntry&) const = default;
};

struct ReFloatBlock {
  std::uint32_t block_row = 0;  // upper 32-b bits of the global index
  std::uint32_t block_col = 0;
  int exponent_base = 0;        // clamped to [-1022, 1023]
  std::vector<BlockEntry> entries;  // sorted by (row, col), never empty

  bool operator==(const ReFloatBlock&) const = default;
};

struct BlockedMatrix {
  ReFloatConfig config;
  std::uint32_t n_rows = 0;
  std::uint32_t n_cols = 0;
  std::uint32_t parallel_width = 1;  // P: blocks grouped per scheduling round
  std::vector<ReFloatBlock> blocks;  // block-major (zig-zag) order
  std::uint64_t conversion_saturations = 0;

  std::uint64_t nnz() const {
    std::uint64_t n = 0;
    for (const auto& b : blocks) n += b.entries.size();
    return n;
  }
};

struct QuantizedVectorSegment {
  std::uint32_t segment_index = 0;
  int exponent_base = 0;  // 0 when the segment is all zero
  std::vector<QuantizedScalar> elems;  // exactly 2^b records
};

namespace detail {

inline int clamp_base(int base) {
  return base < -1022 ? -1022 : (base > 1023 ? 1023 : base);
}

// Zig-zag permutation of per-band ascending sequences: runs of P keep their
// ascending-column grouping; odd bands emit their runs right to left.
template <typename Block>
inline void reorder_band_zigzag(std::vector<Block>& band, std::uint32_t band_index,
                                std::uint32_t parallel_width) {
  if (band_index % 2 == 0 || band.size() <= parallel_width) return;
  std::vector<Block> out;
  out.reserve(band.size());
  const std::size_t runs = (band.size() + parallel_width - 1) / parallel_width;
  for (std::size_t r = runs; r-- > 0;) {
    const std::size_t begin = r * parallel_width;
    const std::size_t end = std::min(band.size(), begin + parallel_width);
    for (std::size_t i = begin; i < end; ++i) out.push_back(std::move(band[i]));
  }
  band = std::move(out);
}

}  // namespace detail

inline BlockedMatrix convert_matrix(const SparseMatrixCoo& m,
                                    const ReFloatConfig& config,
                                    std::uint32_t parallel_width = 1) {
  config.validate();
  if (parallel_width < 1)
    throw std::invalid_argument("convert_matrix: parallel_width must be >= 1");

  BlockedMatrix out;
  out.config = config;
  out.n_rows = m.n_rows;
  out.n_cols = m.n_cols;
  out.parallel_width = parallel_width;

  const int b = config.block_bits;
  const std::uint32_t local_mask = (1u << b) - 1u;

  // COO order is (row, col) ascending, so per-block entry lists come out
  // sorted by local (row, col) as well.
  std::map<std::pair<std::uint32_t, std::uint32_t>, std::vector<std::uint32_t>> groups;
  for (std::uint32_t i = 0; i < m.entries.size(); ++i) {
    const auto& e = m.entries[i];
    groups[{e.row >> b, e.col >> b}].push_back(i);
  }

  std::map<std::uint32_t, std::vector<ReFloatBlock>> bands;
  std::vector<int> exponents;
  for (auto& [key, idx] : groups) {
    ReFloatBlock block;
    block.block_row = key.first;
    block.block_col = key.second;
    exponents.clear();
    for (std::uint32_t i : idx)
      exponents.push_back(detail::decompose(m.entries[i].value).exponent);
    block.exponent_base = detail::clamp_base(optimal_exponent_base(exponents));
    block.entries.reserve(idx.size());
    for (std::uint32_t i : idx) {
      const auto& e = m.entries[i];
      bool saturated = false;
      QuantizedScalar q =
          quantize_scalar(e.value, block.exponent_base, config.mat_exp,
                          config.mat_frac, &saturated);
      if (saturated) ++out.conversion_saturations;
      block.entries.push_back({static_cast<std::uint16_t>(e.row & local_mask),
                               static_cast<std::uint16_t>(e.col & local_mask), q});
    }
    bands[block.block_row].push_back(std::move(block));
  }

  std::size_t band_ordinal = 0;
  for (auto& [row, band] : bands) {
    detail::reorder_band_zigzag(band, static_cast<std::uint32_t>(band_ordinal),
                                parallel_width);
    for (auto& block : band) out.blocks.push_back(std::move(block));
    ++band_ordinal;
  }
  return out;
}

// Quantizes one 2^b-length slice of an input vector. The base comes from the
// nonzero elements only; an all-zero segment takes base 0.
inline QuantizedVectorSegment quantize_vector_segment(
    std::span<const double> segment, const ReFloatConfig& config,
    std::uint32_t segment_index = 0, std::uint64_t* saturations = nullptr) {
  if (segment.size() != static_cast<std::size_t>(config.block_size()))
    throw std::invalid_argument(
        "quantize_vector_segment: segment length must be 2^block_bits");

  QuantizedVectorSegment seg;
  seg.segment_index = segment_index;
  std::vector<int> exponents;
  for (double v : segment)
    if (v != 0.0) exponents.push_back(detail::decompose(v).exponent);
  seg.exponent_base =
      exponents.empty() ? 0 : detail::clamp_base(optimal_exponent_base(exponents));

  seg.elems.reserve(segment.size());
  for (double v : segment) {
    bool saturated = false;
    seg.elems.push_back(quantize_scalar(v, seg.exponent_base, config.vec_exp,
                                        config.vec_frac, &saturated));
    if (saturated && saturations) ++*saturations;
  }
  return seg;
}

// Storage accounting. Per block: nnz*(1+e+f+2b) value+index bits, two
// (32-b)-bit block coordinates and an 11-bit exponent base.
inline std::uint64_t memory_footprint_bits(const BlockedMatrix& m) {
  const int b = m.config.block_bits;
  const std::uint64_t per_entry =
      1ull + m.config.mat_exp + m.config.mat_frac + 2ull * b;
  const std::uint64_t per_block = 2ull * (32 - b) + 11ull;
  std::uint64_t bits = 0;
  for (const auto& block : m.blocks)
    bits += block.entries.size() * per_entry + per_block;
  return bits;
}

inline std::uint64_t coo_footprint_bits(const SparseMatrixCoo& m) {
  return static_cast<std::uint64_t>(m.entries.size()) * (32 + 32 + 64);
}

}  // namespace refloat
