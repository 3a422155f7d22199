#pragma once
//
// SpMV over a BlockedMatrix in emulated refloat arithmetic. Each block MVM
// multiplies base-0 dequantized values in binary64 and applies the combined
// scale 2^(e_b + e_vb) once per partial. Workers may compute block partials
// in parallel; a single committer folds them into y in block-major sequence
// order, so results are bit-identical for any thread count.
//

#include <cmath>
#include <cstdint>
#include <thread>
#include <vector>

#include "refloat/blocked.hpp"

namespace refloat {

struct PartialSegment {
  std::uint32_t segment_index = 0;  // output band, i.e. the block row
  std::vector<double> values;       // 2^b accumulators
};

struct SpmvStats {
  std::uint64_t vector_saturations = 0;
  std::uint64_t segments_quantized = 0;
  std::uint64_t blocks_processed = 0;
};

inline PartialSegment block_mvm(const ReFloatBlock& block,
                                const QuantizedVectorSegment& segment,
                                const ReFloatConfig& config) {
  if (block.block_col != segment.segment_index)
    throw std::invalid_argument("block_mvm: segment index mismatch");

  PartialSegment partial;
  partial.segment_index = block.block_row;
  partial.values.assign(config.block_size(), 0.0);

  for (const auto& e : block.entries) {
    const QuantizedScalar& x = segment.elems[e.col];
    if (x.is_zero || e.value.is_zero) continue;
    partial.values[e.row] += dequantize_scalar(e.value, 0, config.mat_frac) *
                             dequantize_scalar(x, 0, config.vec_frac);
  }

  const int scale = block.exponent_base + segment.exponent_base;
  for (double& v : partial.values) {
    const double scaled = std::ldexp(v, scale);
    if (std::isinf(scaled) && std::isfinite(v))
      throw std::range_error("block_mvm: scale overflow to infinity");
    v = scaled;
  }
  return partial;
}

namespace detail {

inline std::vector<QuantizedVectorSegment> quantize_input_vector(
    const BlockedMatrix& m, const DenseVector& x, SpmvStats* stats) {
  const std::size_t bsize = m.config.block_size();
  const std::size_t n_segments = (m.n_cols + bsize - 1) / bsize;
  std::vector<double> padded;
  std::vector<QuantizedVectorSegment> segments;
  segments.reserve(n_segments);
  std::uint64_t saturations = 0;
  for (std::size_t s = 0; s < n_segments; ++s) {
    const std::size_t begin = s * bsize;
    const std::size_t len = std::min(bsize, x.size() - begin);
    std::span<const double> slice(x.data() + begin, len);
    if (len < bsize) {  // zero-padded tail segment
      padded.assign(bsize, 0.0);
      std::copy(slice.begin(), slice.end(), padded.begin());
      slice = std::span<const double>(padded.data(), bsize);
    }
    segments.push_back(quantize_vector_segment(
        slice, m.config, static_cast<std::uint32_t>(s), &saturations));
  }
  if (stats) {
    stats->vector_saturations += saturations;
    stats->segments_quantized += n_segments;
  }
  return segments;
}

}  // namespace detail

// Runs the block MVMs against already-quantized input segments.
inline DenseVector spmv_on_segments(
    const BlockedMatrix& m, const std::vector<QuantizedVectorSegment>& segments,
    int threads = 1, SpmvStats* stats = nullptr) {
  if (threads < 1) threads = 1;
  DenseVector y(m.n_rows, 0.0);
  const std::size_t bsize = m.config.block_size();
  const std::size_t n_blocks = m.blocks.size();
  if (stats) stats->blocks_processed += n_blocks;

  // Partials are computed window by window (possibly in parallel) and folded
  // strictly in sequence order.
  const std::size_t window =
      std::max<std::size_t>(64, static_cast<std::size_t>(threads) * 32);
  std::vector<PartialSegment> partials(std::min(window, n_blocks));

  for (std::size_t base = 0; base < n_blocks; base += window) {
    const std::size_t count = std::min(window, n_blocks - base);
    auto compute = [&](std::size_t first, std::size_t stride) {
      for (std::size_t i = first; i < count; i += stride)
        partials[i] = block_mvm(m.blocks[base + i], segments[m.blocks[base + i].block_col],
                                m.config);
    };
    if (threads == 1 || count < 2 * static_cast<std::size_t>(threads)) {
      compute(0, 1);
    } else {
      std::vector<std::thread> pool;
      std::vector<std::exception_ptr> errors(threads);
      pool.reserve(threads);
      for (int t = 0; t < threads; ++t)
        pool.emplace_back([&, t] {
          try {
            compute(static_cast<std::size_t>(t), static_cast<std::size_t>(threads));
          } catch (...) {
            errors[t] = std::current_exception();
          }
        });
      for (auto& th : pool) th.join();
      for (const auto& err : errors)
        if (err) std::rethrow_exception(err);
    }
    for (std::size_t i = 0; i < count; ++i) {
      const std::size_t row0 = static_cast<std::size_t>(partials[i].segment_index) * bsize;
      const std::size_t rows = std::min(bsize, m.n_rows - row0);
      for (std::size_t r = 0; r < rows; ++r) y[row0 + r] += partials[i].values[r];
    }
  }
  return y;
}

inline DenseVector spmv(const BlockedMatrix& m, const DenseVector& x,
                        int threads = 1, SpmvStats* stats = nullptr) {
  if (x.size() != m.n_cols)
    throw std::invalid_argument("spmv: dimension mismatch");
  const auto segments = detail::quantize_input_vector(m, x, stats);
  return spmv_on_segments(m, segments, threads, stats);
}

// Writes the operand the crossbars actually see back into x.
inline void dequantize_segments_into(
    const std::vector<QuantizedVectorSegment>& segments, int vec_frac,
    DenseVector& x) {
  const std::size_t bsize = segments.empty() ? 0 : segments[0].elems.size();
  for (const auto& seg : segments) {
    const std::size_t begin = static_cast<std::size_t>(seg.segment_index) * bsize;
    const std::size_t len = std::min(bsize, x.size() - begin);
    for (std::size_t i = 0; i < len; ++i)
      x[begin + i] = dequantize_scalar(seg.elems[i], seg.exponent_base, vec_frac);
  }
}

}  // namespace refloat
