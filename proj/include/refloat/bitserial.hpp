#pragma once
//
// Bit-serial fixed-point MVM as crossbar hardware performs it: the matrix is
// sliced into one-bit planes (one crossbar each), vector bits stream in
// MSB-first with shift-and-add, and the per-plane sums are reduced with a
// final weighted shift-and-add. Serves as the arithmetic oracle for the
// cycle-count model.
//

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace refloat {

struct BitSerialTrace {
  int matrix_bits = 0;  // N_M
  int vector_bits = 0;  // N_v
  std::uint64_t cycle_count = 0;  // N_v + N_M - 1
  std::vector<std::uint64_t> result;
};

struct IntermediateWidths {
  int f_x = 0;  // ADC bits per 1-bit input on a 2^b crossbar
  int f_c = 0;  // after reducing across the matrix bit planes
  int f_g = 0;  // after streaming all vector bits
  int signed_result = 0;  // f_g + 1 after the four-cluster sign combination
};

inline IntermediateWidths intermediate_bit_widths(int block_bits, int mat_exp,
                                                  int mat_frac, int vec_exp,
                                                  int vec_frac) {
  IntermediateWidths w;
  w.f_x = block_bits;
  w.f_c = (1 << mat_exp) + mat_frac + 1 + block_bits;
  w.f_g = w.f_c + (1 << vec_exp) + vec_frac + 1 + block_bits;
  w.signed_result = w.f_g + 1;
  return w;
}

// matrix is row-major n x n, entries < 2^matrix_bits; vector entries < 2^vector_bits.
inline BitSerialTrace bit_serial_fixed_mvm(const std::vector<std::uint32_t>& matrix,
                                           const std::vector<std::uint32_t>& vec,
                                           int matrix_bits, int vector_bits) {
  if (matrix_bits < 1 || matrix_bits > 24 || vector_bits < 1 || vector_bits > 24)
    throw std::invalid_argument("bit widths must be in [1,24]");
  const std::size_t n = vec.size();
  if (matrix.size() != n * n)
    throw std::invalid_argument("matrix must be square and match the vector");
  if (n == 0 || n > 4096)  // one crossbar's worth, keeps accumulators in range
    throw std::invalid_argument("matrix side must be in [1,4096]");
  const std::uint32_t m_limit = matrix_bits == 32 ? 0xffffffffu : (1u << matrix_bits);
  const std::uint32_t v_limit = vector_bits == 32 ? 0xffffffffu : (1u << vector_bits);
  for (std::uint32_t v : matrix)
    if (v >= m_limit) throw std::invalid_argument("matrix entry exceeds declared bits");
  for (std::uint32_t v : vec)
    if (v >= v_limit) throw std::invalid_argument("vector entry exceeds declared bits");

  // One accumulator vector per bit-plane crossbar.
  std::vector<std::vector<std::uint64_t>> plane_acc(
      matrix_bits, std::vector<std::uint64_t>(n, 0));

  // Input cycles: vector bits MSB-first, every crossbar shifts and adds its
  // own 1-bit MVM result.
  for (int t = vector_bits - 1; t >= 0; --t) {
    for (int k = 0; k < matrix_bits; ++k) {
      auto& acc = plane_acc[k];
      for (std::size_t i = 0; i < n; ++i) {
        std::uint64_t dot = 0;
        for (std::size_t j = 0; j < n; ++j)
          dot += static_cast<std::uint64_t>((matrix[i * n + j] >> k) & 1u) *
                 ((vec[j] >> t) & 1u);
        acc[i] = (acc[i] << 1) + dot;
      }
    }
  }

  // Reduce cycles: weighted shift-and-add across the matrix bit planes.
  BitSerialTrace trace;
  trace.matrix_bits = matrix_bits;
  trace.vector_bits = vector_bits;
  trace.cycle_count = static_cast<std::uint64_t>(vector_bits) + matrix_bits - 1;
  trace.result.assign(n, 0);
  for (int k = 0; k < matrix_bits; ++k)
    for (std::size_t i = 0; i < n; ++i)
      trace.result[i] += plane_acc[k][i] << k;
  return trace;
}

}  // namespace refloat
