#pragma once
//
// Exact double-precision sparse matrices in coordinate form, plus the
// reference SpMV every emulated backend is measured against.
//

#include <algorithm>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

namespace refloat {

using DenseVector = std::vector<double>;

struct SparseMatrixCoo {
  struct Entry {
    std::uint32_t row = 0;
    std::uint32_t col = 0;
    double value = 0.0;

    bool operator==(const Entry&) const = default;
  };

  std::uint32_t n_rows = 0;
  std::uint32_t n_cols = 0;
  std::vector<Entry> entries;  // sorted by (row, col), unique, no stored zeros

  std::size_t nnz() const { return entries.size(); }
};

// Sorts by (row, col), drops explicit zeros, rejects out-of-range indices
// and duplicate coordinates.
inline void canonicalize(SparseMatrixCoo& m) {
  std::erase_if(m.entries, [](const SparseMatrixCoo::Entry& e) {
    return e.value == 0.0;
  });
  for (const auto& e : m.entries) {
    if (e.row >= m.n_rows || e.col >= m.n_cols)
      throw std::invalid_argument("coo entry index out of range");
  }
  std::sort(m.entries.begin(), m.entries.end(),
            [](const auto& a, const auto& b) {
              return a.row != b.row ? a.row < b.row : a.col < b.col;
            });
  for (std::size_t i = 1; i < m.entries.size(); ++i) {
    if (m.entries[i - 1].row == m.entries[i].row &&
        m.entries[i - 1].col == m.entries[i].col)
      throw std::invalid_argument("duplicate coo entry");
  }
}

// y_i = sum_j A_ij x_j, accumulated in ascending (row, col) order.
inline DenseVector exact_spmv(const SparseMatrixCoo& m, const DenseVector& x) {
  if (x.size() != m.n_cols)
    throw std::invalid_argument("exact_spmv: dimension mismatch");
  DenseVector y(m.n_rows, 0.0);
  for (const auto& e : m.entries) y[e.row] += e.value * x[e.col];
  return y;
}

enum class RhsMode { OnesSolution, OnesRhs, SeededRandom };

// Deterministic uniform draw in [-1, 1) built from raw mt19937_64 output,
// so the sequence does not depend on the standard library's distributions.
inline double uniform_pm1(std::mt19937_64& rng) {
  return 2.0 * (static_cast<double>(rng() >> 11) * 0x1.0p-53) - 1.0;
}

inline DenseVector generate_rhs(const SparseMatrixCoo& m, RhsMode mode,
                                std::uint64_t seed = 0) {
  if (m.n_rows != m.n_cols)
    throw std::invalid_argument("generate_rhs: matrix must be square");
  switch (mode) {
    case RhsMode::OnesSolution:
      return exact_spmv(m, DenseVector(m.n_cols, 1.0));
    case RhsMode::OnesRhs:
      return DenseVector(m.n_rows, 1.0);
    case RhsMode::SeededRandom: {
      std::mt19937_64 rng(seed);
      DenseVector b(m.n_rows);
      for (auto& v : b) v = uniform_pm1(rng);
      return b;
    }
  }
  throw std::invalid_argument("generate_rhs: unknown mode");
}

}  // namespace refloat
