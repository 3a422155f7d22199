// Minimal library walkthrough: build a small SPD system, convert it, solve
// it with the exact and the quantized backend, and print the cost model.

#include <cstdio>

#include "refloat/refloat.hpp"

using namespace refloat;

int main() {
  // tridiagonal SPD system
  SparseMatrixCoo a;
  a.n_rows = a.n_cols = 16;
  for (std::uint32_t i = 0; i < 16; ++i) {
    a.entries.push_back({i, i, 2.5});
    if (i + 1 < 16) {
      a.entries.push_back({i, i + 1, -1.0});
      a.entries.push_back({i + 1, i, -1.0});
    }
  }
  canonicalize(a);
  const DenseVector b = generate_rhs(a, RhsMode::OnesSolution);

  SolverSettings settings;
  settings.tolerance = 1e-10;

  ExactSpmvOperator exact(a);
  const auto exact_run = cg_solve(exact, a, b, settings);
  std::printf("exact cg:   %llu iterations, true residual %.3g\n",
              static_cast<unsigned long long>(exact_run.iterations_used),
              exact_run.trace.final_true_residual);

  const ReFloatConfig format{2, 3, 8, 3, 12};
  RefloatSpmvOperator quantized(a, format);
  const auto refloat_run = cg_solve(quantized, a, b, settings);
  std::printf("refloat cg: %llu iterations, true residual %.3g, saturations %llu\n",
              static_cast<unsigned long long>(refloat_run.iterations_used),
              refloat_run.trace.final_true_residual,
              static_cast<unsigned long long>(quantized.saturation_count()));

  const CostReport cost = schedule_spmv(quantized.blocked(), HardwareConfig{});
  std::printf("cost model: %llu crossbars/engine, %llu cycles/block MVM, %llu rounds\n",
              static_cast<unsigned long long>(cost.crossbars_per_engine),
              static_cast<unsigned long long>(cost.cycles_per_block_mvm),
              static_cast<unsigned long long>(cost.rounds));
  return 0;
}
