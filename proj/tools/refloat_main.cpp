//
// refloat CLI: convert Matrix Market files into the blocked container, run
// CG/BiCGSTAB with the exact or refloat SpMV backend, print the hardware
// cost model, and sweep the truncation study. Every run writes a manifest
// that reproduces it (`refloat --manifest <file>`).
//
// Exit codes: 0 success/converged, 2 iteration cap, 3 solver breakdown,
// 1 anything else (usage, parse, IO).
//

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "refloat/manifest.hpp"
#include "refloat/refloat.hpp"

namespace fs = std::filesystem;
using namespace refloat;

namespace {

RhsMode parse_rhs_mode(const std::string& mode) {
  if (mode == "ones-solution") return RhsMode::OnesSolution;
  if (mode == "ones-rhs") return RhsMode::OnesRhs;
  if (mode == "seeded-random") return RhsMode::SeededRandom;
  throw std::invalid_argument("unknown rhs mode: " + mode);
}

std::uint32_t effective_parallel_width(const RunManifest& m) {
  if (m.parallel_width > 0) return m.parallel_width;
  return static_cast<std::uint32_t>(
      engines_available(m.hardware, m.format.mat_exp, m.format.mat_frac));
}

void write_manifest(const RunManifest& m) {
  fs::create_directories(m.out_dir);
  std::ofstream out(fs::path(m.out_dir) / "manifest.json");
  out << to_json(m).dump(2) << '\n';
}

int cmd_convert(const RunManifest& m) {
  const SparseMatrixCoo coo = parse_matrix_market_file(m.matrix_path);
  const BlockedMatrix blocked =
      convert_matrix(coo, m.format, effective_parallel_width(m));

  write_manifest(m);
  const fs::path container_path = fs::path(m.out_dir) / "matrix.rfb";
  std::ofstream out(container_path, std::ios::binary);
  const std::uint64_t bytes = serialize(blocked, out);
  out.close();

  const std::uint64_t refloat_bits = memory_footprint_bits(blocked);
  const std::uint64_t coo_bits = coo_footprint_bits(coo);
  std::cout << "container            " << container_path.string() << " (" << bytes
            << " bytes)\n"
            << "blocks               " << blocked.blocks.size() << '\n'
            << "nonzeros             " << coo.nnz() << '\n'
            << "refloat bits         " << refloat_bits << '\n'
            << "coo bits             " << coo_bits << '\n';
  if (coo_bits == 0) {
    std::cout << "memory ratio         n/a (empty matrix)\n";
  } else {
    std::printf("memory ratio         %.4f\n",
                static_cast<double>(refloat_bits) / static_cast<double>(coo_bits));
  }
  if (blocked.conversion_saturations > 0)
    std::cout << "offset saturations   " << blocked.conversion_saturations << '\n';
  return 0;
}

const char* status_name(SolveStatus status) {
  switch (status) {
    case SolveStatus::Converged: return "converged";
    case SolveStatus::MaxIterations: return "max-iter";
    case SolveStatus::Breakdown: return "breakdown";
  }
  return "unknown";
}

int cmd_solve(const RunManifest& m) {
  const SparseMatrixCoo coo = parse_matrix_market_file(m.matrix_path);
  const DenseVector b = generate_rhs(coo, parse_rhs_mode(m.rhs_mode), m.seed);

  std::unique_ptr<SpmvOperator> op;
  if (m.backend == "exact") {
    op = std::make_unique<ExactSpmvOperator>(coo);
  } else if (m.backend == "refloat") {
    op = std::make_unique<RefloatSpmvOperator>(coo, m.format,
                                               effective_parallel_width(m),
                                               m.threads);
  } else {
    throw std::invalid_argument("unknown backend: " + m.backend);
  }

  SolverSettings settings;
  settings.method = m.method == "bicgstab" ? SolverMethod::Bicgstab : SolverMethod::Cg;
  settings.tolerance = m.tolerance;
  settings.max_iterations = m.max_iterations;

  write_manifest(m);
  std::ofstream trace(fs::path(m.out_dir) / "trace.csv");
  trace << "iteration,residual_norm\n";
  char line[64];
  const auto emit = [&](std::uint64_t it, double rn) {
    std::snprintf(line, sizeof line, "%llu,%.17g\n",
                  static_cast<unsigned long long>(it), rn);
    trace << line;
  };

  const SolverResult result = solve(*op, coo, b, settings, emit);
  trace.close();

  char summary[256];
  std::snprintf(summary, sizeof summary,
                "status=%s iterations=%llu spmv_calls=%llu "
                "final_true_residual=%.17g saturations=%llu\n",
                status_name(result.trace.status),
                static_cast<unsigned long long>(result.iterations_used),
                static_cast<unsigned long long>(result.spmv_calls),
                result.trace.final_true_residual,
                static_cast<unsigned long long>(op->saturation_count()));
  std::cout << summary;
  std::ofstream(fs::path(m.out_dir) / "summary.txt") << summary;

  switch (result.trace.status) {
    case SolveStatus::Converged: return 0;
    case SolveStatus::MaxIterations: return 2;
    case SolveStatus::Breakdown: return 3;
  }
  return 1;
}

int cmd_cost(const RunManifest& m, bool compare_escma) {
  BlockedMatrix blocked;
  if (m.matrix_path.size() > 4 &&
      m.matrix_path.substr(m.matrix_path.size() - 4) == ".rfb") {
    std::ifstream in(m.matrix_path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open container: " + m.matrix_path);
    blocked = deserialize(in);
  } else {
    const SparseMatrixCoo coo = parse_matrix_market_file(m.matrix_path);
    blocked = convert_matrix(coo, m.format, effective_parallel_width(m));
  }

  const CostReport report = schedule_spmv(blocked, m.hardware);
  const auto& c = blocked.config;  // container configs win over flags
  report.print_table(std::cout, "refloat(" + std::to_string(c.block_bits) + "," +
                                    std::to_string(c.mat_exp) + "," +
                                    std::to_string(c.mat_frac) + ")(" +
                                    std::to_string(c.vec_exp) + "," +
                                    std::to_string(c.vec_frac) + ")");

  if (compare_escma) {
    CostReport escma;
    escma.crossbars_per_cluster = kEscmaClusterCrossbars;
    escma.crossbars_per_engine = kEscmaEngineCrossbars;
    escma.cycles_per_block_mvm = cycle_count(kEscmaExpBits, kEscmaFracBits,
                                             kEscmaExpBits, kEscmaFracBits);
    escma.engines_available = engines_available(m.hardware, kEscmaEngineCrossbars);
    escma.blocks_required = report.blocks_required;
    escma.rounds = scheduling_rounds(escma.blocks_required, escma.engines_available);
    escma.estimated_spmv_latency_ns =
        static_cast<double>(escma.rounds) *
        (static_cast<double>(escma.crossbars_per_engine) *
             m.hardware.write_latency_ns +
         static_cast<double>(escma.cycles_per_block_mvm) *
             m.hardware.block_compute_latency_ns);
    escma.memory_ratio = 1.0;  // the baseline stores plain double coo
    escma.print_table(std::cout, "escma(6,52)(6,52)");
  }

  write_manifest(m);
  std::ofstream(fs::path(m.out_dir) / "cost.kv") << report.to_kv();
  return 0;
}

int cmd_study(const RunManifest& m) {
  const SparseMatrixCoo coo = parse_matrix_market_file(m.matrix_path);
  const DenseVector b = generate_rhs(coo, parse_rhs_mode(m.rhs_mode), m.seed);

  write_manifest(m);
  std::ofstream csv(fs::path(m.out_dir) / "study.csv");
  csv << "exp_bits,frac_bits,iterations\n";
  for (int e = m.exp_bits_hi; e >= m.exp_bits_lo; --e) {
    for (int f = m.frac_bits_hi; f >= m.frac_bits_lo; --f) {
      const TruncationStudyResult cell =
          truncation_study(coo, b, e, f, m.tolerance, m.max_iterations);
      csv << e << ',' << f << ',';
      if (cell.converged())
        csv << cell.iterations << '\n';
      else
        csv << "NC\n";
      std::cout << "exp=" << e << " frac=" << f << " -> "
                << (cell.converged() ? std::to_string(cell.iterations)
                                     : std::string("NC"))
                << '\n';
    }
  }
  return 0;
}

void add_format_flags(CLI::App* cmd, RunManifest& m) {
  cmd->add_option("--matrix", m.matrix_path, "Matrix Market file (or .rfb container for cost)")
      ->required();
  cmd->add_option("--block-bits", m.format.block_bits, "log2 of the block side");
  cmd->add_option("--mat-exp", m.format.mat_exp, "matrix exponent offset bits");
  cmd->add_option("--mat-frac", m.format.mat_frac, "matrix fraction bits");
  cmd->add_option("--vec-exp", m.format.vec_exp, "vector exponent offset bits");
  cmd->add_option("--vec-frac", m.format.vec_frac, "vector fraction bits");
  cmd->add_option("--parallel-width", m.parallel_width,
                  "blocks per scheduling run (default: engines available)");
  cmd->add_option("--out", m.out_dir, "output directory");
}

int dispatch(const RunManifest& m, bool compare_escma) {
  if (m.command == "convert") return cmd_convert(m);
  if (m.command == "solve") return cmd_solve(m);
  if (m.command == "cost") return cmd_cost(m, compare_escma);
  if (m.command == "study") return cmd_study(m);
  throw std::invalid_argument("unknown command: " + m.command);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"refloat: block floating-point SpMV emulator and crossbar cost model"};
  app.require_subcommand(0, 1);

  RunManifest manifest;
  std::string manifest_path;
  bool compare_escma = false;
  app.add_option("--manifest", manifest_path, "re-run a previously written manifest");

  auto* convert = app.add_subcommand("convert", "convert a matrix to the blocked container");
  add_format_flags(convert, manifest);

  auto* solve = app.add_subcommand("solve", "run an iterative solver");
  add_format_flags(solve, manifest);
  solve->add_option("--method", manifest.method, "cg | bicgstab")
      ->check(CLI::IsMember({"cg", "bicgstab"}));
  solve->add_option("--backend", manifest.backend, "exact | refloat")
      ->check(CLI::IsMember({"exact", "refloat"}));
  solve->add_option("--tol", manifest.tolerance, "residual norm threshold");
  solve->add_option("--max-iter", manifest.max_iterations, "iteration cap");
  solve->add_option("--rhs", manifest.rhs_mode,
                    "ones-solution | ones-rhs | seeded-random")
      ->check(CLI::IsMember({"ones-solution", "ones-rhs", "seeded-random"}));
  solve->add_option("--seed", manifest.seed, "seed for seeded-random rhs");
  solve->add_option("--threads", manifest.threads, "spmv worker threads");

  auto* cost = app.add_subcommand("cost", "print the hardware cost model");
  add_format_flags(cost, manifest);
  cost->add_flag("--compare-escma", compare_escma,
                 "also print the (6,52)(6,52) baseline column");

  auto* study = app.add_subcommand("study", "truncation/non-convergence sweep");
  add_format_flags(study, manifest);
  study->add_option("--exp-lo", manifest.exp_bits_lo, "lowest exponent bits");
  study->add_option("--exp-hi", manifest.exp_bits_hi, "highest exponent bits");
  study->add_option("--frac-lo", manifest.frac_bits_lo, "lowest fraction bits");
  study->add_option("--frac-hi", manifest.frac_bits_hi, "highest fraction bits");
  study->add_option("--tol", manifest.tolerance, "residual norm threshold");
  study->add_option("--max-iter", manifest.max_iterations, "iteration cap");
  study->add_option("--rhs", manifest.rhs_mode,
                    "ones-solution | ones-rhs | seeded-random");
  study->add_option("--seed", manifest.seed, "seed for seeded-random rhs");

  CLI11_PARSE(app, argc, argv);

  try {
    if (!manifest_path.empty()) {
      std::ifstream in(manifest_path);
      if (!in) throw std::runtime_error("cannot open manifest: " + manifest_path);
      nlohmann::json j;
      in >> j;
      const RunManifest loaded = manifest_from_json(j);
      return dispatch(loaded, compare_escma);
    }
    if (convert->parsed()) manifest.command = "convert";
    else if (solve->parsed()) manifest.command = "solve";
    else if (cost->parsed()) manifest.command = "cost";
    else if (study->parsed()) manifest.command = "study";
    else {
      std::cerr << app.help();
      return 1;
    }
    manifest.format.validate();
    return dispatch(manifest, compare_escma);
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << '\n';
    return 1;
  }
}
