#pragma once
//
// CG and BiCGSTAB over a pluggable SpMV backend. The convergence check uses
// the recurrence residual L2 norm; the true residual against the exact
// matrix is evaluated once at termination. Vector ops (dot, axpy) stay in
// binary64 regardless of backend.
//
// spmv call accounting: one setup call for r0 = b - A*x0, then one call per
// CG iteration and two per BiCGSTAB iteration, minus one when BiCGSTAB takes
// the half-step exit (||s|| already below tolerance, which also avoids the
// 0/0 omega on exact convergence).
//

#include <cmath>
#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "refloat/coo.hpp"
#include "refloat/spmv.hpp"

namespace refloat {

enum class SolveStatus { Converged, MaxIterations, Breakdown };

enum class SolverMethod { Cg, Bicgstab };

struct SolverSettings {
  SolverMethod method = SolverMethod::Cg;
  double tolerance = 1e-8;  // on the recurrence residual L2 norm
  std::uint64_t max_iterations = 100000;
};

struct ConvergenceTrace {
  std::vector<std::pair<std::uint64_t, double>> records;  // (iteration, ||r||)
  SolveStatus status = SolveStatus::MaxIterations;
  double final_true_residual = 0.0;
};

struct SolverResult {
  DenseVector solution;
  ConvergenceTrace trace;
  std::uint64_t iterations_used = 0;
  std::uint64_t spmv_calls = 0;
};

using TraceCallback = std::function<void(std::uint64_t, double)>;

class SpmvOperator {
 public:
  virtual ~SpmvOperator() = default;
  virtual std::uint32_t rows() const = 0;
  virtual std::uint32_t cols() const = 0;
  virtual void apply(const DenseVector& x, DenseVector& y) = 0;  // y = A x
  // Converts the operand into the backend's working form (in place) and
  // multiplies in one step. The quantized backend quantizes x exactly once
  // and runs the block MVMs on those same segments, so the recurrence sees
  // the operand the crossbars multiplied and p'Ap stays a quadratic form.
  virtual void apply_conditioned(DenseVector& x, DenseVector& y) { apply(x, y); }
  virtual std::uint64_t saturation_count() const { return 0; }
};

class ExactSpmvOperator final : public SpmvOperator {
 public:
  explicit ExactSpmvOperator(const SparseMatrixCoo& m) : m_(&m) {}
  std::uint32_t rows() const override { return m_->n_rows; }
  std::uint32_t cols() const override { return m_->n_cols; }
  void apply(const DenseVector& x, DenseVector& y) override {
    y = exact_spmv(*m_, x);
  }

 private:
  const SparseMatrixCoo* m_;
};

class RefloatSpmvOperator final : public SpmvOperator {
 public:
  RefloatSpmvOperator(const SparseMatrixCoo& m, const ReFloatConfig& config,
                      std::uint32_t parallel_width = 1, int threads = 1)
      : blocked_(convert_matrix(m, config, parallel_width)), threads_(threads) {}
  explicit RefloatSpmvOperator(BlockedMatrix blocked, int threads = 1)
      : blocked_(std::move(blocked)), threads_(threads) {}

  std::uint32_t rows() const override { return blocked_.n_rows; }
  std::uint32_t cols() const override { return blocked_.n_cols; }
  void apply(const DenseVector& x, DenseVector& y) override {
    y = spmv(blocked_, x, threads_, &stats_);
  }
  void apply_conditioned(DenseVector& x, DenseVector& y) override {
    const auto segments = detail::quantize_input_vector(blocked_, x, &stats_);
    dequantize_segments_into(segments, blocked_.config.vec_frac, x);
    y = spmv_on_segments(blocked_, segments, threads_, &stats_);
  }
  std::uint64_t saturation_count() const override {
    return stats_.vector_saturations + blocked_.conversion_saturations;
  }
  const BlockedMatrix& blocked() const { return blocked_; }
  const SpmvStats& stats() const { return stats_; }

 private:
  BlockedMatrix blocked_;
  int threads_ = 1;
  SpmvStats stats_;
};

// Global bit-budget truncation: fractions keep their leading bits, the
// effective exponent wraps into the signed window of the given width
// (two's-complement modulo). Applied to the matrix once and to the operand
// and result vectors of every apply.
inline double truncate_value(double v, int exp_bits, int frac_bits) {
  if (v == 0.0 || !std::isfinite(v)) return v;
  const auto d = detail::decompose(v);
  const std::uint64_t frac =
      frac_bits == 0 ? 0
                     : (d.frac52 >> (52 - frac_bits)) << (52 - frac_bits);
  const int span = 1 << exp_bits;
  int exponent = d.exponent;
  const int half = span / 2;
  exponent = ((exponent + half) % span + span) % span - half;
  const double mantissa = 1.0 + std::ldexp(static_cast<double>(frac), -52);
  const double magnitude = std::ldexp(mantissa, exponent);
  return d.negative ? -magnitude : magnitude;
}

class TruncatingSpmvOperator final : public SpmvOperator {
 public:
  TruncatingSpmvOperator(const SparseMatrixCoo& m, int exp_bits, int frac_bits)
      : m_(m), exp_bits_(exp_bits), frac_bits_(frac_bits) {
    if (exp_bits < 1 || exp_bits > 11)
      throw std::invalid_argument("exponent bits must be in [1,11]");
    if (frac_bits < 0 || frac_bits > 52)
      throw std::invalid_argument("fraction bits must be in [0,52]");
    for (auto& e : m_.entries) e.value = truncate_value(e.value, exp_bits, frac_bits);
  }

  std::uint32_t rows() const override { return m_.n_rows; }
  std::uint32_t cols() const override { return m_.n_cols; }
  void apply(const DenseVector& x, DenseVector& y) override {
    DenseVector xt(x.size());
    for (std::size_t i = 0; i < x.size(); ++i)
      xt[i] = truncate_value(x[i], exp_bits_, frac_bits_);
    y = exact_spmv(m_, xt);
    for (double& v : y) v = truncate_value(v, exp_bits_, frac_bits_);
  }

 private:
  SparseMatrixCoo m_;
  int exp_bits_;
  int frac_bits_;
};

namespace detail {

inline double dot(const DenseVector& a, const DenseVector& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm2(const DenseVector& a) { return std::sqrt(dot(a, a)); }

inline void record(ConvergenceTrace& trace, const TraceCallback& cb,
                   std::uint64_t iteration, double residual_norm) {
  trace.records.emplace_back(iteration, residual_norm);
  if (cb) cb(iteration, residual_norm);
}

inline void finish(SolverResult& result, const SparseMatrixCoo& exact,
                   const DenseVector& b) {
  DenseVector r = exact_spmv(exact, result.solution);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = b[i] - r[i];
  result.trace.final_true_residual = norm2(r);
}

}  // namespace detail

inline SolverResult cg_solve(SpmvOperator& op, const SparseMatrixCoo& exact,
                             const DenseVector& b, const SolverSettings& settings,
                             const TraceCallback& callback = {}) {
  const std::size_t n = op.rows();
  if (op.cols() != n) throw std::invalid_argument("cg_solve: matrix must be square");
  if (b.size() != n) throw std::invalid_argument("cg_solve: rhs length mismatch");
  if (settings.tolerance <= 0 || settings.max_iterations < 1)
    throw std::invalid_argument("cg_solve: invalid settings");

  SolverResult result;
  result.solution.assign(n, 0.0);
  DenseVector r(n), ap(n);

  op.apply_conditioned(result.solution, ap);  // setup call on x0 = 0
  ++result.spmv_calls;
  for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - ap[i];

  double rr = detail::dot(r, r);
  detail::record(result.trace, callback, 0, std::sqrt(rr));
  if (std::sqrt(rr) < settings.tolerance) {
    result.trace.status = SolveStatus::Converged;
    detail::finish(result, exact, b);
    return result;
  }

  // the correction vector is converted to the backend form as it enters
  // each spmv; the recurrence keeps the converted vector
  DenseVector p = r;
  for (std::uint64_t k = 1; k <= settings.max_iterations; ++k) {
    op.apply_conditioned(p, ap);
    ++result.spmv_calls;
    const double pap = detail::dot(p, ap);
    if (!(pap > 0.0)) {  // not SPD, or quantization destroyed positivity
      result.trace.status = SolveStatus::Breakdown;
      result.iterations_used = k - 1;
      detail::finish(result, exact, b);
      return result;
    }
    const double alpha = rr / pap;
    for (std::size_t i = 0; i < n; ++i) result.solution[i] += alpha * p[i];
    for (std::size_t i = 0; i < n; ++i) r[i] -= alpha * ap[i];

    const double rr_new = detail::dot(r, r);
    const double rnorm = std::sqrt(rr_new);
    detail::record(result.trace, callback, k, rnorm);
    result.iterations_used = k;
    if (!std::isfinite(rnorm)) {  // quantization blew the recurrence up
      result.trace.status = SolveStatus::Breakdown;
      detail::finish(result, exact, b);
      return result;
    }
    if (rnorm < settings.tolerance) {
      result.trace.status = SolveStatus::Converged;
      detail::finish(result, exact, b);
      return result;
    }
    const double beta = rr_new / rr;
    rr = rr_new;
    for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + beta * p[i];
  }
  result.trace.status = SolveStatus::MaxIterations;
  detail::finish(result, exact, b);
  return result;
}

inline SolverResult bicgstab_solve(SpmvOperator& op, const SparseMatrixCoo& exact,
                                   const DenseVector& b,
                                   const SolverSettings& settings,
                                   const TraceCallback& callback = {}) {
  const std::size_t n = op.rows();
  if (op.cols() != n)
    throw std::invalid_argument("bicgstab_solve: matrix must be square");
  if (b.size() != n) throw std::invalid_argument("bicgstab_solve: rhs length mismatch");
  if (settings.tolerance <= 0 || settings.max_iterations < 1)
    throw std::invalid_argument("bicgstab_solve: invalid settings");

  constexpr double kBreakdownEps = 1e-300;

  SolverResult result;
  result.solution.assign(n, 0.0);
  DenseVector r(n), v(n, 0.0), p(n, 0.0), s(n), t(n);

  op.apply_conditioned(result.solution, t);  // setup call on x0 = 0
  ++result.spmv_calls;
  for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - t[i];
  const DenseVector r_hat = r;

  double rnorm = detail::norm2(r);
  detail::record(result.trace, callback, 0, rnorm);
  if (rnorm < settings.tolerance) {
    result.trace.status = SolveStatus::Converged;
    detail::finish(result, exact, b);
    return result;
  }

  double rho = 1.0, alpha = 1.0, omega = 1.0;
  for (std::uint64_t k = 1; k <= settings.max_iterations; ++k) {
    const double rho_new = detail::dot(r_hat, r);
    if (!(std::fabs(rho_new) >= kBreakdownEps)) {  // tiny or non-finite
      result.trace.status = SolveStatus::Breakdown;
      result.iterations_used = k - 1;
      detail::finish(result, exact, b);
      return result;
    }
    const double beta = (rho_new / rho) * (alpha / omega);
    for (std::size_t i = 0; i < n; ++i)
      p[i] = r[i] + beta * (p[i] - omega * v[i]);

    op.apply_conditioned(p, v);
    ++result.spmv_calls;
    alpha = rho_new / detail::dot(r_hat, v);
    for (std::size_t i = 0; i < n; ++i) s[i] = r[i] - alpha * v[i];

    const double snorm = detail::norm2(s);
    if (!std::isfinite(snorm)) {
      result.trace.status = SolveStatus::Breakdown;
      result.iterations_used = k - 1;
      detail::finish(result, exact, b);
      return result;
    }
    if (snorm < settings.tolerance) {  // half-step exit
      for (std::size_t i = 0; i < n; ++i) result.solution[i] += alpha * p[i];
      r = s;
      detail::record(result.trace, callback, k, snorm);
      result.iterations_used = k;
      result.trace.status = SolveStatus::Converged;
      detail::finish(result, exact, b);
      return result;
    }

    op.apply_conditioned(s, t);
    ++result.spmv_calls;
    omega = detail::dot(t, s) / detail::dot(t, t);
    if (std::fabs(omega) < kBreakdownEps || !std::isfinite(omega)) {
      result.trace.status = SolveStatus::Breakdown;
      result.iterations_used = k - 1;
      detail::finish(result, exact, b);
      return result;
    }
    for (std::size_t i = 0; i < n; ++i)
      result.solution[i] += alpha * p[i] + omega * s[i];
    for (std::size_t i = 0; i < n; ++i) r[i] = s[i] - omega * t[i];

    rnorm = detail::norm2(r);
    detail::record(result.trace, callback, k, rnorm);
    result.iterations_used = k;
    if (!std::isfinite(rnorm)) {
      result.trace.status = SolveStatus::Breakdown;
      detail::finish(result, exact, b);
      return result;
    }
    if (rnorm < settings.tolerance) {
      result.trace.status = SolveStatus::Converged;
      detail::finish(result, exact, b);
      return result;
    }
    rho = rho_new;
  }
  result.trace.status = SolveStatus::MaxIterations;
  detail::finish(result, exact, b);
  return result;
}

inline SolverResult solve(SpmvOperator& op, const SparseMatrixCoo& exact,
                          const DenseVector& b, const SolverSettings& settings,
                          const TraceCallback& callback = {}) {
  return settings.method == SolverMethod::Cg
             ? cg_solve(op, exact, b, settings, callback)
             : bicgstab_solve(op, exact, b, settings, callback);
}

struct TruncationStudyResult {
  SolveStatus status = SolveStatus::MaxIterations;
  std::uint64_t iterations = 0;

  bool converged() const { return status == SolveStatus::Converged; }
};

// One cell of the truncation/non-convergence experiment: CG under a global
// (exponent, fraction) bit budget. Breakdown counts as NC like hitting the cap.
inline TruncationStudyResult truncation_study(const SparseMatrixCoo& m,
                                              const DenseVector& b, int exp_bits,
                                              int frac_bits,
                                              double tolerance = 1e-8,
                                              std::uint64_t max_iterations = 100000) {
  TruncatingSpmvOperator op(m, exp_bits, frac_bits);
  SolverSettings settings;
  settings.method = SolverMethod::Cg;
  settings.tolerance = tolerance;
  settings.max_iterations = max_iterations;
  const SolverResult res = cg_solve(op, m, b, settings);
  return {res.trace.status, res.iterations_used};
}

}  // namespace refloat
