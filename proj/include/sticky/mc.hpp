#pragma once

#include "sticky/model.hpp"
#include "sticky/rates.hpp"
#include "sticky/sim.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace sticky {

struct Estimate {
    double mean = 0.0;
    double std_error = 0.0; // sample standard deviation / sqrt(n_paths)
    std::size_t n_paths = 0;
    Scheme scheme = Scheme::Eigen;
    TimeStepping stepping;
    double h = 0.0;
    std::uint64_t seed = 0;
};

struct McOptions {
    std::size_t workers = 0; // 0: std::thread::hardware_concurrency()
};

/// Monte Carlo mean of `functional` over n_paths paths; path k uses stream
/// (master_seed, k). Per-path values are reduced in path order, so the result
/// is bitwise independent of the worker count. The first path error aborts
/// the run and is rethrown. A discrete stepping with steps == 0 is resolved
/// with auto_discrete_steps.
Estimate estimate(const StickyModel& model, const Functional& functional, Scheme scheme,
                  TimeStepping stepping, double h, double horizon, const State& x0,
                  std::size_t n_paths, std::uint64_t master_seed, McOptions options = {});

/// Per-path values of the same run, in path order.
std::vector<double> sample_paths(const StickyModel& model, const Functional& functional,
                                 Scheme scheme, TimeStepping stepping, double h, double horizon,
                                 const State& x0, std::size_t n_paths, std::uint64_t master_seed,
                                 McOptions options = {});

/// Grid size for the discrete-time sampler: ceil(4 T a0), with a0 the
/// untrimmed interior outflow rate when the builder caches one and the
/// outflow rate at x0 otherwise.
std::size_t auto_discrete_steps(const StickyModel& model, Scheme scheme, double h,
                                double horizon, const State& x0);

TimeStepping resolve_stepping(const StickyModel& model, Scheme scheme, TimeStepping stepping,
                              double h, double horizon, const State& x0);

/// Mean and standard error of a sample (compensated sums).
Estimate summarize(std::span<const double> values);

struct ConvergenceRow {
    double h = 0.0;
    Estimate estimate;
    double abs_error = 0.0;
    double seconds = 0.0;
};

struct ConvergenceResult {
    std::vector<ConvergenceRow> rows;
    double slope = 0.0;
};

/// One estimate per h in h_list (at least 3 distinct positive values).
std::vector<ConvergenceRow> convergence_rows(const StickyModel& model,
                                             const Functional& functional, Scheme scheme,
                                             TimeStepping stepping, std::span<const double> h_list,
                                             double horizon, const State& x0,
                                             std::size_t n_paths, std::uint64_t master_seed,
                                             double reference, McOptions options = {});

/// convergence_rows followed by fit_loglog_slope.
ConvergenceResult convergence_study(const StickyModel& model, const Functional& functional,
                                    Scheme scheme, TimeStepping stepping,
                                    std::span<const double> h_list, double horizon,
                                    const State& x0, std::size_t n_paths,
                                    std::uint64_t master_seed, double reference,
                                    McOptions options = {});

/// Least-squares slope of ln(abs_error) against ln(h), uniform weights.
/// Rows with abs_error == 0 are skipped; FitDegenerate if fewer than 3 remain.
double fit_loglog_slope(std::span<const ConvergenceRow> rows);

/// True when some row's 3 standard errors exceed half the smallest observed
/// abs_error, i.e. MC noise may dominate the bias being fitted.
bool noise_floor_violated(std::span<const ConvergenceRow> rows);

} // namespace sticky
