#include "sticky/mc.hpp"

#include "sticky/errors.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <thread>

namespace sticky {

namespace {

// Neumaier summation.
class CompensatedSum {
public:
    void add(double v) {
        const double t = sum_ + v;
        if (std::abs(sum_) >= std::abs(v)) {
            comp_ += (sum_ - t) + v;
        } else {
            comp_ += (v - t) + sum_;
        }
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

std::size_t resolve_workers(std::size_t requested, std::size_t n_paths) {
    std::size_t w = requested;
    if (w == 0) {
        w = std::max<std::size_t>(1, std::thread::hardware_concurrency());
    }
    return std::min(w, std::max<std::size_t>(1, n_paths));
}

void validate_run(double h, double horizon, const State& x0, const StickyModel& model,
                  std::size_t n_paths) {
    if (n_paths < 2) {
        throw InvalidParameter("estimate: need at least 2 paths");
    }
    if (!(h > 0.0) || !std::isfinite(h)) {
        throw InvalidParameter("estimate: h must be positive and finite");
    }
    if (!(horizon > 0.0) || !std::isfinite(horizon)) {
        throw InvalidParameter("estimate: T must be positive and finite");
    }
    if (x0.size() != model.dim() || !in_state_space(x0, model.sticky_dim())) {
        throw InvalidParameter("estimate: x0 lies outside the state space");
    }
}

} // namespace

std::size_t auto_discrete_steps(const StickyModel& model, Scheme scheme, double h,
                                double horizon, const State& x0) {
    RateBuilder builder(model, scheme, h);
    const auto cached = builder.untrimmed_total_rate();
    const double a0 = cached ? *cached : builder.at(x0).total_rate();
    const double n = std::ceil(4.0 * horizon * a0);
    if (!std::isfinite(n) || n > 1e15) {
        throw InvalidParameter("auto_discrete_steps: grid size out of range");
    }
    return std::max<std::size_t>(1, static_cast<std::size_t>(n));
}

TimeStepping resolve_stepping(const StickyModel& model, Scheme scheme, TimeStepping stepping,
                              double h, double horizon, const State& x0) {
    if (stepping.mode == TimeMode::Discrete && stepping.steps == 0) {
        stepping.steps = auto_discrete_steps(model, scheme, h, horizon, x0);
    }
    return stepping;
}

Estimate summarize(std::span<const double> values) {
    Estimate e;
    e.n_paths = values.size();
    if (values.empty()) {
        throw InvalidParameter("summarize: empty sample");
    }
    CompensatedSum total;
    for (double v : values) {
        total.add(v);
    }
    const double n = static_cast<double>(values.size());
    e.mean = total.value() / n;
    if (values.size() > 1) {
        CompensatedSum squares;
        for (double v : values) {
            const double d = v - e.mean;
            squares.add(d * d);
        }
        const double variance = squares.value() / (n - 1.0);
        e.std_error = std::sqrt(variance / n);
    }
    if (!std::isfinite(e.mean) || !std::isfinite(e.std_error)) {
        throw ModelEvaluation("estimate: non-finite sample mean or variance");
    }
    return e;
}

std::vector<double> sample_paths(const StickyModel& model, const Functional& functional,
                                 Scheme scheme, TimeStepping stepping, double h, double horizon,
                                 const State& x0, std::size_t n_paths, std::uint64_t master_seed,
                                 McOptions options) {
    validate_run(h, horizon, x0, model, n_paths);
    stepping = resolve_stepping(model, scheme, stepping, h, horizon, x0);
    // Fail fast on parameter problems (bad h, non-PSD A at x0, ...) before
    // spawning workers.
    RateBuilder probe(model, scheme, h);
    probe.at(x0);

    std::vector<double> values(n_paths);
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr first_error;
    std::mutex error_mutex;

    auto worker = [&](RateBuilder* reuse) {
        std::optional<RateBuilder> own;
        try {
            if (reuse == nullptr) {
                own.emplace(model, scheme, h);
                reuse = &*own;
            }
            constexpr std::size_t chunk = 16;
            while (!failed.load(std::memory_order_relaxed)) {
                const std::size_t begin = next.fetch_add(chunk, std::memory_order_relaxed);
                if (begin >= n_paths) {
                    break;
                }
                const std::size_t end = std::min(n_paths, begin + chunk);
                for (std::size_t k = begin; k < end; ++k) {
                    RngStream rng(master_seed, k);
                    values[k] = sample_functional(*reuse, stepping, horizon, x0, rng, functional);
                }
            }
        } catch (...) {
            std::lock_guard lock(error_mutex);
            if (!first_error) {
                first_error = std::current_exception();
            }
            failed.store(true);
        }
    };

    const std::size_t workers = resolve_workers(options.workers, n_paths);
    if (workers == 1) {
        worker(&probe);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back(worker, nullptr);
        }
        for (auto& t : pool) {
            t.join();
        }
    }
    if (first_error) {
        std::rethrow_exception(first_error);
    }
    return values;
}

Estimate estimate(const StickyModel& model, const Functional& functional, Scheme scheme,
                  TimeStepping stepping, double h, double horizon, const State& x0,
                  std::size_t n_paths, std::uint64_t master_seed, McOptions options) {
    const auto values = sample_paths(model, functional, scheme, stepping, h, horizon, x0,
                                     n_paths, master_seed, options);
    Estimate e = summarize(values);
    e.scheme = scheme;
    e.stepping = resolve_stepping(model, scheme, stepping, h, horizon, x0);
    e.h = h;
    e.seed = master_seed;
    return e;
}

std::vector<ConvergenceRow> convergence_rows(const StickyModel& model,
                                             const Functional& functional, Scheme scheme,
                                             TimeStepping stepping, std::span<const double> h_list,
                                             double horizon, const State& x0,
                                             std::size_t n_paths, std::uint64_t master_seed,
                                             double reference, McOptions options) {
    if (h_list.size() < 3) {
        throw InvalidParameter("convergence_study: need at least 3 values of h");
    }
    for (std::size_t i = 0; i < h_list.size(); ++i) {
        if (!(h_list[i] > 0.0) || !std::isfinite(h_list[i])) {
            throw InvalidParameter("convergence_study: h values must be positive");
        }
        for (std::size_t j = 0; j < i; ++j) {
            if (h_list[i] == h_list[j]) {
                throw InvalidParameter("convergence_study: h values must be distinct");
            }
        }
    }
    if (!std::isfinite(reference)) {
        throw InvalidParameter("convergence_study: reference must be finite");
    }
    std::vector<ConvergenceRow> rows;
    rows.reserve(h_list.size());
    for (double h : h_list) {
        const auto start = std::chrono::steady_clock::now();
        ConvergenceRow row;
        row.h = h;
        row.estimate = estimate(model, functional, scheme, stepping, h, horizon, x0, n_paths,
                                master_seed, options);
        row.abs_error = std::abs(row.estimate.mean - reference);
        row.seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        rows.push_back(row);
    }
    return rows;
}

ConvergenceResult convergence_study(const StickyModel& model, const Functional& functional,
                                    Scheme scheme, TimeStepping stepping,
                                    std::span<const double> h_list, double horizon,
                                    const State& x0, std::size_t n_paths,
                                    std::uint64_t master_seed, double reference,
                                    McOptions options) {
    ConvergenceResult result;
    result.rows = convergence_rows(model, functional, scheme, stepping, h_list, horizon, x0,
                                   n_paths, master_seed, reference, options);
    result.slope = fit_loglog_slope(result.rows);
    return result;
}

double fit_loglog_slope(std::span<const ConvergenceRow> rows) {
    std::vector<double> lx;
    std::vector<double> ly;
    for (const auto& r : rows) {
        if (r.abs_error > 0.0 && r.h > 0.0) {
            lx.push_back(std::log(r.h));
            ly.push_back(std::log(r.abs_error));
        }
    }
    if (lx.size() < 3) {
        throw FitDegenerate("fit_loglog_slope: fewer than 3 rows with nonzero error");
    }
    const double n = static_cast<double>(lx.size());
    double mx = 0.0;
    double my = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        mx += lx[i];
        my += ly[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0;
    double sxy = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
    }
    if (!(sxx > 0.0)) {
        throw FitDegenerate("fit_loglog_slope: h values do not vary");
    }
    return sxy / sxx;
}

bool noise_floor_violated(std::span<const ConvergenceRow> rows) {
    double smallest = std::numeric_limits<double>::infinity();
    for (const auto& r : rows) {
        smallest = std::min(smallest, r.abs_error);
    }
    for (const auto& r : rows) {
        if (3.0 * r.estimate.std_error >= 0.5 * smallest) {
            return true;
        }
    }
    return false;
}

} // namespace sticky
