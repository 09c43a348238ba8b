#include "sticky/sim.hpp"

#include "sticky/errors.hpp"

#include <cmath>
#include <stdexcept>

namespace sticky {

std::string_view to_string(TimeMode mode) {
    return mode == TimeMode::Exact ? "exact" : "discrete";
}

std::optional<TimeMode> parse_time_mode(std::string_view text) {
    if (text == "exact") {
        return TimeMode::Exact;
    }
    if (text == "discrete") {
        return TimeMode::Discrete;
    }
    return std::nullopt;
}

namespace {

// Inverse-CDF draw over the table's rates with one uniform. Falls back to the
// last entry if roundoff leaves the running sum just short of the target.
std::size_t pick_jump(const RateTable& table, RngStream& rng) {
    const double target = rng.uniform() * table.total_rate();
    const auto rates = table.rates();
    double cumulative = 0.0;
    for (std::size_t k = 0; k + 1 < rates.size(); ++k) {
        cumulative += rates[k];
        if (target < cumulative) {
            return k;
        }
    }
    return rates.size() - 1;
}

void apply_jump(std::span<double> x, std::span<const double> dx, std::size_t sticky_dim) {
    for (std::size_t i = 0; i < x.size(); ++i) {
        x[i] += dx[i];
    }
#ifndef NDEBUG
    if (!in_state_space(x, sticky_dim)) {
        throw std::logic_error("simulate: jump left the state space");
    }
#else
    (void)sticky_dim;
#endif
}

// Observer protocol: start(x0), jump(t, x) after every transition, and
// finish(T, x) once with the state at the horizon.
template <typename Observer>
void run_exact(RateBuilder& builder, double horizon, State& x, RngStream& rng, Observer& obs) {
    const std::size_t sticky_dim = builder.model().sticky_dim();
    double t = 0.0;
    obs.start(x);
    if (horizon > 0.0) {
        for (;;) {
            const RateTable& table = builder.at(x);
            const double total = table.total_rate();
            if (!(total > 0.0)) {
                break;
            }
            const double next = t + rng.exponential(total);
            if (next >= horizon) {
                break;
            }
            t = next;
            apply_jump(x, table.displacement(pick_jump(table, rng)), sticky_dim);
            obs.jump(t, x);
        }
    }
    obs.finish(horizon, x);
}

template <typename Observer>
void run_discrete(RateBuilder& builder, std::size_t steps, double horizon, State& x,
                  RngStream& rng, Observer& obs) {
    if (steps == 0) {
        throw InvalidParameter("simulate_discrete: need at least one time step");
    }
    const std::size_t sticky_dim = builder.model().sticky_dim();
    const double dt = horizon / static_cast<double>(steps);
    obs.start(x);
    const RateTable* table = &builder.at(x);
    double threshold = rng.exponential(1.0);
    double hazard = 0.0;
    for (std::size_t i = 0; i < steps; ++i) {
        hazard += table->total_rate() * dt;
        if (hazard >= threshold && table->total_rate() > 0.0) {
            const double t = horizon * static_cast<double>(i + 1) / static_cast<double>(steps);
            apply_jump(x, table->displacement(pick_jump(*table, rng)), sticky_dim);
            obs.jump(t, x);
            table = &builder.at(x);
            hazard = 0.0;
            threshold = rng.exponential(1.0);
        }
    }
    obs.finish(horizon, x);
}

template <typename Observer>
void run(RateBuilder& builder, TimeStepping stepping, double horizon, const State& x0,
         RngStream& rng, Observer& obs) {
    if (!(horizon >= 0.0) || !std::isfinite(horizon)) {
        throw InvalidParameter("simulate: horizon must be finite and nonnegative");
    }
    if (x0.size() != builder.model().dim() || !in_state_space(x0, builder.model().sticky_dim())) {
        throw InvalidParameter("simulate: initial state lies outside the state space");
    }
    State x = x0;
    if (stepping.mode == TimeMode::Exact) {
        run_exact(builder, horizon, x, rng, obs);
    } else {
        run_discrete(builder, stepping.steps, horizon, x, rng, obs);
    }
}

struct PathRecorder {
    Path& path;

    void start(const State& x) { path.events.push_back({0.0, x}); }
    void jump(double t, const State& x) {
        if (path.record == Record::Terminal && path.events.size() == 2) {
            path.events.back() = {t, x};
            return;
        }
        if (t == path.events.back().t) {
            // Holding time below one ulp of t; keep times strictly increasing.
            path.events.back().state = x;
            return;
        }
        path.events.push_back({t, x});
    }
    void finish(double, const State&) {}
};

struct TerminalObserver {
    const TerminalFunctional& functional;
    double value = 0.0;

    void start(const State&) {}
    void jump(double, const State&) {}
    void finish(double, const State& x) { value = functional.f(x); }
};

// Accumulates the piecewise-constant integral in the same order as
// discount_integral over a recorded path.
struct BondObserver {
    double integral = 0.0;
    double last_t = 0.0;
    double rate = 0.0;

    void start(const State& x) { rate = x[0]; }
    void jump(double t, const State& x) {
        integral += rate * (t - last_t);
        last_t = t;
        rate = x[0];
    }
    void finish(double horizon, const State&) { integral += rate * (horizon - last_t); }
};

struct OccupationObserver {
    std::size_t coord;
    double occupied = 0.0;
    double last_t = 0.0;
    bool at_zero = false;

    void start(const State& x) { at_zero = x[coord] == 0.0; }
    void jump(double t, const State& x) {
        if (at_zero) {
            occupied += t - last_t;
        }
        last_t = t;
        at_zero = x[coord] == 0.0;
    }
    void finish(double horizon, const State&) {
        if (at_zero) {
            occupied += horizon - last_t;
        }
    }
};

void require_full(const Path& path, const char* who) {
    if (path.record != Record::Full) {
        throw InsufficientRecord(std::string(who) + ": needs a full-record path");
    }
    if (path.events.empty()) {
        throw std::invalid_argument(std::string(who) + ": empty path");
    }
}

} // namespace

Path simulate(RateBuilder& builder, TimeStepping stepping, double horizon, const State& x0,
              RngStream& rng, Record record) {
    Path path;
    path.horizon = horizon;
    path.record = record;
    PathRecorder recorder{path};
    run(builder, stepping, horizon, x0, rng, recorder);
    return path;
}

Path simulate_exact(const StickyModel& model, Scheme scheme, double h, double horizon,
                    const State& x0, RngStream& rng, Record record) {
    RateBuilder builder(model, scheme, h);
    return simulate(builder, TimeStepping::exact(), horizon, x0, rng, record);
}

Path simulate_discrete(const StickyModel& model, Scheme scheme, double h, std::size_t steps,
                       double horizon, const State& x0, RngStream& rng, Record record) {
    RateBuilder builder(model, scheme, h);
    return simulate(builder, TimeStepping::discrete(steps), horizon, x0, rng, record);
}

double terminal_payoff(const Path& path, const std::function<double(const State&)>& f) {
    if (path.events.empty()) {
        throw std::invalid_argument("terminal_payoff: empty path");
    }
    return f(path.terminal_state());
}

double discount_integral(const Path& path) {
    require_full(path, "discount_integral");
    BondObserver obs;
    obs.start(path.events.front().state);
    for (std::size_t k = 1; k < path.events.size(); ++k) {
        obs.jump(path.events[k].t, path.events[k].state);
    }
    obs.finish(path.horizon, path.terminal_state());
    return std::exp(-obs.integral);
}

double boundary_occupation(const Path& path, std::size_t coord) {
    require_full(path, "boundary_occupation");
    if (coord >= path.events.front().state.size()) {
        throw std::invalid_argument("boundary_occupation: coordinate out of range");
    }
    if (!(path.horizon > 0.0)) {
        throw std::invalid_argument("boundary_occupation: horizon must be positive");
    }
    OccupationObserver obs{coord};
    obs.start(path.events.front().state);
    for (std::size_t k = 1; k < path.events.size(); ++k) {
        obs.jump(path.events[k].t, path.events[k].state);
    }
    obs.finish(path.horizon, path.terminal_state());
    return obs.occupied / path.horizon;
}

TerminalFunctional terminal_sum() {
    return {[](std::span<const double> x) {
        double s = 0.0;
        for (double v : x) {
            s += v;
        }
        return s;
    }};
}

double sample_functional(RateBuilder& builder, TimeStepping stepping, double horizon,
                         const State& x0, RngStream& rng, const Functional& functional) {
    struct Visitor {
        RateBuilder& builder;
        TimeStepping stepping;
        double horizon;
        const State& x0;
        RngStream& rng;

        double operator()(const TerminalFunctional& f) const {
            TerminalObserver obs{f};
            run(builder, stepping, horizon, x0, rng, obs);
            return obs.value;
        }
        double operator()(const BondFunctional&) const {
            BondObserver obs;
            run(builder, stepping, horizon, x0, rng, obs);
            return std::exp(-obs.integral);
        }
        double operator()(const OccupationFunctional& f) const {
            if (f.coordinate >= x0.size()) {
                throw std::invalid_argument("occupation functional: coordinate out of range");
            }
            if (!(horizon > 0.0)) {
                throw std::invalid_argument("occupation functional: horizon must be positive");
            }
            OccupationObserver obs{f.coordinate};
            run(builder, stepping, horizon, x0, rng, obs);
            return obs.occupied / horizon;
        }
    };
    return std::visit(Visitor{builder, stepping, horizon, x0, rng}, functional);
}

} // namespace sticky
