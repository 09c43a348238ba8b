#pragma once

#include "sticky/model.hpp"
#include "sticky/rates.hpp"
#include "sticky/rng.hpp"

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

namespace sticky {

enum class Record {
    Full,     // every jump
    Terminal, // first and last event only
};

enum class TimeMode {
    Exact,    // exponential holding times
    Discrete, // hazard accumulated on a uniform grid, at most one jump per cell
};

std::string_view to_string(TimeMode mode);
std::optional<TimeMode> parse_time_mode(std::string_view text);

/// How the chain is advanced in time. `steps` is the grid size N and is only
/// read in discrete mode.
struct TimeStepping {
    TimeMode mode = TimeMode::Exact;
    std::size_t steps = 0;

    static TimeStepping exact() { return {TimeMode::Exact, 0}; }
    static TimeStepping discrete(std::size_t n) { return {TimeMode::Discrete, n}; }
};

struct PathEvent {
    double t;
    State state;
};

/// Piecewise-constant trajectory on [0, horizon]: the state is events[k].state
/// on [events[k].t, events[k+1].t) and the last state holds until the horizon.
struct Path {
    std::vector<PathEvent> events;
    double horizon = 0.0;
    Record record = Record::Full;

    const State& terminal_state() const { return events.back().state; }
};

Path simulate_exact(const StickyModel& model, Scheme scheme, double h, double horizon,
                    const State& x0, RngStream& rng, Record record = Record::Full);

/// Discrete-time variant on the grid t_i = i T / N; a jump drawn in cell i is
/// placed at t_{i+1}.
Path simulate_discrete(const StickyModel& model, Scheme scheme, double h, std::size_t steps,
                       double horizon, const State& x0, RngStream& rng,
                       Record record = Record::Full);

/// Same samplers driven by a caller-owned builder (reused across paths).
Path simulate(RateBuilder& builder, TimeStepping stepping, double horizon, const State& x0,
              RngStream& rng, Record record = Record::Full);

double terminal_payoff(const Path& path, const std::function<double(const State&)>& f);

/// exp(-integral_0^T x^1_s ds) for the piecewise-constant path. Requires a
/// full record (InsufficientRecord otherwise).
double discount_integral(const Path& path);

/// Fraction of [0, T] spent with coordinate `coord` exactly at 0. Requires a
/// full record.
double boundary_occupation(const Path& path, std::size_t coord);

// Path functionals evaluated online, without storing the path.
struct TerminalFunctional {
    std::function<double(std::span<const double>)> f;
};
struct BondFunctional {};
struct OccupationFunctional {
    std::size_t coordinate = 0;
};
using Functional = std::variant<TerminalFunctional, BondFunctional, OccupationFunctional>;

/// f(x) = sum of coordinates, the queuing benchmark payoff.
TerminalFunctional terminal_sum();

/// Simulates one path and returns the functional's value on it.
double sample_functional(RateBuilder& builder, TimeStepping stepping, double horizon,
                         const State& x0, RngStream& rng, const Functional& functional);

} // namespace sticky
