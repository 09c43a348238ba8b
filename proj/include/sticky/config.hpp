#pragma once

#include "sticky/matrix.hpp"
#include "sticky/mc.hpp"
#include "sticky/model.hpp"
#include "sticky/rates.hpp"
#include "sticky/sim.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace sticky {

enum class ModelKind { Queuing, StickyOu };
enum class FunctionalKind { TerminalSum, Bond, Occupation };

/// Flat run description read from `key = value` text.
///
/// Keys: model, d, eta, sigma (queuing); K, theta, Sigma, kappa2, theta2,
/// sigma2, nu (sticky_ou); scheme, time_mode, N, h, h_list, T, x0, n_paths,
/// seed, functional, reference, workers. N = auto (stored as 0) picks
/// ceil(4 T a0) from the untrimmed outflow rate.
struct RunConfig {
    ModelKind model = ModelKind::Queuing;
    Matrix eta = default_queuing_eta();
    double sigma = 1.0;
    StickyOuParams ou;

    Scheme scheme = Scheme::Eigen;
    TimeMode time_mode = TimeMode::Exact;
    std::size_t steps = 0;
    std::optional<double> h;
    std::vector<double> h_list;
    double T = 1.0;
    State x0;
    std::size_t n_paths = 10000;
    std::uint64_t seed = 0;
    FunctionalKind functional = FunctionalKind::TerminalSum;
    std::optional<double> reference;
    std::size_t workers = 0;

    std::size_t dim() const;
    bool operator==(const RunConfig&) const = default;
};

using Override = std::pair<std::string, std::string>;

/// Parses and validates config text. `overrides` replace (or add) keys
/// after the file is read. Throws ConfigError carrying the line number for
/// syntax problems and the field name for validation problems.
RunConfig parse_config(std::string_view text, const std::vector<Override>& overrides = {});

/// Splits "key=value" as given to --set.
Override parse_override(std::string_view text);

/// Canonical text form; parse_config(serialize_config(c)) == c.
std::string serialize_config(const RunConfig& config);

StickyModel build_model(const RunConfig& config);
Functional build_functional(const RunConfig& config);
/// N = auto maps to a discrete stepping with steps == 0, which the mc
/// functions resolve per h.
TimeStepping build_stepping(const RunConfig& config);

std::string_view to_string(ModelKind kind);
std::string_view to_string(FunctionalKind kind);

/// Decimal form with 17 significant digits (round-trips exactly).
std::string format_double(double v);

} // namespace sticky
