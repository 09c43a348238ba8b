#pragma once

#include "sticky/linalg.hpp"
#include "sticky/matrix.hpp"
#include "sticky/model.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace sticky {

enum class Scheme {
    FiniteDifference, // coordinate stencils
    Eigen,            // drift direction plus covariance eigenvectors
};

std::string_view to_string(Scheme scheme);
/// Accepts "fd" and "ed".
std::optional<Scheme> parse_scheme(std::string_view text);

/// Local transition law of the chain at one state: a list of jumps
/// (displacement, rate) and the total outflow rate.
///
/// Invariants: rates are strictly positive (zero-rate jumps are never
/// stored), no displacement is zero, and every target lands in the state
/// space with boundary landings exactly at 0.
class RateTable {
public:
    RateTable() = default;
    explicit RateTable(std::size_t dim) : dim_(dim) {}

    std::size_t dim() const noexcept { return dim_; }
    std::size_t size() const noexcept { return rates_.size(); }
    bool empty() const noexcept { return rates_.empty(); }

    std::span<const double> displacement(std::size_t k) const {
        return {displacements_.data() + k * dim_, dim_};
    }
    double rate(std::size_t k) const { return rates_[k]; }
    std::span<const double> rates() const noexcept { return rates_; }
    double total_rate() const noexcept { return total_; }

    /// Appends a jump; zero rates are ignored.
    void add(std::span<const double> displacement, double rate);
    void clear() noexcept;
    void reset(std::size_t dim);

private:
    std::size_t dim_ = 0;
    std::vector<double> displacements_;
    std::vector<double> rates_;
    double total_ = 0.0;
};

/// Step length along direction u from x before a sticky coordinate crosses
/// zero, capped at h: min(h, min{-x^i/u^i : -x^i/u^i > 0, i < sticky_dim}).
double trim_step(std::span<const double> x, std::span<const double> u, double h,
                 std::size_t sticky_dim);

// Rate constructions. x must lie in the state space; the *_interior variants
// require x off the boundary and the *_boundary variants require at least
// one sticky coordinate at exactly 0 (std::invalid_argument otherwise).
//
// Finite-difference tables share one trimmed step across all stencil
// directions and throw NegativeRate when an axis rate is negative (the
// covariance is not diagonally dominant or h is too coarse). Eigen tables
// trim each +-eigenvector pair to a common step and the drift direction on
// its own; their rates are nonnegative for every PSD covariance.
RateTable fd_rates_interior(const StickyModel& model, const State& x, double h);
RateTable fd_rates_boundary(const StickyModel& model, const State& x, double h);
RateTable ed_rates_interior(const StickyModel& model, const State& x, double h);
RateTable ed_rates_boundary(const StickyModel& model, const State& x, double h);

/// Dispatches on the scheme and on whether x is on the boundary.
RateTable build_rates(const StickyModel& model, Scheme scheme, const State& x, double h);

struct LocalMoments {
    Vector first;  // sum of rate * displacement
    Matrix second; // sum of rate * displacement displacement^T
};

LocalMoments local_moments(const RateTable& table);

/// Discrete generator of the chain applied to f at x:
/// sum_k rate_k (f(x + dx_k) - f(x)).
template <typename F>
double apply_generator(const RateTable& table, const State& x, F&& f) {
    const double fx = f(x);
    State y(x.size());
    double acc = 0.0;
    for (std::size_t k = 0; k < table.size(); ++k) {
        const auto dx = table.displacement(k);
        for (std::size_t i = 0; i < x.size(); ++i) {
            y[i] = x[i] + dx[i];
        }
        acc += table.rate(k) * (f(y) - fx);
    }
    return acc;
}

/// Reusable rate constructor for the simulation loop. Holds scratch storage
/// so repeated calls do not allocate, reuses the eigendecomposition when A is
/// constant, and for models with constant interior coefficients returns a
/// precomputed table whenever the state is far enough from the boundary that
/// no trimming or snapping would occur. The returned reference is valid until
/// the next call.
///
/// Not thread safe; use one builder per worker.
class RateBuilder {
public:
    RateBuilder(const StickyModel& model, Scheme scheme, double h);

    const RateTable& at(std::span<const double> x);

    const StickyModel& model() const noexcept { return *model_; }
    Scheme scheme() const noexcept { return scheme_; }
    double h() const noexcept { return h_; }

    /// Outflow rate of the untrimmed interior table, when cached.
    std::optional<double> untrimmed_total_rate() const;

    struct Workspace {
        Vector drift;
        Matrix cov;
        Vector dir;
        Vector plus;
        Vector minus;
        std::vector<std::size_t> active;
        std::vector<std::size_t> free;
    };

private:
    bool cache_applies(std::span<const double> x) const;

    const StickyModel* model_;
    Scheme scheme_;
    double h_;
    std::optional<EigenPairs> interior_eigen_;
    std::optional<RateTable> interior_table_;
    // Per sticky coordinate: most negative direction component among the
    // trimming candidates and most negative displacement in the cached table.
    Vector min_direction_;
    Vector min_displacement_;
    Workspace work_;
    RateTable scratch_;
};

} // namespace sticky
