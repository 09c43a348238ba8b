#include "sticky/rates.hpp"

#include "sticky/errors.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace sticky {

NegativeRate::NegativeRate(std::size_t axis, double value)
    : Error("negative transition rate " + std::to_string(value) + " on axis " +
            std::to_string(axis) +
            " (covariance not diagonally dominant, or h above the dominance threshold)"),
      axis_(axis), value_(value) {}

std::string_view to_string(Scheme scheme) {
    switch (scheme) {
    case Scheme::FiniteDifference:
        return "fd";
    case Scheme::Eigen:
        return "ed";
    }
    return "?";
}

std::optional<Scheme> parse_scheme(std::string_view text) {
    if (text == "fd") {
        return Scheme::FiniteDifference;
    }
    if (text == "ed") {
        return Scheme::Eigen;
    }
    return std::nullopt;
}

void RateTable::add(std::span<const double> displacement, double rate) {
    if (displacement.size() != dim_) {
        throw std::invalid_argument("RateTable::add: displacement has wrong dimension");
    }
    if (rate == 0.0) {
        return;
    }
    if (!(rate > 0.0) || !std::isfinite(rate)) {
        throw std::logic_error("RateTable::add: rate must be positive and finite");
    }
    if (std::all_of(displacement.begin(), displacement.end(), [](double v) { return v == 0.0; })) {
        throw std::logic_error("RateTable::add: zero displacement");
    }
    for (double v : displacement) {
        displacements_.push_back(v + 0.0); // no negative zeros
    }
    rates_.push_back(rate);
    total_ += rate;
}

void RateTable::clear() noexcept {
    displacements_.clear();
    rates_.clear();
    total_ = 0.0;
}

void RateTable::reset(std::size_t dim) {
    clear();
    dim_ = dim;
}

double trim_step(std::span<const double> x, std::span<const double> u, double h,
                 std::size_t sticky_dim) {
    double step = h;
    const std::size_t n = std::min(sticky_dim, std::min(x.size(), u.size()));
    for (std::size_t i = 0; i < n; ++i) {
        if (u[i] != 0.0) {
            const double root = -x[i] / u[i];
            if (root > 0.0 && root < step) {
                step = root;
            }
        }
    }
    return step;
}

namespace {

constexpr double kSnapTolerance = 1e-12;   // relative to h
constexpr double kRoundoffTolerance = 1e-12; // relative to the rate's scale
constexpr double kZeroDrift = 1e-14;

using Workspace = RateBuilder::Workspace;

void prepare(Workspace& w, std::size_t d) {
    w.drift.resize(d);
    if (w.cov.rows() != d) {
        w.cov = Matrix(d, d);
    }
    w.dir.resize(d);
    w.plus.resize(d);
    w.minus.resize(d);
}

double norm(std::span<const double> v) {
    double s = 0.0;
    for (double e : v) {
        s += e * e;
    }
    return std::sqrt(s);
}

// Appends the jump x -> x + step * dir, landing exactly on zero in any sticky
// coordinate that comes within the snap tolerance.
void add_single(RateTable& out, std::span<const double> x, std::span<const double> dir,
                double step, double rate, std::size_t sticky_dim, double tol, Workspace& w) {
    for (std::size_t k = 0; k < x.size(); ++k) {
        w.plus[k] = step * dir[k];
    }
    for (std::size_t k = 0; k < sticky_dim; ++k) {
        if (std::abs(x[k] + w.plus[k]) <= tol) {
            w.plus[k] = -x[k];
        }
    }
    out.add(w.plus, rate);
}

// Appends x -> x + step * dir and x -> x - step * dir. Snapping on one side is
// mirrored on the other so the two displacements stay exact negatives.
void add_pair(RateTable& out, std::span<const double> x, std::span<const double> dir, double step,
              double rate_plus, double rate_minus, std::size_t sticky_dim, double tol,
              Workspace& w) {
    for (std::size_t k = 0; k < x.size(); ++k) {
        w.plus[k] = step * dir[k];
        w.minus[k] = -w.plus[k];
    }
    for (std::size_t k = 0; k < sticky_dim; ++k) {
        if (std::abs(x[k] + w.plus[k]) <= tol) {
            w.plus[k] = -x[k];
            w.minus[k] = x[k];
        } else if (std::abs(x[k] + w.minus[k]) <= tol) {
            w.minus[k] = -x[k];
            w.plus[k] = x[k];
        }
    }
    out.add(w.plus, rate_plus);
    out.add(w.minus, rate_minus);
}

// Axis rates can land a few ulps below zero exactly at the dominance
// threshold; those are treated as zero.
double checked_axis_rate(double value, double scale, std::size_t axis) {
    if (value >= 0.0) {
        return value;
    }
    if (value >= -kRoundoffTolerance * scale) {
        return 0.0;
    }
    throw NegativeRate(axis, value);
}

void set_axis(std::span<double> dir, std::size_t i) {
    std::fill(dir.begin(), dir.end(), 0.0);
    dir[i] = 1.0;
}

void set_cross(std::span<double> dir, std::size_t i, std::size_t j, double sign_j) {
    std::fill(dir.begin(), dir.end(), 0.0);
    dir[i] = 1.0;
    dir[j] = sign_j;
}

// Minimum trimmed step over +-dir.
double symmetric_trim(std::span<const double> x, std::span<const double> dir, double h,
                      std::size_t sticky_dim, Workspace& w) {
    for (std::size_t k = 0; k < dir.size(); ++k) {
        w.minus[k] = -dir[k];
    }
    return std::min(trim_step(x, dir, h, sticky_dim), trim_step(x, w.minus, h, sticky_dim));
}

void require_dim(const StickyModel& model, std::span<const double> x) {
    if (x.size() != model.dim()) {
        throw std::invalid_argument("rates: state has wrong dimension");
    }
    if (!in_state_space(x, model.sticky_dim())) {
        throw std::invalid_argument("rates: state lies outside the state space");
    }
}

// The FD stencil over a set of free coordinates (all of them in the interior,
// the complement of the active set on the boundary): central axis rates for
// drift and diagonal, signed cross stencils for the off-diagonal. When
// `upwind_fallback` is set, an axis whose central rate would be negative
// carries the drift one-sided instead.
void fd_stencil(std::span<const double> x, std::span<const std::size_t> free, double delta,
                std::span<const double> drift, const Matrix& cov, bool upwind_fallback,
                std::size_t sticky_dim, double tol, Workspace& w, RateTable& out) {
    const double inv2d = 1.0 / (2.0 * delta);
    const double inv2d2 = 1.0 / (2.0 * delta * delta);
    std::span<double> dir = w.dir;
    for (std::size_t i : free) {
        double off = 0.0;
        for (std::size_t j : free) {
            if (j != i) {
                off += std::abs(cov(i, j));
            }
        }
        const double diffusion = (cov(i, i) - off) * inv2d2;
        const double scale = std::abs(drift[i]) * inv2d + (cov(i, i) + off) * inv2d2;
        double plus = drift[i] * inv2d + diffusion;
        double minus = -drift[i] * inv2d + diffusion;
        if (upwind_fallback && (plus < 0.0 || minus < 0.0)) {
            plus = std::max(drift[i], 0.0) / delta + diffusion;
            minus = std::max(-drift[i], 0.0) / delta + diffusion;
        }
        plus = checked_axis_rate(plus, scale, i);
        minus = checked_axis_rate(minus, scale, i);
        set_axis(dir, i);
        add_pair(out, x, dir, delta, plus, minus, sticky_dim, tol, w);
    }
    for (std::size_t a = 0; a < free.size(); ++a) {
        for (std::size_t b = a + 1; b < free.size(); ++b) {
            const std::size_t i = free[a];
            const std::size_t j = free[b];
            const double c = cov(i, j);
            if (c > 0.0) {
                set_cross(dir, i, j, 1.0);
                add_pair(out, x, dir, delta, c * inv2d2, c * inv2d2, sticky_dim, tol, w);
            } else if (c < 0.0) {
                set_cross(dir, i, j, -1.0);
                add_pair(out, x, dir, delta, -c * inv2d2, -c * inv2d2, sticky_dim, tol, w);
            }
        }
    }
}

// Shared FD step: the minimum trimmed step over every stencil direction the
// free coordinates can use, plus +e_i for the active coordinates.
double fd_shared_step(std::span<const double> x, std::span<const std::size_t> free,
                      std::span<const std::size_t> active, double h, std::size_t sticky_dim,
                      Workspace& w) {
    std::span<double> dir = w.dir;
    double delta = h;
    auto both = [&](std::span<const double> v) {
        delta = std::min(delta, symmetric_trim(x, v, h, sticky_dim, w));
    };
    for (std::size_t i : active) {
        set_axis(dir, i);
        delta = std::min(delta, trim_step(x, dir, h, sticky_dim));
    }
    for (std::size_t i : free) {
        set_axis(dir, i);
        both(dir);
    }
    for (std::size_t a = 0; a < free.size(); ++a) {
        for (std::size_t b = a + 1; b < free.size(); ++b) {
            set_cross(dir, free[a], free[b], 1.0);
            both(dir);
            set_cross(dir, free[a], free[b], -1.0);
            both(dir);
        }
    }
    return delta;
}

void split_coordinates(std::span<const double> x, std::size_t sticky_dim,
                       std::vector<std::size_t>& active, std::vector<std::size_t>& free) {
    active.clear();
    free.clear();
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (i < sticky_dim && x[i] == 0.0) {
            active.push_back(i);
        } else {
            free.push_back(i);
        }
    }
}

void fd_interior(const StickyModel& model, std::span<const double> x, double h, Workspace& w,
                 RateTable& out) {
    const std::size_t d = model.dim();
    prepare(w, d);
    out.reset(d);
    model.drift(x, w.drift);
    model.covariance(x, w.cov);
    split_coordinates(x, model.sticky_dim(), w.active, w.free);
    const double delta = fd_shared_step(x, w.free, w.active, h, model.sticky_dim(), w);
    fd_stencil(x, w.free, delta, w.drift, w.cov, false, model.sticky_dim(), kSnapTolerance * h, w, out);
}

void fd_boundary(const StickyModel& model, std::span<const double> x, double h, Workspace& w,
                 RateTable& out) {
    const std::size_t d = model.dim();
    prepare(w, d);
    out.reset(d);
    model.boundary_drift(x, w.drift);
    model.boundary_covariance(x, w.cov);
    split_coordinates(x, model.sticky_dim(), w.active, w.free);
    const double delta = fd_shared_step(x, w.free, w.active, h, model.sticky_dim(), w);
    const double tol = kSnapTolerance * h;

    for (std::size_t i : w.active) {
        if (w.drift[i] < 0.0) {
            throw NegativeRate(i, w.drift[i] / delta);
        }
        set_axis(w.dir, i);
        add_single(out, x, w.dir, delta, w.drift[i] / delta, model.sticky_dim(), tol, w);
    }
    fd_stencil(x, w.free, delta, w.drift, w.cov, true, model.sticky_dim(), tol, w, out);
}

void ed_from_eigen(std::span<const double> x, double h, const EigenPairs& eigen,
                   std::span<const double> drift, std::size_t sticky_dim, Workspace& w,
                   RateTable& out) {
    const std::size_t d = x.size();
    const double tol = kSnapTolerance * h;
    for (std::size_t c = 0; c < d; ++c) {
        const double lambda = eigen.values[c];
        if (!(lambda > 0.0)) {
            continue;
        }
        for (std::size_t k = 0; k < d; ++k) {
            w.dir[k] = eigen.vectors(k, c);
        }
        const double delta = symmetric_trim(x, w.dir, h, sticky_dim, w);
        const double rate = lambda / (2.0 * delta * delta);
        add_pair(out, x, w.dir, delta, rate, rate, sticky_dim, tol, w);
    }
    if (norm(drift) >= kZeroDrift) {
        const double delta = trim_step(x, drift, h, sticky_dim);
        add_single(out, x, drift, delta, 1.0 / delta, sticky_dim, tol, w);
    }
}

void ed_interior(const StickyModel& model, std::span<const double> x, double h,
                 const EigenPairs* cached, Workspace& w, RateTable& out) {
    const std::size_t d = model.dim();
    prepare(w, d);
    out.reset(d);
    model.drift(x, w.drift);
    if (cached != nullptr) {
        ed_from_eigen(x, h, *cached, w.drift, model.sticky_dim(), w, out);
    } else {
        model.covariance(x, w.cov);
        const EigenPairs eigen = eigh_symmetric(w.cov);
        ed_from_eigen(x, h, eigen, w.drift, model.sticky_dim(), w, out);
    }
}

void ed_boundary(const StickyModel& model, std::span<const double> x, double h, Workspace& w,
                 RateTable& out) {
    const std::size_t d = model.dim();
    prepare(w, d);
    out.reset(d);
    model.boundary_drift(x, w.drift);
    model.boundary_covariance(x, w.cov);
    const EigenPairs eigen = eigh_symmetric(w.cov);
    ed_from_eigen(x, h, eigen, w.drift, model.sticky_dim(), w, out);
}

void require_h(double h) {
    if (!(h > 0.0) || !std::isfinite(h)) {
        throw InvalidParameter("rates: h must be positive and finite");
    }
}

void require_interior(const StickyModel& model, const State& x, double h) {
    require_h(h);
    require_dim(model, x);
    if (on_boundary(x, model.sticky_dim())) {
        throw std::invalid_argument("rates: interior construction called on a boundary state");
    }
}

void require_boundary(const StickyModel& model, const State& x, double h) {
    require_h(h);
    require_dim(model, x);
    if (!on_boundary(x, model.sticky_dim())) {
        throw std::invalid_argument("rates: boundary construction called on an interior state");
    }
}

} // namespace

RateTable fd_rates_interior(const StickyModel& model, const State& x, double h) {
    require_interior(model, x, h);
    Workspace w;
    RateTable out;
    fd_interior(model, x, h, w, out);
    return out;
}

RateTable fd_rates_boundary(const StickyModel& model, const State& x, double h) {
    require_boundary(model, x, h);
    Workspace w;
    RateTable out;
    fd_boundary(model, x, h, w, out);
    return out;
}

RateTable ed_rates_interior(const StickyModel& model, const State& x, double h) {
    require_interior(model, x, h);
    Workspace w;
    RateTable out;
    ed_interior(model, x, h, nullptr, w, out);
    return out;
}

RateTable ed_rates_boundary(const StickyModel& model, const State& x, double h) {
    require_boundary(model, x, h);
    Workspace w;
    RateTable out;
    ed_boundary(model, x, h, w, out);
    return out;
}

RateTable build_rates(const StickyModel& model, Scheme scheme, const State& x, double h) {
    require_h(h);
    require_dim(model, x);
    const bool boundary = on_boundary(x, model.sticky_dim());
    switch (scheme) {
    case Scheme::FiniteDifference:
        return boundary ? fd_rates_boundary(model, x, h) : fd_rates_interior(model, x, h);
    case Scheme::Eigen:
        return boundary ? ed_rates_boundary(model, x, h) : ed_rates_interior(model, x, h);
    }
    throw std::invalid_argument("build_rates: unknown scheme");
}

LocalMoments local_moments(const RateTable& table) {
    const std::size_t d = table.dim();
    LocalMoments m{Vector(d, 0.0), Matrix(d, d)};
    for (std::size_t k = 0; k < table.size(); ++k) {
        const auto dx = table.displacement(k);
        const double r = table.rate(k);
        for (std::size_t i = 0; i < d; ++i) {
            m.first[i] += r * dx[i];
            for (std::size_t j = 0; j < d; ++j) {
                m.second(i, j) += r * dx[i] * dx[j];
            }
        }
    }
    return m;
}

RateBuilder::RateBuilder(const StickyModel& model, Scheme scheme, double h)
    : model_(&model), scheme_(scheme), h_(h), scratch_(model.dim()) {
    require_h(h);
    const std::size_t d = model.dim();
    const std::size_t ds = model.sticky_dim();
    prepare(work_, d);

    if (scheme_ == Scheme::Eigen && model.traits().constant_covariance) {
        // Any interior point will do; the covariance does not depend on it.
        State probe(d, 1.0);
        model.covariance(probe, work_.cov);
        interior_eigen_ = eigh_symmetric(work_.cov);
    }

    if (!model.constant_interior()) {
        return;
    }
    // Far enough out that nothing is trimmed or snapped.
    State far(d, 0.0);
    for (std::size_t i = 0; i < ds; ++i) {
        far[i] = 1e6 * std::max(1.0, h);
    }
    RateTable table(d);
    if (scheme_ == Scheme::FiniteDifference) {
        fd_interior(model, far, h, work_, table);
    } else {
        ed_interior(model, far, h, &*interior_eigen_, work_, table);
    }

    min_direction_.assign(ds, 0.0);
    min_displacement_.assign(ds, 0.0);
    if (scheme_ == Scheme::FiniteDifference) {
        std::fill(min_direction_.begin(), min_direction_.end(), -1.0);
    } else {
        for (std::size_t c = 0; c < d; ++c) {
            if (!(interior_eigen_->values[c] > 0.0)) {
                continue;
            }
            for (std::size_t k = 0; k < ds; ++k) {
                min_direction_[k] = std::min(min_direction_[k], -std::abs(interior_eigen_->vectors(k, c)));
            }
        }
        model.drift(far, work_.drift);
        if (norm(work_.drift) >= kZeroDrift) {
            for (std::size_t k = 0; k < ds; ++k) {
                min_direction_[k] = std::min(min_direction_[k], work_.drift[k]);
            }
        }
    }
    for (std::size_t e = 0; e < table.size(); ++e) {
        const auto dx = table.displacement(e);
        for (std::size_t k = 0; k < ds; ++k) {
            min_displacement_[k] = std::min(min_displacement_[k], dx[k]);
        }
    }
    interior_table_ = std::move(table);
}

bool RateBuilder::cache_applies(std::span<const double> x) const {
    const double tol = kSnapTolerance * h_;
    for (std::size_t k = 0; k < min_direction_.size(); ++k) {
        if (min_direction_[k] < 0.0 && !(-x[k] / min_direction_[k] >= h_)) {
            return false;
        }
        if (min_displacement_[k] < 0.0 && !(x[k] + min_displacement_[k] > tol)) {
            return false;
        }
    }
    return true;
}

const RateTable& RateBuilder::at(std::span<const double> x) {
    if (on_boundary(x, model_->sticky_dim())) {
        if (scheme_ == Scheme::FiniteDifference) {
            fd_boundary(*model_, x, h_, work_, scratch_);
        } else {
            ed_boundary(*model_, x, h_, work_, scratch_);
        }
        return scratch_;
    }
    if (interior_table_ && cache_applies(x)) {
        return *interior_table_;
    }
    if (scheme_ == Scheme::FiniteDifference) {
        fd_interior(*model_, x, h_, work_, scratch_);
    } else {
        ed_interior(*model_, x, h_, interior_eigen_ ? &*interior_eigen_ : nullptr, work_, scratch_);
    }
    return scratch_;
}

std::optional<double> RateBuilder::untrimmed_total_rate() const {
    if (interior_table_) {
        return interior_table_->total_rate();
    }
    return std::nullopt;
}

} // namespace sticky
