#include "sticky/model.hpp"

#include "sticky/errors.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>

namespace sticky {

namespace {

void require_finite(std::span<const double> values, const std::string& model, const char* what) {
    for (double v : values) {
        if (!std::isfinite(v)) {
            throw ModelEvaluation(model + ": non-finite " + what);
        }
    }
}

} // namespace

StickyModel::StickyModel(std::string name, std::size_t dim, std::size_t sticky_dim,
                         Coefficients coefficients, Traits traits)
    : name_(std::move(name)), dim_(dim), sticky_dim_(sticky_dim),
      coefficients_(std::move(coefficients)), traits_(traits) {
    if (dim_ == 0) {
        throw InvalidParameter("StickyModel: dimension must be at least 1");
    }
    if (sticky_dim_ == 0 || sticky_dim_ > dim_) {
        throw InvalidParameter("StickyModel: sticky dimension must lie in [1, dim]");
    }
    if (!coefficients_.drift || !coefficients_.covariance || !coefficients_.boundary_drift ||
        !coefficients_.boundary_covariance) {
        throw InvalidParameter("StickyModel: every coefficient callback must be set");
    }
}

void StickyModel::check_dim(std::span<const double> x) const {
    if (x.size() != dim_) {
        throw std::invalid_argument(name_ + ": state has wrong dimension");
    }
}

void StickyModel::drift(std::span<const double> x, std::span<double> out) const {
    coefficients_.drift(x, out);
    require_finite(out, name_, "drift");
}

void StickyModel::covariance(std::span<const double> x, Matrix& out) const {
    coefficients_.covariance(x, out);
    require_finite(out.data(), name_, "covariance");
}

void StickyModel::boundary_drift(std::span<const double> x, std::span<double> out) const {
#ifndef NDEBUG
    if (!on_boundary(x, sticky_dim_)) {
        throw std::logic_error(name_ + ": boundary drift evaluated at an interior state");
    }
#endif
    coefficients_.boundary_drift(x, out);
    require_finite(out, name_, "boundary drift");
}

void StickyModel::boundary_covariance(std::span<const double> x, Matrix& out) const {
#ifndef NDEBUG
    if (!on_boundary(x, sticky_dim_)) {
        throw std::logic_error(name_ + ": boundary covariance evaluated at an interior state");
    }
#endif
    coefficients_.boundary_covariance(x, out);
    require_finite(out.data(), name_, "boundary covariance");
}

Vector StickyModel::drift(const State& x) const {
    check_dim(x);
    Vector out(dim_);
    drift(std::span<const double>(x), std::span<double>(out));
    return out;
}

Matrix StickyModel::covariance(const State& x) const {
    check_dim(x);
    Matrix out(dim_, dim_);
    covariance(std::span<const double>(x), out);
    return out;
}

Vector StickyModel::boundary_drift(const State& x) const {
    check_dim(x);
    Vector out(dim_);
    boundary_drift(std::span<const double>(x), std::span<double>(out));
    return out;
}

Matrix StickyModel::boundary_covariance(const State& x) const {
    check_dim(x);
    Matrix out(dim_, dim_);
    boundary_covariance(std::span<const double>(x), out);
    return out;
}

std::vector<std::size_t> active_boundary_set(std::span<const double> x, std::size_t sticky_dim) {
    std::vector<std::size_t> active;
    for (std::size_t i = 0; i < sticky_dim && i < x.size(); ++i) {
        if (x[i] == 0.0) {
            active.push_back(i);
        }
    }
    return active;
}

bool on_boundary(std::span<const double> x, std::size_t sticky_dim) {
    for (std::size_t i = 0; i < sticky_dim && i < x.size(); ++i) {
        if (x[i] == 0.0) {
            return true;
        }
    }
    return false;
}

bool in_state_space(std::span<const double> x, std::size_t sticky_dim) {
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!std::isfinite(x[i]) || (i < sticky_dim && x[i] < 0.0)) {
            return false;
        }
    }
    return true;
}

Matrix default_queuing_eta() {
    return Matrix{{0.01, 0.99}, {0.90, 0.95}};
}

StickyModel make_queuing_model(const Matrix& eta, double sigma) {
    const std::size_t d = eta.rows();
    if (d < 2 || !eta.square()) {
        throw InvalidParameter("queuing model: eta must be a d-by-d matrix with d >= 2");
    }
    for (double v : eta.data()) {
        if (!(v > 0.0) || !std::isfinite(v)) {
            throw InvalidParameter("queuing model: every eta entry must be positive");
        }
    }
    if (!(sigma > 0.0) || !std::isfinite(sigma)) {
        throw InvalidParameter("queuing model: sigma must be positive");
    }

    Matrix cov(d, d);
    const double s2 = sigma * sigma;
    for (std::size_t i = 0; i < d; ++i) {
        cov(i, i) = 2.0 * s2;
        if (i + 1 < d) {
            cov(i, i + 1) = -s2;
            cov(i + 1, i) = -s2;
        }
    }

    StickyModel::Coefficients c;
    c.drift = [](std::span<const double>, std::span<double> out) {
        std::fill(out.begin(), out.end(), 0.0);
    };
    c.covariance = [cov](std::span<const double>, Matrix& out) { out = cov; };
    c.boundary_drift = [eta, d](std::span<const double> x, std::span<double> out) {
        std::fill(out.begin(), out.end(), 0.0);
        for (std::size_t i = 0; i < d; ++i) {
            if (x[i] == 0.0) {
                for (std::size_t k = 0; k < d; ++k) {
                    out[k] += eta(k, i);
                }
            }
        }
    };
    c.boundary_covariance = [](std::span<const double>, Matrix& out) {
        std::fill(out.data().begin(), out.data().end(), 0.0);
    };
    return StickyModel("queuing", d, d, std::move(c), {.constant_drift = true, .constant_covariance = true});
}

StickyModel make_sticky_ou_model(const StickyOuParams& p) {
    if (p.K.rows() != 2 || p.K.cols() != 2 || p.Sigma.rows() != 2 || p.Sigma.cols() != 2 ||
        p.theta.size() != 2) {
        throw InvalidParameter("sticky OU model: K and Sigma must be 2x2, theta a 2-vector");
    }
    for (const auto* m : {&p.K, &p.Sigma}) {
        for (double v : m->data()) {
            if (!std::isfinite(v)) {
                throw InvalidParameter("sticky OU model: non-finite matrix entry");
            }
        }
    }
    for (double v : {p.theta[0], p.theta[1], p.kappa2, p.theta2}) {
        if (!std::isfinite(v)) {
            throw InvalidParameter("sticky OU model: non-finite parameter");
        }
    }
    const double det = p.Sigma(0, 0) * p.Sigma(1, 1) - p.Sigma(0, 1) * p.Sigma(1, 0);
    if (det == 0.0) {
        throw InvalidParameter("sticky OU model: Sigma must be nonsingular");
    }
    if (!(p.sigma2 > 0.0) || !std::isfinite(p.sigma2)) {
        throw InvalidParameter("sticky OU model: sigma2 must be positive");
    }
    if (!(p.nu > 0.0) || !std::isfinite(p.nu)) {
        throw InvalidParameter("sticky OU model: nu must be positive");
    }

    const Matrix cov = p.Sigma * p.Sigma.transposed();
    StickyModel::Coefficients c;
    c.drift = [K = p.K, theta = p.theta](std::span<const double> x, std::span<double> out) {
        const double d0 = theta[0] - x[0];
        const double d1 = theta[1] - x[1];
        out[0] = K(0, 0) * d0 + K(0, 1) * d1;
        out[1] = K(1, 0) * d0 + K(1, 1) * d1;
    };
    c.covariance = [cov](std::span<const double>, Matrix& out) { out = cov; };
    c.boundary_drift = [nu = p.nu, kappa2 = p.kappa2, theta2 = p.theta2](std::span<const double> x,
                                                                          std::span<double> out) {
        out[0] = nu / (1.0 + std::exp(-100.0 * x[1]));
        out[1] = kappa2 * (theta2 - x[1]);
    };
    c.boundary_covariance = [s2 = p.sigma2 * p.sigma2](std::span<const double>, Matrix& out) {
        out(0, 0) = 0.0;
        out(0, 1) = 0.0;
        out(1, 0) = 0.0;
        out(1, 1) = s2;
    };
    return StickyModel("sticky_ou", 2, 1, std::move(c), {.constant_drift = false, .constant_covariance = true});
}

} // namespace sticky
