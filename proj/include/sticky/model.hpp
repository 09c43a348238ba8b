#pragma once

#include "sticky/matrix.hpp"

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace sticky {

/// Coefficient callback writing a d-vector for state x into `out`.
using VectorField = std::function<void(std::span<const double> x, std::span<double> out)>;
/// Coefficient callback writing a d-by-d matrix for state x into `out`
/// (already sized d-by-d).
using MatrixField = std::function<void(std::span<const double> x, Matrix& out)>;

/// Diffusion with stickiness at zero in the first `sticky_dim` coordinates,
/// written without local time:
///
///   dX = 1{X in S} (mu dt + Sigma dB1) + 1{X on dS} (beta_hat dt + Gamma_hat dB2)
///
/// with A = Sigma Sigma^T in the interior and G_hat = Gamma_hat Gamma_hat^T on
/// the boundary. The state space is the orthant {x : x^i >= 0, i < sticky_dim}.
///
/// Instances are immutable; callbacks must be pure so the model can be shared
/// between worker threads.
class StickyModel {
public:
    struct Coefficients {
        VectorField drift;               // mu(x), interior
        MatrixField covariance;          // A(x), interior
        VectorField boundary_drift;      // beta_hat(x), boundary only
        MatrixField boundary_covariance; // G_hat(x), boundary only
    };

    struct Traits {
        bool constant_drift = false;      // mu does not depend on x
        bool constant_covariance = false; // A does not depend on x
    };

    StickyModel(std::string name, std::size_t dim, std::size_t sticky_dim,
                Coefficients coefficients, Traits traits);

    const std::string& name() const noexcept { return name_; }
    std::size_t dim() const noexcept { return dim_; }
    std::size_t sticky_dim() const noexcept { return sticky_dim_; }
    const Traits& traits() const noexcept { return traits_; }

    /// True when mu and A are both state independent, so the untrimmed
    /// interior transition law is the same at every interior state.
    bool constant_interior() const noexcept {
        return traits_.constant_drift && traits_.constant_covariance;
    }

    // The span/Matrix overloads write into caller storage and are used on the
    // simulation hot path. All of them throw ModelEvaluation on non-finite
    // output. The boundary coefficients may only be evaluated on the boundary;
    // debug builds throw std::logic_error otherwise.
    void drift(std::span<const double> x, std::span<double> out) const;
    void covariance(std::span<const double> x, Matrix& out) const;
    void boundary_drift(std::span<const double> x, std::span<double> out) const;
    void boundary_covariance(std::span<const double> x, Matrix& out) const;

    Vector drift(const State& x) const;
    Matrix covariance(const State& x) const;
    Vector boundary_drift(const State& x) const;
    Matrix boundary_covariance(const State& x) const;

private:
    void check_dim(std::span<const double> x) const;

    std::string name_;
    std::size_t dim_;
    std::size_t sticky_dim_;
    Coefficients coefficients_;
    Traits traits_;
};

/// Indices i < sticky_dim with x^i exactly 0.
std::vector<std::size_t> active_boundary_set(std::span<const double> x, std::size_t sticky_dim);

bool on_boundary(std::span<const double> x, std::size_t sticky_dim);

/// Sticky coordinates nonnegative and every coordinate finite.
bool in_state_space(std::span<const double> x, std::size_t sticky_dim);

/// Sticky Brownian motion in the positive orthant, the heavy-traffic limit of
/// a d-server queue with exceptional service. Column i of `eta` is the drift
/// pushing the process off the face {x^i = 0}; the interior covariance is
/// sigma^2 times the tridiagonal (-1, 2, -1) matrix.
StickyModel make_queuing_model(const Matrix& eta, double sigma);

/// Parameters of the two-factor sticky short-rate model. Defaults are the
/// fitted values used for the zero-coupon bond example.
struct StickyOuParams {
    Matrix K{{0.3076, -0.1943}, {-0.0401, 0.0198}};
    Vector theta{0.0008, -0.0363};
    Matrix Sigma{{0.0253, 0.0}, {0.0, 0.0189}};
    double kappa2 = 0.0665;
    double theta2 = 0.0134;
    double sigma2 = 0.1051;
    double nu = 0.0079;

    bool operator==(const StickyOuParams&) const = default;
};

/// Short rate x^1 sticky at zero, factor x^2 unbounded. Interior dynamics are
/// a two-dimensional OU process K(theta - x) dt + Sigma dB; on {x^1 = 0} the
/// rate leaves zero with drift nu / (1 + exp(-100 x^2)) and the factor follows
/// its own OU dynamics with volatility sigma2.
StickyModel make_sticky_ou_model(const StickyOuParams& params);

/// The queuing parameters used in the two-server benchmark.
Matrix default_queuing_eta();

} // namespace sticky
