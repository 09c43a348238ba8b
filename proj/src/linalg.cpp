#include "sticky/linalg.hpp"

#include "sticky/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace sticky {

namespace {

constexpr double kAsymmetryTolerance = 1e-12;
constexpr double kOffDiagonalTolerance = 1e-13;
constexpr double kClampFloor = -1e-10;
constexpr double kPsdFloor = -1e-8;
constexpr int kMaxSweeps = 100;

double off_diagonal_norm(const Matrix& a) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < a.cols(); ++j) {
            if (i != j) {
                s += a(i, j) * a(i, j);
            }
        }
    }
    return std::sqrt(s);
}

// One Jacobi rotation annihilating a(p, q), applied to a and accumulated
// into v.
void rotate(Matrix& a, Matrix& v, std::size_t p, std::size_t q) {
    const double apq = a(p, q);
    const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
    const double t = std::copysign(1.0, theta) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
    const double c = 1.0 / std::sqrt(t * t + 1.0);
    const double s = t * c;
    const std::size_t n = a.rows();

    for (std::size_t k = 0; k < n; ++k) {
        const double akp = a(k, p);
        const double akq = a(k, q);
        a(k, p) = c * akp - s * akq;
        a(k, q) = s * akp + c * akq;
    }
    for (std::size_t k = 0; k < n; ++k) {
        const double apk = a(p, k);
        const double aqk = a(q, k);
        a(p, k) = c * apk - s * aqk;
        a(q, k) = s * apk + c * aqk;
    }
    a(p, q) = 0.0;
    a(q, p) = 0.0;

    for (std::size_t k = 0; k < n; ++k) {
        const double vkp = v(k, p);
        const double vkq = v(k, q);
        v(k, p) = c * vkp - s * vkq;
        v(k, q) = s * vkp + c * vkq;
    }
}

} // namespace

EigenPairs eigh_symmetric(const Matrix& input) {
    if (!input.square()) {
        throw std::invalid_argument("eigh_symmetric: matrix must be square");
    }
    const std::size_t n = input.rows();
    Matrix a(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (std::abs(input(i, j) - input(j, i)) > kAsymmetryTolerance) {
                throw std::invalid_argument("eigh_symmetric: matrix is not symmetric");
            }
            a(i, j) = 0.5 * (input(i, j) + input(j, i));
        }
    }

    Matrix v = Matrix::identity(n);
    const double threshold = kOffDiagonalTolerance * frobenius_norm(a);
    int sweep = 0;
    while (off_diagonal_norm(a) > threshold) {
        if (++sweep > kMaxSweeps) {
            throw Error("eigh_symmetric: Jacobi sweeps did not converge");
        }
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                if (a(p, q) != 0.0) {
                    rotate(a, v, p, q);
                }
            }
        }
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&a](std::size_t i, std::size_t j) { return a(i, i) < a(j, j); });

    EigenPairs out{Vector(n), Matrix(n, n)};
    for (std::size_t c = 0; c < n; ++c) {
        const std::size_t src = order[c];
        double lambda = a(src, src);
        if (lambda < kPsdFloor) {
            throw NotPsd("eigh_symmetric: eigenvalue " + std::to_string(lambda) +
                             " below -1e-8; covariance is not positive semidefinite",
                         lambda);
        }
        if (lambda < 0.0 && lambda >= kClampFloor) {
            lambda = 0.0;
        }
        out.values[c] = lambda;

        std::size_t lead = 0;
        for (std::size_t k = 1; k < n; ++k) {
            if (std::abs(v(k, src)) > std::abs(v(lead, src))) {
                lead = k;
            }
        }
        const double sign = v(lead, src) < 0.0 ? -1.0 : 1.0;
        for (std::size_t k = 0; k < n; ++k) {
            // Adding 0.0 turns -0.0 into +0.0 so structural zeros compare
            // bitwise equal regardless of the sign flip.
            out.vectors(k, c) = sign * v(k, src) + 0.0;
        }
    }
    return out;
}

bool is_strictly_diagonally_dominant(const Matrix& a) {
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double off = 0.0;
        for (std::size_t j = 0; j < a.cols(); ++j) {
            if (j != i) {
                off += std::abs(a(i, j));
            }
        }
        if (!(a(i, i) - off > 0.0)) {
            return false;
        }
    }
    return true;
}

double dominance_threshold(const StickyModel& model, std::span<const State> sample_states) {
    double h_bar = kNoStepConstraint;
    for (const State& x : sample_states) {
        const Matrix a = model.covariance(x);
        const Vector mu = model.drift(x);
        for (std::size_t i = 0; i < a.rows(); ++i) {
            double off = 0.0;
            for (std::size_t j = 0; j < a.cols(); ++j) {
                if (j != i) {
                    off += std::abs(a(i, j));
                }
            }
            const double margin = a(i, i) - off;
            if (!(margin > 0.0)) {
                throw NotDominant("dominance_threshold: covariance row " + std::to_string(i) +
                                      " is not strictly diagonally dominant",
                                  i);
            }
            if (mu[i] != 0.0) {
                h_bar = std::min(h_bar, margin / std::abs(mu[i]));
            }
        }
    }
    return h_bar;
}

} // namespace sticky
