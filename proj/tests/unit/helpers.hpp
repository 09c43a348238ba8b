#pragma once

#include "sticky/matrix.hpp"
#include "sticky/model.hpp"

#include <cmath>
#include <random>

namespace testutil {

using sticky::Matrix;
using sticky::Vector;

// Random symmetric PSD matrix B B^T with rank `rank` (full rank by default).
inline Matrix random_psd(std::mt19937_64& gen, std::size_t d, std::size_t rank = 0) {
    if (rank == 0) {
        rank = d;
    }
    std::normal_distribution<double> n(0.0, 1.0);
    Matrix b(d, rank);
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = 0; j < rank; ++j) {
            b(i, j) = n(gen);
        }
    }
    Matrix a = b * b.transposed();
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = 0; j < i; ++j) {
            a(j, i) = a(i, j);
        }
    }
    return a;
}

// Random strictly diagonally dominant symmetric matrix with positive diagonal.
inline Matrix random_dominant(std::mt19937_64& gen, std::size_t d) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::uniform_real_distribution<double> margin(0.05, 1.0);
    Matrix a(d, d);
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = 0; j < i; ++j) {
            a(i, j) = a(j, i) = u(gen);
        }
    }
    for (std::size_t i = 0; i < d; ++i) {
        double off = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            if (j != i) {
                off += std::abs(a(i, j));
            }
        }
        a(i, i) = off + margin(gen);
    }
    return a;
}

inline double max_abs_diff(const Matrix& a, const Matrix& b) {
    return sticky::max_abs(a - b);
}

inline double max_abs_diff(const Vector& a, const Vector& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        m = std::max(m, std::abs(a[i] - b[i]));
    }
    return m;
}

// Constant-coefficient model in the orthant with the given drift and
// covariance; the boundary coefficients push straight inward.
inline sticky::StickyModel constant_model(const Vector& mu, const Matrix& a,
                                          std::size_t sticky_dim) {
    const std::size_t d = mu.size();
    sticky::StickyModel::Coefficients c;
    c.drift = [mu](std::span<const double>, std::span<double> out) {
        std::copy(mu.begin(), mu.end(), out.begin());
    };
    c.covariance = [a](std::span<const double>, Matrix& out) { out = a; };
    c.boundary_drift = [d, sticky_dim](std::span<const double> x, std::span<double> out) {
        for (std::size_t i = 0; i < d; ++i) {
            out[i] = (i < sticky_dim && x[i] == 0.0) ? 1.0 : 0.0;
        }
    };
    c.boundary_covariance = [d](std::span<const double>, Matrix& out) { out = Matrix(d, d); };
    return sticky::StickyModel("synthetic", d, sticky_dim, c, {true, true});
}

} // namespace testutil
