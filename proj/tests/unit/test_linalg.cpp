#include "doctest.h"
#include "helpers.hpp"

#include "sticky/errors.hpp"
#include "sticky/linalg.hpp"

#include <cmath>
#include <cstring>
#include <random>

#ifdef STICKY_HAVE_EIGEN
#include <Eigen/Dense>
#endif

using namespace sticky;
using testutil::max_abs_diff;

namespace {

Matrix reconstruct(const EigenPairs& e) {
    const std::size_t d = e.values.size();
    Matrix out(d, d);
    for (std::size_t c = 0; c < d; ++c) {
        for (std::size_t i = 0; i < d; ++i) {
            for (std::size_t j = 0; j < d; ++j) {
                out(i, j) += e.values[c] * e.vectors(i, c) * e.vectors(j, c);
            }
        }
    }
    return out;
}

double orthonormality_error(const Matrix& u) {
    return max_abs_diff(u.transposed() * u, Matrix::identity(u.rows()));
}

bool same_bytes(const EigenPairs& a, const EigenPairs& b) {
    return a.values.size() == b.values.size() &&
           std::memcmp(a.values.data(), b.values.data(), a.values.size() * sizeof(double)) == 0 &&
           std::memcmp(a.vectors.data().data(), b.vectors.data().data(),
                       a.vectors.data().size() * sizeof(double)) == 0;
}

} // namespace

TEST_CASE("eigh of the identity") {
    const EigenPairs e = eigh_symmetric(Matrix::identity(2));
    CHECK(e.values == Vector{1, 1});
    CHECK(e.vectors == Matrix::identity(2));
}

TEST_CASE("eigh of the queuing covariance") {
    const EigenPairs e = eigh_symmetric(Matrix{{2, -1}, {-1, 2}});
    const double r = 1.0 / std::sqrt(2.0);
    CHECK(e.values[0] == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(e.values[1] == doctest::Approx(3.0).epsilon(1e-14));
    CHECK(max_abs_diff(e.vectors.column(0), Vector{r, r}) <= 1e-14);
    CHECK(max_abs_diff(e.vectors.column(1), Vector{r, -r}) <= 1e-14);
}

TEST_CASE("eigh reconstructs random PSD matrices") {
    std::mt19937_64 gen(2024);
    for (int k = 0; k < 50; ++k) {
        const std::size_t d = 2 + static_cast<std::size_t>(k % 4);
        const std::size_t rank = (k % 3 == 0) ? d - 1 : d; // some singular ones
        const Matrix a = testutil::random_psd(gen, d, rank);
        const EigenPairs e = eigh_symmetric(a);
        CHECK(max_abs_diff(reconstruct(e), a) <= 1e-10);
        CHECK(orthonormality_error(e.vectors) <= 1e-10);
        for (std::size_t i = 1; i < d; ++i) {
            CHECK(e.values[i - 1] <= e.values[i]);
        }
        for (double v : e.values) {
            CHECK(v >= 0.0);
        }
        // Sign convention: largest-magnitude entry of each column is positive.
        for (std::size_t c = 0; c < d; ++c) {
            std::size_t lead = 0;
            for (std::size_t i = 1; i < d; ++i) {
                if (std::abs(e.vectors(i, c)) > std::abs(e.vectors(lead, c))) {
                    lead = i;
                }
            }
            CHECK(e.vectors(lead, c) > 0.0);
        }
    }
}

#ifdef STICKY_HAVE_EIGEN
TEST_CASE("eigh agrees with Eigen's self-adjoint solver") {
    std::mt19937_64 gen(99);
    for (int k = 0; k < 40; ++k) {
        const std::size_t d = 2 + static_cast<std::size_t>(k % 5);
        const Matrix a = testutil::random_psd(gen, d);
        Eigen::MatrixXd m(d, d);
        for (std::size_t i = 0; i < d; ++i) {
            for (std::size_t j = 0; j < d; ++j) {
                m(i, j) = a(i, j);
            }
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m);
        const EigenPairs e = eigh_symmetric(a);
        for (std::size_t i = 0; i < d; ++i) {
            CHECK(e.values[i] == doctest::Approx(solver.eigenvalues()(i)).epsilon(1e-10));
            // Compare eigenvectors up to sign; random spectra are simple.
            double dot = 0.0;
            for (std::size_t r = 0; r < d; ++r) {
                dot += e.vectors(r, i) * solver.eigenvectors()(r, i);
            }
            CHECK(std::abs(dot) == doctest::Approx(1.0).epsilon(1e-9));
        }
    }
}
#endif

TEST_CASE("eigh is deterministic and its sign convention is idempotent") {
    std::mt19937_64 gen(5);
    for (int k = 0; k < 20; ++k) {
        const Matrix a = testutil::random_psd(gen, 4);
        const EigenPairs e1 = eigh_symmetric(a);
        const EigenPairs e2 = eigh_symmetric(a);
        CHECK(same_bytes(e1, e2));
        const EigenPairs again = eigh_symmetric(reconstruct(e1));
        CHECK(max_abs_diff(again.vectors, e1.vectors) <= 1e-8);
    }
}

TEST_CASE("eigh keeps structural zeros") {
    const Matrix g{{0, 0}, {0, 0.25}};
    const EigenPairs e = eigh_symmetric(g);
    CHECK(e.values[0] == 0.0);
    CHECK(e.values[1] == 0.25);
    CHECK(e.vectors == Matrix::identity(2));
    const EigenPairs z = eigh_symmetric(Matrix(3, 3));
    CHECK(z.values == Vector{0, 0, 0});
}

TEST_CASE("eigh clamps roundoff and rejects indefinite input") {
    const EigenPairs e = eigh_symmetric(Matrix{{1, 0}, {0, -1e-11}});
    CHECK(e.values[0] == 0.0);
    CHECK_THROWS_AS(eigh_symmetric(Matrix{{1, 0}, {0, -1e-6}}), NotPsd);
    try {
        eigh_symmetric(Matrix{{1, 2}, {2, 1}});
        FAIL("expected NotPsd");
    } catch (const NotPsd& err) {
        CHECK(err.eigenvalue() == doctest::Approx(-1.0));
    }
    CHECK_THROWS_AS(eigh_symmetric(Matrix(2, 3)), std::invalid_argument);
    CHECK_THROWS_AS(eigh_symmetric(Matrix{{1, 0.5}, {0.4, 1}}), std::invalid_argument);
}

TEST_CASE("strict diagonal dominance") {
    CHECK(is_strictly_diagonally_dominant(Matrix{{2, -1}, {-1, 2}}));
    CHECK_FALSE(is_strictly_diagonally_dominant(Matrix{{1, 1.2}, {1.2, 2}}));
    CHECK(is_strictly_diagonally_dominant(Matrix::identity(4)));
    CHECK_FALSE(is_strictly_diagonally_dominant(Matrix{{1, 1}, {1, 1}}));
}

TEST_CASE("dominance threshold") {
    const StickyModel q = make_queuing_model(default_queuing_eta(), 1.0);
    const std::vector<State> qs{{0.5, 0.5}, {2.0, 1.0}};
    CHECK(dominance_threshold(q, qs) == kNoStepConstraint);

    const StickyModel m = testutil::constant_model({0.5, 0.0}, Matrix{{2, -1}, {-1, 2}}, 2);
    const std::vector<State> one{{1.0, 1.0}};
    CHECK(dominance_threshold(m, one) == doctest::Approx(2.0));

    const StickyModel n = testutil::constant_model({1.0, 1.0}, Matrix::identity(2), 2);
    CHECK(dominance_threshold(n, one) == doctest::Approx(1.0));

    const StickyModel bad = testutil::constant_model({0.0, 0.0}, Matrix{{1, 1.2}, {1.2, 2}}, 2);
    try {
        dominance_threshold(bad, one);
        FAIL("expected NotDominant");
    } catch (const NotDominant& err) {
        CHECK(err.row() == 0);
    }
    CHECK(dominance_threshold(n, std::vector<State>{}) == kNoStepConstraint);
}
