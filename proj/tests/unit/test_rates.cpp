#include "doctest.h"
#include "helpers.hpp"

#include "sticky/errors.hpp"
#include "sticky/linalg.hpp"
#include "sticky/rates.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <random>

using namespace sticky;
using testutil::max_abs_diff;

namespace {

struct Entry {
    Vector dx;
    double rate;
};

std::vector<Entry> entries(const RateTable& t) {
    std::vector<Entry> out;
    for (std::size_t k = 0; k < t.size(); ++k) {
        const auto dx = t.displacement(k);
        out.push_back({Vector(dx.begin(), dx.end()), t.rate(k)});
    }
    return out;
}

// Rate of the entry whose displacement matches dx within 1e-14, or -1.
double rate_of(const RateTable& t, const Vector& dx) {
    for (const auto& e : entries(t)) {
        if (max_abs_diff(e.dx, dx) <= 1e-14) {
            return e.rate;
        }
    }
    return -1.0;
}

bool bitwise_equal(const RateTable& a, const RateTable& b) {
    if (a.size() != b.size() || a.dim() != b.dim()) {
        return false;
    }
    for (std::size_t k = 0; k < a.size(); ++k) {
        const auto da = a.displacement(k);
        const auto db = b.displacement(k);
        if (std::memcmp(da.data(), db.data(), da.size() * sizeof(double)) != 0) {
            return false;
        }
        const double ra = a.rate(k);
        const double rb = b.rate(k);
        if (std::memcmp(&ra, &rb, sizeof(double)) != 0) {
            return false;
        }
    }
    return true;
}

double sum_rates(const RateTable& t) {
    double s = 0.0;
    for (double r : t.rates()) {
        s += r;
    }
    return s;
}

// Checks the table-level invariants at x.
void check_table(const RateTable& t, const State& x, std::size_t sticky_dim, double h) {
    CHECK(t.total_rate() == doctest::Approx(sum_rates(t)).epsilon(1e-12));
    for (std::size_t k = 0; k < t.size(); ++k) {
        const auto dx = t.displacement(k);
        CHECK(t.rate(k) > 0.0);
        CHECK(std::any_of(dx.begin(), dx.end(), [](double v) { return v != 0.0; }));
        for (std::size_t i = 0; i < sticky_dim; ++i) {
            const double y = x[i] + dx[i];
            CHECK(y >= 0.0);
            // Landings on the boundary are exact.
            CHECK((y == 0.0 || y > 1e-12 * h));
        }
    }
}

Vector random_vector(std::mt19937_64& gen, std::size_t d, double scale) {
    std::uniform_real_distribution<double> u(-scale, scale);
    Vector v(d);
    for (auto& e : v) {
        e = u(gen);
    }
    return v;
}

Matrix outer(const Vector& a) {
    Matrix m(a.size(), a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        for (std::size_t j = 0; j < a.size(); ++j) {
            m(i, j) = a[i] * a[j];
        }
    }
    return m;
}

} // namespace

TEST_CASE("scheme names") {
    CHECK(to_string(Scheme::FiniteDifference) == "fd");
    CHECK(to_string(Scheme::Eigen) == "ed");
    CHECK(parse_scheme("fd") == Scheme::FiniteDifference);
    CHECK(parse_scheme("ed") == Scheme::Eigen);
    CHECK_FALSE(parse_scheme("FD").has_value());
}

TEST_CASE("trim_step") {
    CHECK(trim_step(State{0.05, 0.2}, Vector{-1, 0}, 0.1, 2) == doctest::Approx(0.05));
    CHECK(trim_step(State{5, 5}, Vector{-1, -1}, 0.1, 2) == 0.1);
    const double r = 1.0 / std::sqrt(2.0);
    CHECK(trim_step(State{0.003, 0.01}, Vector{-r, -r}, 0.01, 2) ==
          doctest::Approx(0.003 * std::sqrt(2.0)).epsilon(1e-12));
    CHECK(trim_step(State{0.003, 0.01}, Vector{-r, -r}, 0.01, 2) == doctest::Approx(0.0042426).epsilon(1e-5));
    // Moving away from the boundary, or sitting on it, imposes nothing.
    CHECK(trim_step(State{0.0, 0.5}, Vector{1, 0}, 0.1, 2) == 0.1);
    // Free coordinates never trim.
    CHECK(trim_step(State{1.0, 0.001}, Vector{0, -1}, 0.1, 1) == 0.1);
}

TEST_CASE("trim_step agrees with a bisection crossing search") {
    std::mt19937_64 gen(31);
    std::uniform_real_distribution<double> pos(0.0, 0.2);
    for (int k = 0; k < 200; ++k) {
        const State x{pos(gen), pos(gen), pos(gen)};
        Vector u = random_vector(gen, 3, 1.0);
        const double h = 0.1;
        const double step = trim_step(x, u, h, 3);
        auto inside = [&](double s) {
            for (std::size_t i = 0; i < 3; ++i) {
                if (x[i] + s * u[i] < 0.0) {
                    return false;
                }
            }
            return true;
        };
        if (inside(h)) {
            CHECK(step == h);
            continue;
        }
        double lo = 0.0;
        double hi = h;
        for (int it = 0; it < 200; ++it) {
            const double mid = 0.5 * (lo + hi);
            (inside(mid) ? lo : hi) = mid;
        }
        CHECK(step == doctest::Approx(lo).epsilon(1e-12));
    }
}

TEST_CASE("FD interior rates for the queuing model") {
    const StickyModel m = make_queuing_model(default_queuing_eta(), 1.0);
    const State x{0.5, 0.5};
    const RateTable t = fd_rates_interior(m, x, 0.1);
    REQUIRE(t.size() == 6);
    for (double r : t.rates()) {
        CHECK(r == doctest::Approx(50.0).epsilon(1e-12));
    }
    CHECK(t.total_rate() == doctest::Approx(300.0).epsilon(1e-12));
    CHECK(rate_of(t, {0.1, 0}) > 0);
    CHECK(rate_of(t, {-0.1, 0}) > 0);
    CHECK(rate_of(t, {0, 0.1}) > 0);
    CHECK(rate_of(t, {0, -0.1}) > 0);
    CHECK(rate_of(t, {0.1, -0.1}) > 0);
    CHECK(rate_of(t, {-0.1, 0.1}) > 0);
    CHECK(rate_of(t, {0.1, 0.1}) < 0);

    const LocalMoments lm = local_moments(t);
    CHECK(max_abs_diff(lm.first, Vector{0, 0}) <= 1e-12);
    CHECK(max_abs_diff(lm.second, Matrix{{2, -1}, {-1, 2}}) <= 1e-12);
    check_table(t, x, 2, 0.1);
}

TEST_CASE("FD interior rates for uncorrelated coordinates") {
    const StickyModel m = testutil::constant_model({0, 0}, Matrix::identity(2), 2);
    const RateTable t = fd_rates_interior(m, State{1, 1}, 0.1);
    CHECK(t.size() == 4);
    for (double r : t.rates()) {
        CHECK(r == doctest::Approx(50.0).epsilon(1e-12));
    }
    CHECK(t.total_rate() == doctest::Approx(200.0).epsilon(1e-12));
}

TEST_CASE("FD rejects a non-dominant covariance") {
    const StickyModel m = testutil::constant_model({0, 0}, Matrix{{1, 1.2}, {1.2, 2}}, 2);
    for (double h : {0.1, 0.01, 1e-4}) {
        try {
            fd_rates_interior(m, State{1, 1}, h);
            FAIL("expected NegativeRate");
        } catch (const NegativeRate& e) {
            CHECK(e.axis() == 0);
            CHECK(e.value() < 0.0);
        }
    }
    // The eigen scheme has no such restriction.
    CHECK_NOTHROW(ed_rates_interior(m, State{1, 1}, 0.1));
}

TEST_CASE("FD drift terms") {
    const StickyModel m = testutil::constant_model({0.5, 0.0}, Matrix{{2, -1}, {-1, 2}}, 2);
    const RateTable t = fd_rates_interior(m, State{3, 3}, 0.1);
    CHECK(rate_of(t, {0.1, 0}) == doctest::Approx(0.5 / 0.2 + 50.0));
    CHECK(rate_of(t, {-0.1, 0}) == doctest::Approx(-0.5 / 0.2 + 50.0));
    // Above the dominance threshold (2) an axis rate turns negative.
    CHECK_THROWS_AS(fd_rates_interior(m, State{30, 30}, 2.5), NegativeRate);
    CHECK_NOTHROW(fd_rates_interior(m, State{30, 30}, 2.0));
}

TEST_CASE("FD boundary rates for the queuing model") {
    const StickyModel m = make_queuing_model(default_queuing_eta(), 1.0);
    const RateTable t = fd_rates_boundary(m, State{0.0, 0.3}, 0.01);
    REQUIRE(t.size() == 2);
    CHECK(rate_of(t, {0.01, 0}) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(rate_of(t, {0, 0.01}) == doctest::Approx(90.0).epsilon(1e-12));
    CHECK(t.total_rate() == doctest::Approx(91.0).epsilon(1e-12));
    const LocalMoments lm = local_moments(t);
    CHECK(max_abs_diff(lm.first, Vector{0.01, 0.90}) <= 1e-12);

    const RateTable o = fd_rates_boundary(m, State{0.0, 0.0}, 0.01);
    REQUIRE(o.size() == 2);
    CHECK(rate_of(o, {0.01, 0}) == doctest::Approx(100.0).epsilon(1e-12));
    CHECK(rate_of(o, {0, 0.01}) == doctest::Approx(185.0).epsilon(1e-12));
}

TEST_CASE("FD boundary rates for the sticky OU model") {
    const StickyOuParams p;
    const StickyModel m = make_sticky_ou_model(p);
    const double h = 0.01;
    const RateTable t = fd_rates_boundary(m, State{0.0, 0.1}, h);
    const Vector beta = m.boundary_drift(State{0.0, 0.1});
    const double diffusion = p.sigma2 * p.sigma2 / (2 * h * h);
    CHECK(diffusion == doctest::Approx(55.23).epsilon(1e-4));
    REQUIRE(t.size() == 3);
    CHECK(rate_of(t, {h, 0}) == doctest::Approx(beta[0] / h));
    CHECK(rate_of(t, {0, h}) == doctest::Approx(beta[1] / (2 * h) + diffusion));
    CHECK(rate_of(t, {0, -h}) == doctest::Approx(-beta[1] / (2 * h) + diffusion));
    const LocalMoments lm = local_moments(t);
    CHECK(max_abs_diff(lm.first, beta) <= 1e-12);
    CHECK(lm.second(1, 1) == doctest::Approx(p.sigma2 * p.sigma2 + 0.0));
}

TEST_CASE("ED interior rates for the queuing model") {
    const StickyModel m = make_queuing_model(default_queuing_eta(), 1.0);
    const RateTable t = ed_rates_interior(m, State{0.5, 0.5}, 0.1);
    REQUIRE(t.size() == 4);
    const double r = 0.1 / std::sqrt(2.0);
    CHECK(rate_of(t, {r, r}) == doctest::Approx(50.0).epsilon(1e-12));
    CHECK(rate_of(t, {-r, -r}) == doctest::Approx(50.0).epsilon(1e-12));
    CHECK(rate_of(t, {r, -r}) == doctest::Approx(150.0).epsilon(1e-12));
    CHECK(rate_of(t, {-r, r}) == doctest::Approx(150.0).epsilon(1e-12));
    CHECK(t.total_rate() == doctest::Approx(400.0).epsilon(1e-12));
    const LocalMoments lm = local_moments(t);
    CHECK(max_abs_diff(lm.first, Vector{0, 0}) <= 1e-12);
    CHECK(max_abs_diff(lm.second, Matrix{{2, -1}, {-1, 2}}) <= 1e-12);
}

TEST_CASE("ED interior drift entry") {
    const StickyModel m = testutil::constant_model({1, 0}, Matrix::identity(2), 2);
    const RateTable t = ed_rates_interior(m, State{5, 5}, 0.1);
    REQUIRE(t.size() == 5);
    CHECK(rate_of(t, {0.1, 0}) == doctest::Approx(50.0));
    CHECK(rate_of(t, {-0.1, 0}) == doctest::Approx(50.0));
    CHECK(rate_of(t, {0, 0.1}) == doctest::Approx(50.0));
    CHECK(rate_of(t, {0, -0.1}) == doctest::Approx(50.0));
    // Drift entry is stored last and shares its displacement with +0.1 e1.
    CHECK(max_abs_diff(entries(t).back().dx, Vector{0.1, 0}) == 0.0);
    CHECK(entries(t).back().rate == doctest::Approx(10.0));
}

TEST_CASE("ED interior trimming near the boundary") {
    const StickyModel m = make_queuing_model(default_queuing_eta(), 1.0);
    const State x{0.003, 0.01};
    const RateTable t = ed_rates_interior(m, x, 0.01);
    const double delta = 0.003 * std::sqrt(2.0);
    const double r = 1.0 / std::sqrt(2.0);
    CHECK(rate_of(t, {-0.003, -0.003}) == doctest::Approx(1.0 / (2 * delta * delta)).epsilon(1e-10));
    CHECK(rate_of(t, {delta * r, delta * r}) == doctest::Approx(1.0 / (2 * delta * delta)).epsilon(1e-10));
    // The landing on x^1 = 0 is exact.
    bool landed = false;
    for (const auto& e : entries(t)) {
        if (x[0] + e.dx[0] == 0.0) {
            landed = true;
        }
    }
    CHECK(landed);
    const LocalMoments lm = local_moments(t);
    CHECK(max_abs_diff(lm.first, Vector{0, 0}) <= 1e-9);
    CHECK(max_abs_diff(lm.second, Matrix{{2, -1}, {-1, 2}}) <= 1e-9);
    check_table(t, x, 2, 0.01);
}

TEST_CASE("ED boundary rates") {
    const StickyModel q = make_queuing_model(default_queuing_eta(), 1.0);
    const RateTable t = ed_rates_boundary(q, State{0.0, 0.3}, 0.01);
    REQUIRE(t.size() == 1);
    CHECK(max_abs_diff(entries(t)[0].dx, Vector{0.01 * 0.01, 0.01 * 0.90}) <= 1e-15);
    CHECK(t.rate(0) == doctest::Approx(100.0));

    const StickyOuParams p;
    const StickyModel ou = make_sticky_ou_model(p);
    const double h = 0.01;
    const RateTable o = ed_rates_boundary(ou, State{0.0, 0.0}, h);
    REQUIRE(o.size() == 3);
    const double s = p.sigma2 * p.sigma2 / (2 * h * h);
    CHECK(rate_of(o, {0, h}) == doctest::Approx(s));
    CHECK(rate_of(o, {0, -h}) == doctest::Approx(s));
    const Entry drift = entries(o).back();
    CHECK(drift.rate == doctest::Approx(1.0 / h));
    CHECK(drift.dx[0] == doctest::Approx(h * 0.00395));
    CHECK(drift.dx[1] == doctest::Approx(h * p.kappa2 * p.theta2));

    // Zero boundary covariance always gives a single drift entry.
    const StickyModel c = testutil::constant_model({0.3, -0.2, 0.1}, Matrix::identity(3), 3);
    for (const State& b : {State{0, 1, 1}, State{0, 0, 1}, State{0, 0, 0}}) {
        CHECK(ed_rates_boundary(c, b, 0.05).size() == 1);
    }
}

TEST_CASE("local moments of an empty table") {
    const LocalMoments lm = local_moments(RateTable(3));
    CHECK(lm.first == Vector{0, 0, 0});
    CHECK(lm.second == Matrix(3, 3));
}

TEST_CASE("construction preconditions") {
    const StickyModel m = make_queuing_model(default_queuing_eta(), 1.0);
    CHECK_THROWS_AS(fd_rates_interior(m, State{0.0, 0.5}, 0.1), std::invalid_argument);
    CHECK_THROWS_AS(ed_rates_boundary(m, State{0.1, 0.5}, 0.1), std::invalid_argument);
    CHECK_THROWS_AS(build_rates(m, Scheme::Eigen, State{-0.1, 0.5}, 0.1), std::invalid_argument);
    CHECK_THROWS_AS(build_rates(m, Scheme::Eigen, State{0.1}, 0.1), std::invalid_argument);
    CHECK_THROWS_AS(build_rates(m, Scheme::Eigen, State{0.1, 0.1}, 0.0), InvalidParameter);
    CHECK_THROWS_AS(RateBuilder(m, Scheme::Eigen, -1.0), InvalidParameter);
}

TEST_CASE("property: untrimmed interior moments match the coefficients") {
    std::mt19937_64 gen(77);
    int checked = 0;
    for (int k = 0; k < 250; ++k) {
        const std::size_t d = 2 + static_cast<std::size_t>(k % 3);
        const Vector mu = random_vector(gen, d, 2.0);
        const bool fd = k < 200 ? (k % 2 == 0) : false;
        const Matrix a = fd ? testutil::random_dominant(gen, d) : testutil::random_psd(gen, d);
        const StickyModel m = testutil::constant_model(mu, a, d);
        double h = 0.05;
        if (fd) {
            const std::vector<State> one{State(d, 1.0)};
            h = std::min(h, dominance_threshold(m, one));
        }
        const State x(d, 10.0);
        const RateTable t = fd ? fd_rates_interior(m, x, h) : ed_rates_interior(m, x, h);
        const LocalMoments lm = local_moments(t);
        CHECK(max_abs_diff(lm.first, mu) <= 1e-9);
        Matrix expected = a;
        if (!fd) {
            expected = a + h * outer(mu);
        }
        CHECK(max_abs_diff(lm.second, expected) <= 1e-9);
        ++checked;
    }
    CHECK(checked == 250);
}

TEST_CASE("property: trimmed ED noise pairs stay mean zero") {
    std::mt19937_64 gen(8);
    std::uniform_real_distribution<double> pos(0.0, 0.03);
    for (int k = 0; k < 200; ++k) {
        const Matrix a = testutil::random_psd(gen, 3);
        const StickyModel m = testutil::constant_model({0, 0, 0}, a, 3);
        State x{pos(gen) + 1e-4, pos(gen) + 1e-4, pos(gen) + 1e-4};
        const RateTable t = ed_rates_interior(m, x, 0.05);
        const LocalMoments lm = local_moments(t);
        double scale = 0.0;
        for (double r : t.rates()) {
            scale = std::max(scale, r * 0.05);
        }
        CHECK(max_abs_diff(lm.first, Vector{0, 0, 0}) <= 1e-12 * std::max(1.0, scale));
        CHECK(max_abs_diff(lm.second, a) <= 1e-9);
    }
}

TEST_CASE("property: ED rates are valid for any PSD covariance and step") {
    std::mt19937_64 gen(500);
    std::uniform_real_distribution<double> pos(0.0, 1.0);
    std::uniform_real_distribution<double> logh(-4.0, 1.0);
    for (int k = 0; k < 500; ++k) {
        const std::size_t d = 2 + static_cast<std::size_t>(k % 4);
        const Matrix a = testutil::random_psd(gen, d, 1 + static_cast<std::size_t>(k) % d);
        const StickyModel m = testutil::constant_model(random_vector(gen, d, 1.0), a, d);
        State x(d);
        for (auto& e : x) {
            e = pos(gen);
        }
        const double h = std::pow(10.0, logh(gen));
        RateTable t;
        REQUIRE_NOTHROW(t = ed_rates_interior(m, x, h));
        check_table(t, x, d, h);
    }
}

TEST_CASE("property: FD rates are valid up to the dominance threshold") {
    std::mt19937_64 gen(101);
    std::uniform_real_distribution<double> pos(0.0, 2.0);
    for (int k = 0; k < 100; ++k) {
        const std::size_t d = 2 + static_cast<std::size_t>(k % 4);
        const Matrix a = testutil::random_dominant(gen, d);
        const StickyModel m = testutil::constant_model(random_vector(gen, d, 3.0), a, d);
        State x(d);
        for (auto& e : x) {
            e = pos(gen) + 1e-3;
        }
        const std::vector<State> sample{x};
        const double h_bar = dominance_threshold(m, sample);
        for (double h : {h_bar, 0.5 * h_bar, 0.01 * h_bar}) {
            RateTable t;
            REQUIRE_NOTHROW(t = fd_rates_interior(m, x, h));
            check_table(t, x, d, h);
        }
    }
}

TEST_CASE("property: outflow rate scales like 1/h^2") {
    std::mt19937_64 gen(64);
    for (int k = 0; k < 50; ++k) {
        const std::size_t d = 2 + static_cast<std::size_t>(k % 3);
        const Vector mu = random_vector(gen, d, 1.0);
        const bool fd = k % 2 == 0;
        const Matrix a = fd ? testutil::random_dominant(gen, d) : testutil::random_psd(gen, d);
        const StickyModel m = testutil::constant_model(mu, a, d);
        const State x(d, 10.0);
        const double h = 0.01;
        const Scheme s = fd ? Scheme::FiniteDifference : Scheme::Eigen;
        const double a1 = build_rates(m, s, x, h).total_rate();
        const double a2 = build_rates(m, s, x, h / 2).total_rate();
        CHECK(a2 / a1 == doctest::Approx(4.0).epsilon(0.1));
    }
}

TEST_CASE("property: targets of the builtin models stay in the state space") {
    std::mt19937_64 gen(12);
    std::uniform_real_distribution<double> near(0.0, 0.05);
    std::uniform_real_distribution<double> any(-0.5, 0.5);
    const StickyModel q = make_queuing_model(default_queuing_eta(), 1.0);
    const StickyModel ou = make_sticky_ou_model({});
    for (int k = 0; k < 300; ++k) {
        const double h = (k % 3 == 0) ? 0.1 : 0.01;
        State xq{near(gen), near(gen)};
        State xo{near(gen) * 0.1, any(gen)};
        if (k % 4 == 0) {
            xq[k % 2] = 0.0;
            xo[0] = 0.0;
        }
        if (k % 7 == 0) {
            xq = {0.0, 0.0};
        }
        for (Scheme s : {Scheme::FiniteDifference, Scheme::Eigen}) {
            check_table(build_rates(q, s, xq, h), xq, 2, h);
            // FD on the OU model needs h below A^11 / |mu^1|, a few 1e-3 here.
            const double h_ou = s == Scheme::FiniteDifference ? 1e-3 : h;
            check_table(build_rates(ou, s, xo, h_ou), xo, 1, h_ou);
        }
    }
}

TEST_CASE("RateBuilder matches fresh construction bit for bit") {
    std::mt19937_64 gen(3);
    std::uniform_real_distribution<double> pos(0.0, 1.0);
    const StickyModel q = make_queuing_model(default_queuing_eta(), 1.0);
    const StickyModel ou = make_sticky_ou_model({});
    const StickyModel c = testutil::constant_model({0.4, -0.3}, Matrix{{1.5, 0.3}, {0.3, 0.8}}, 1);
    for (Scheme s : {Scheme::FiniteDifference, Scheme::Eigen}) {
        const double h = 0.02;
        RateBuilder bq(q, s, h);
        const double h_ou = s == Scheme::FiniteDifference ? 1e-3 : h;
        RateBuilder bo(ou, s, h_ou);
        RateBuilder bc(c, s, h);
        CHECK(bq.untrimmed_total_rate().has_value());
        CHECK(bc.untrimmed_total_rate().has_value());
        CHECK_FALSE(bo.untrimmed_total_rate().has_value());
        CHECK(*bq.untrimmed_total_rate() ==
              doctest::Approx(s == Scheme::Eigen ? 4.0 / (h * h) : 3.0 / (h * h)));
        for (int k = 0; k < 300; ++k) {
            State xq{pos(gen), pos(gen)};
            State xo{0.05 * pos(gen), pos(gen) - 0.5};
            State xc{0.1 * pos(gen), pos(gen) - 0.5};
            if (k % 5 == 0) {
                xq[0] = 0.0;
                xo[0] = 0.0;
                xc[0] = 0.0;
            }
            CHECK(bitwise_equal(bq.at(xq), build_rates(q, s, xq, h)));
            CHECK(bitwise_equal(bo.at(xo), build_rates(ou, s, xo, h_ou)));
            CHECK(bitwise_equal(bc.at(xc), build_rates(c, s, xc, h)));
        }
    }
}
