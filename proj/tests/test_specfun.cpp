#include "sphdiff/errors.hpp"
#include "sphdiff/specfun.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>

using namespace sphdiff;

namespace {
constexpr double kPi = 3.14159265358979323846;

// Independent oracle: J0 by direct quadrature of (1/pi) int_0^pi cos(x sin th) dth.
double j0_quadrature(double x) {
    QuadratureRule rule = gauss_legendre(256, 0.0, kPi);
    return quad_sum(rule, [&](double th) { return std::cos(x * std::sin(th)); }) / kPi;
}
}  // namespace

TEST_CASE("laguerre point values") {
    CHECK(laguerre(0, 3.7) == 1.0);
    CHECK(laguerre(1, 2.0) == doctest::Approx(-1.0).epsilon(1e-14));
    CHECK(laguerre(2, 1.0) == doctest::Approx(-0.5).epsilon(1e-14));
    // symbolic expansion oracle for L_2
    for (double t = 0.0; t <= 10.0; t += 0.37) {
        double expanded = 1.0 - 2.0 * t + 0.5 * t * t;
        CHECK(laguerre(2, t) == doctest::Approx(expanded).epsilon(1e-12));
    }
}

TEST_CASE("laguerre domain errors") {
    CHECK_THROWS_AS(laguerre(3, std::numeric_limits<double>::quiet_NaN()), std::domain_error);
    CHECK_THROWS_AS(laguerre(3, std::numeric_limits<double>::infinity()), std::domain_error);
    CHECK_THROWS_AS(laguerre(-1, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(laguerre(10001, 1.0), std::invalid_argument);
}

TEST_CASE("laguerre scaled evaluation matches plain") {
    for (int n : {0, 1, 5, 17}) {
        for (double t = 0.0; t < 40.0; t += 1.7) {
            CHECK(laguerre_scaled(n, t) ==
                  doctest::Approx(std::exp(-0.5 * t) * laguerre(n, t)).epsilon(1e-11));
        }
    }
    // bounded by 1 on t >= 0
    for (int n : {3, 20, 200}) {
        for (double t = 0.0; t < 400.0; t += 0.5)
            CHECK(std::fabs(laguerre_scaled(n, t)) <= 1.0 + 1e-12);
    }
}

TEST_CASE("laguerre orthonormality under Gauss-Laguerre") {
    QuadratureRule rule = gauss_rule(QuadKind::GaussLaguerre, 64);
    double max_err = 0.0;
    for (int n = 0; n <= 20; ++n)
        for (int m = n; m <= 20; ++m) {
            double s = quad_sum(rule, [&](double t) { return laguerre(n, t) * laguerre(m, t); });
            max_err = std::max(max_err, std::fabs(s - (n == m ? 1.0 : 0.0)));
        }
    CHECK(max_err < 1e-10);
}

TEST_CASE("laguerre three-term recurrence residual") {
    double max_rel = 0.0;
    for (int n = 1; n <= 50; ++n) {
        for (int k = 0; k <= 200; ++k) {
            double t = 0.5 * k;
            double lhs = t * laguerre(n, t);
            double rhs = (2.0 * n + 1.0) * laguerre(n, t) - n * laguerre(n - 1, t) -
                         (n + 1.0) * laguerre(n + 1, t);
            double scale = std::fabs((2.0 * n + 1.0) * laguerre(n, t)) +
                           std::fabs(n * laguerre(n - 1, t)) +
                           std::fabs((n + 1.0) * laguerre(n + 1, t)) + 1.0;
            max_rel = std::max(max_rel, std::fabs(lhs - rhs) / scale);
        }
    }
    CHECK(max_rel < 1e-9);
}

TEST_CASE("bessel special values") {
    CHECK(bessel_j0(0.0) == 1.0);
    CHECK(bessel_j1(0.0) == 0.0);
    // locate the first J0 zero by bisection on the quadrature oracle
    double lo = 2.0, hi = 3.0;
    for (int i = 0; i < 60; ++i) {
        double mid = 0.5 * (lo + hi);
        if (j0_quadrature(mid) > 0.0)
            lo = mid;
        else
            hi = mid;
    }
    double zero = 0.5 * (lo + hi);
    CHECK(zero == doctest::Approx(2.40482555769577).epsilon(1e-11));
    CHECK(std::fabs(bessel_j0(zero)) < 1e-10);
}

TEST_CASE("bessel matches quadrature oracle on [0, 50]") {
    double max_err = 0.0;
    for (int k = 0; k <= 500; ++k) {
        double x = 0.1 * k;
        max_err = std::max(max_err, std::fabs(bessel_j0(x) - j0_quadrature(x)));
        CHECK(std::fabs(bessel_j0(x)) <= 1.0 + 1e-14);
    }
    CHECK(max_err < 1e-10);
}

TEST_CASE("bessel j1 odd symmetry and derivative relation") {
    for (double x : {0.3, 1.7, 9.0, 23.5}) {
        CHECK(bessel_j1(-x) == doctest::Approx(-bessel_j1(x)).epsilon(1e-14));
        // J0' = -J1 via central differences
        double h = 1e-6;
        double d = (bessel_j0(x + h) - bessel_j0(x - h)) / (2.0 * h);
        CHECK(d == doctest::Approx(-bessel_j1(x)).epsilon(1e-7));
    }
}

TEST_CASE("gauss rule invariants and exactness") {
    for (int n : {1, 2, 8, 33, 128}) {
        for (QuadKind kind : {QuadKind::GaussLegendre, QuadKind::GaussLaguerre}) {
            QuadratureRule rule = gauss_rule(kind, n);
            REQUIRE(rule.size() == n);
            for (int i = 1; i < n; ++i) CHECK(rule.nodes[i] > rule.nodes[i - 1]);
            for (double w : rule.weights) CHECK(w > 0.0);
        }
    }
    QuadratureRule lag8 = gauss_rule(QuadKind::GaussLaguerre, 8);
    CHECK(quad_sum(lag8, [](double) { return 1.0; }) == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(quad_sum(lag8, [](double t) { return t; }) == doctest::Approx(1.0).epsilon(1e-12));
    QuadratureRule leg4 = gauss_rule(QuadKind::GaussLegendre, 4);
    CHECK(quad_sum(leg4, [](double t) { return std::pow(t, 6.0); }) ==
          doctest::Approx(2.0 / 7.0).epsilon(1e-13));
    // degree exactness on monomials: n nodes integrate degree <= 2n-1
    for (int n : {3, 5, 9}) {
        QuadratureRule leg = gauss_rule(QuadKind::GaussLegendre, n);
        for (int d = 0; d <= 2 * n - 1; ++d) {
            double exact = (d % 2 == 0) ? 2.0 / (d + 1.0) : 0.0;
            CHECK(quad_sum(leg, [&](double t) { return std::pow(t, d); }) ==
                  doctest::Approx(exact).epsilon(1e-12));
        }
        QuadratureRule lag = gauss_rule(QuadKind::GaussLaguerre, n);
        double exact = 1.0;  // d!
        for (int d = 0; d <= 2 * n - 1; ++d) {
            if (d > 0) exact *= d;
            double got = quad_sum(lag, [&](double t) { return std::pow(t, d); });
            CHECK(got == doctest::Approx(exact).epsilon(1e-11));
        }
    }
    CHECK_THROWS_AS(gauss_rule(QuadKind::GaussLegendre, 0), ConfigError);
    CHECK_THROWS_AS(gauss_rule(QuadKind::GaussLaguerre, 513), ConfigError);
}

TEST_CASE("mollifier profile") {
    Mollifier m = mollifier(0.5, 2.0);
    CHECK(m(0.5) == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
    CHECK(m(2.5) == 0.0);
    CHECK(m(-1.5) == 0.0);
    CHECK(m(10.0) == 0.0);
    CHECK_THROWS_AS(mollifier(0.0, 0.0), std::invalid_argument);

    // smoothness at the support boundary: 4th central difference stays tiny
    // and shrinks with the step
    auto fd4 = [&](double x, double h) {
        return (m(x - 2 * h) - 4 * m(x - h) + 6 * m(x) - 4 * m(x + h) + m(x + 2 * h)) /
               (h * h * h * h);
    };
    for (double x : {0.5 - 2.0, 0.5 + 2.0}) {
        CHECK(std::fabs(fd4(x, 1e-2)) < 1e-6);
        CHECK(std::fabs(fd4(x, 5e-3)) <= std::fabs(fd4(x, 1e-2)) + 1e-12);
    }
}
