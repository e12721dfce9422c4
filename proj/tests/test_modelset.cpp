#include "sphdiff/errors.hpp"
#include "sphdiff/modelset.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

using namespace sphdiff;

namespace {
constexpr double kSqrt2 = 1.41421356237309504880;

Window verified(const Scheme& scheme, Window w, double radius) {
    w.status = window_regularity_check(scheme, w, radius);
    REQUIRE(w.status.state == RegularityStatus::State::Verified);
    return w;
}
}  // namespace

TEST_CASE("window validation") {
    CHECK_THROWS_AS(interval_window(1.0, 1.0), ConfigError);
    CHECK_THROWS_AS(annulus_window(-0.1, 1.0), ConfigError);
    CHECK_THROWS_AS(annulus_window(1.0, 0.5), ConfigError);
    Window w = heisenberg_window(-0.3, 0.3, {{0.0, 0.4}});
    CHECK(w.measure() == doctest::Approx(0.6 * 3.14159265358979 * 0.16).epsilon(1e-12));
}

TEST_CASE("regularity check hits the silver boundary at 1") {
    Scheme scheme = abelian_silver_scheme();
    Window w = interval_window(-1.0, 1.0);
    RegularityStatus st = window_regularity_check(scheme, w, 50.0);
    REQUIRE(st.state == RegularityStatus::State::BoundaryHit);
    // a = 1, b = 0 projects to internal coordinate exactly 1
    CHECK(std::fabs(std::fabs(st.hit_internal[0]) - 1.0) < 1e-12);

    Window ok = interval_window(-0.7, 0.7);
    RegularityStatus st2 = window_regularity_check(scheme, ok, 100.0);
    CHECK(st2.state == RegularityStatus::State::Verified);
    CHECK(st2.radius == 100.0);
}

TEST_CASE("generate_points requires a certificate") {
    Scheme scheme = abelian_silver_scheme();
    Window w = interval_window(-0.7, 0.7);
    CHECK_THROWS_AS(generate_points(scheme, w, 100.0), PreconditionError);
    CHECK_NOTHROW(generate_points(scheme, w, 100.0, /*allow_unverified=*/true));
}

TEST_CASE("silver model set density") {
    Scheme scheme = abelian_silver_scheme();
    Window w = verified(scheme, interval_window(-0.7, 0.7), 1100.0);
    ModelSetSample s = generate_points(scheme, w, 1000.0);
    double expect = 1.4 / (2.0 * kSqrt2);
    CHECK(std::fabs(s.density - expect) < 0.01);

    // monotone in the window: a near-degenerate window has density near 0
    Window tiny = interval_window(0.1234, 0.1234 + 1e-6);
    tiny.status.state = RegularityStatus::State::Verified;
    ModelSetSample s2 = generate_points(scheme, tiny, 1000.0);
    CHECK(s2.density < 0.01);
}

TEST_CASE("symmetric window gives a symmetric point set") {
    Scheme scheme = abelian_silver_scheme();
    Window w = verified(scheme, interval_window(-0.7, 0.7), 250.0);
    ModelSetSample s = generate_points(scheme, w, 200.0);
    std::set<long long> keys;
    for (size_t i = 0; i < s.num_points(); ++i)
        keys.insert(std::llround(s.coords[i] * 1e9));
    for (long long k : keys) CHECK(keys.count(-k) == 1);
}

TEST_CASE("lift reconstruction") {
    Scheme scheme = abelian_silver_scheme();
    Window w = verified(scheme, interval_window(-0.7, 0.7), 600.0);
    ModelSetSample s = generate_points(scheme, w, 500.0);
    REQUIRE(s.num_points() > 100);
    size_t step = std::max<size_t>(1, s.num_points() / 1000);
    for (size_t i = 0; i < s.num_points(); i += step)
        CHECK(lift_in_window(scheme, w, s.point(i)));
    // a shifted point admits no lift
    Vec fake{s.coords[0] + 0.11};
    CHECK(!lift_in_window(scheme, w, fake));
}

TEST_CASE("density converges like C/R") {
    Scheme scheme = abelian_silver_scheme();
    Window w = verified(scheme, interval_window(-0.7, 0.7), 2100.0);
    double expect = 1.4 / (2.0 * kSqrt2);
    for (double R : {500.0, 1000.0, 2000.0}) {
        ModelSetSample s = generate_points(scheme, w, R);
        CHECK(std::fabs(s.density - expect) < 2.0 / R);
    }
}

TEST_CASE("empirical autocorrelation: diagonal-only support") {
    Scheme scheme = abelian_silver_scheme();
    Window w = verified(scheme, interval_window(-0.7, 0.7), 1300.0);
    ModelSetSample s = generate_points(scheme, w, 1210.0);
    // smallest nonzero |x - y| in the silver model set is well above 0.15
    Mollifier m = mollifier(0.0, 0.15);
    GroupTestFunction f = abelian_test_function([m](double t) { return m(t); }, 0.15);
    double got = empirical_autocorr(s, f, 1200.0);
    double expect = m(0.0) * s.density;
    CHECK(std::fabs(got - expect) < 0.01 * expect + 1e-4);
}

TEST_CASE("empirical autocorrelation: precondition and relabeling") {
    Scheme scheme = abelian_silver_scheme();
    Window w = verified(scheme, interval_window(-0.7, 0.7), 130.0);
    ModelSetSample s = generate_points(scheme, w, 120.0);
    Mollifier m = mollifier(0.0, 1.0);
    GroupTestFunction f = abelian_test_function([m](double t) { return m(t); }, 1.0);
    CHECK_THROWS_AS(empirical_autocorr(s, f, 119.5), PreconditionError);

    double a = empirical_autocorr(s, f, 100.0);
    // permute the stored points; the value must not change
    ModelSetSample shuffled = s;
    std::mt19937_64 rng(5);
    std::vector<size_t> perm(s.num_points());
    for (size_t i = 0; i < perm.size(); ++i) perm[i] = i;
    std::shuffle(perm.begin(), perm.end(), rng);
    for (size_t i = 0; i < perm.size(); ++i) shuffled.coords[i] = s.coords[perm[i]];
    double b = empirical_autocorr(shuffled, f, 100.0);
    CHECK(a == doctest::Approx(b).epsilon(1e-12));
}

TEST_CASE("abelian autocorrelation converges with R") {
    Scheme scheme = abelian_silver_scheme();
    Window w = verified(scheme, interval_window(-0.7, 0.7), 2200.0);
    ModelSetSample s = generate_points(scheme, w, 2105.0);
    Mollifier m = mollifier(0.0, 1.0);
    GroupTestFunction f = abelian_test_function([m](double t) { return m(t); }, 1.0);
    double v500 = empirical_autocorr(s, f, 500.0);
    double v2000 = empirical_autocorr(s, f, 2000.0);
    CHECK(std::fabs(v500 - v2000) < 5.0 / 500.0);
}

TEST_CASE("heisenberg scheme construction and compatibility") {
    Scheme scheme = heisenberg_silver_scheme();
    CHECK(scheme.xi.covolume == doctest::Approx(0.5 * kSqrt2).epsilon(1e-12));
    CHECK(scheme.delta.covolume == doctest::Approx(8.0).epsilon(1e-12));
    CHECK(scheme.covolume() == doctest::Approx(4.0 * kSqrt2).epsilon(1e-12));
    CHECK(scheme.note.find("rescaled") != std::string::npos);

    // the unrepaired pair must be rejected
    CHECK_THROWS_AS(heisenberg_scheme(silver_lattice(), gaussian_silver_lattice(1, 1), 1, 1),
                    PreconditionError);
}

TEST_CASE("heisenberg generation, lifts and Koranyi filter") {
    Scheme scheme = heisenberg_silver_scheme();
    Window w = heisenberg_window(-0.35, 0.35, {{0.0, 0.35}});
    w = verified(scheme, w, 20.0);
    ModelSetSample s = generate_points(scheme, w, 18.0);
    REQUIRE(s.num_points() > 50);
    CHECK(s.point_dim == 3);
    for (size_t i = 0; i < s.num_points(); ++i) {
        Vec p = s.point(i);
        HeisenbergPoint hp{p[0], {Complex(p[1], p[2])}};
        CHECK(koranyi_norm(hp) <= 18.0 + 1e-9);
    }
    size_t step = std::max<size_t>(1, s.num_points() / 300);
    for (size_t i = 0; i < s.num_points(); i += step)
        CHECK(lift_in_window(scheme, w, s.point(i)));

    // density approaches Leb(W)/covol
    double expect = w.measure() / scheme.covolume();
    CHECK(std::fabs(s.density - expect) / expect < 0.35);
}

TEST_CASE("heisenberg pair sum matches the brute-force oracle") {
    Scheme scheme = heisenberg_silver_scheme();
    Window w = heisenberg_window(-0.45, 0.45, {{0.0, 0.55}});
    w = verified(scheme, w, 16.0);
    ModelSetSample s = generate_points(scheme, w, 15.0);
    REQUIRE(s.num_points() > 100);

    PolyradialFunction pf = default_test_function(1);
    GroupTestFunction f = heisenberg_test_function(pf);
    const double R = 15.0 - 2.0 * f.support_radius;
    double fast = empirical_autocorr(s, f, R);

    // O(N^2) reference sum
    const size_t n = s.num_points();
    double slow = 0.0;
    const double R4 = R * R * R * R;
    for (size_t i = 0; i < n; ++i) {
        double ti = s.coords[3 * i], xi = s.coords[3 * i + 1], yi = s.coords[3 * i + 2];
        double v2 = xi * xi + yi * yi;
        if (v2 * v2 + ti * ti > R4) continue;
        for (size_t j = 0; j < n; ++j) {
            double dvx = s.coords[3 * j + 1] - xi, dvy = s.coords[3 * j + 2] - yi;
            double beta = -0.5 * (yi * s.coords[3 * j + 1] - xi * s.coords[3 * j + 2]);
            double dt = s.coords[3 * j] - ti - beta;
            double d[3] = {dt, dvx, dvy};
            slow += f.eval(d, 3);
        }
    }
    slow /= scheme.phys_ball_volume(R);
    CHECK(fast == doctest::Approx(slow).epsilon(1e-10));
}

TEST_CASE("FLC spot-check: local difference set stabilizes") {
    Scheme scheme = abelian_silver_scheme();
    Window w = verified(scheme, interval_window(-0.7, 0.7), 900.0);
    auto diffs = [&](double R) {
        ModelSetSample s = generate_points(scheme, w, R);
        std::set<long long> keys;
        for (size_t i = 0; i < s.num_points(); ++i)
            for (size_t j = 0; j < s.num_points(); ++j) {
                double d = s.coords[j] - s.coords[i];
                if (std::fabs(d) <= 3.0) keys.insert(std::llround(d * 1e9));
            }
        return keys;
    };
    auto d400 = diffs(400.0);
    auto d800 = diffs(800.0);
    CHECK(d400.size() == d800.size());  // finite and stable
    CHECK(d400.size() < 40);
}

TEST_CASE("euclidean scheme basics") {
    Scheme scheme = euclidean_gaussian_silver_scheme();
    Window w = annulus_window(0.0, 0.6);
    w.status = window_regularity_check(scheme, w, 60.0);
    REQUIRE(w.status.state == RegularityStatus::State::Verified);
    ModelSetSample s = generate_points(scheme, w, 50.0);
    REQUIRE(s.num_points() > 50);
    double expect = w.measure() / scheme.covolume();
    CHECK(std::fabs(s.density - expect) / expect < 0.2);
    size_t step = std::max<size_t>(1, s.num_points() / 200);
    for (size_t i = 0; i < s.num_points(); i += step)
        CHECK(lift_in_window(scheme, w, s.point(i)));
}

TEST_CASE("autocorrelation of f * f^* is nonnegative") {
    // abelian variant: (f * f^*)(t) = int f(s) f(s - t) ds for real f
    Scheme scheme = abelian_silver_scheme();
    Window w = verified(scheme, interval_window(-0.7, 0.7), 700.0);
    ModelSetSample s = generate_points(scheme, w, 650.0);
    Mollifier m = mollifier(0.0, 1.0);
    QuadratureRule rule = gauss_legendre(128, -1.0, 1.0);
    auto ff = [&](double t) {
        return quad_sum(rule, [&](double u) { return m(u) * m(u - t); });
    };
    GroupTestFunction f = abelian_test_function(ff, 2.0);
    double v = empirical_autocorr(s, f, 600.0);
    CHECK(v >= -1e-9);
    CHECK(v > 0.01);  // genuinely positive at this density
}
