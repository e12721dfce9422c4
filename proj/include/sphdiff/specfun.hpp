#pragma once

// Special functions and quadrature underlying everything else:
// Laguerre polynomials (standard normalization, L_0 = 1, L_1 = 1 - t),
// Bessel J0/J1, Gauss-Legendre / Gauss-Laguerre rules, and the C_c^inf
// bump profile used as default test function.
//
// Note on the Laguerre normalization: the Rodrigues formula
// e^{-t} (d/dt)^k (e^t t^k) is sometimes quoted without the e^t/k! factor;
// that variant is inconsistent with the orthonormality relation
// int L_n L_m e^{-t} dt = delta_{nm} and with L_n(0) = 1, both of which the
// rest of this library relies on. We use L_k(t) = (e^t/k!) (d/dt)^k (e^{-t} t^k).

#include <functional>
#include <vector>

namespace sphdiff {

// L_n(t) by upward three-term recurrence. Throws std::domain_error for
// non-finite t, std::invalid_argument for n outside [0, 10^4].
double laguerre(int n, double t);

// e^{-t/2} L_n(t), computed with the scaled recurrence (no overflow for
// large t; |result| <= 1 on t >= 0).
double laguerre_scaled(int n, double t);

enum class BesselOrder { J0, J1 };

// Accurate to ~1e-12 (relative to the envelope sqrt(2/pi x)) for |x| <= 50,
// and to ~1e-13 absolute for larger arguments. Power series below |x| = 12,
// Hankel asymptotic expansion above.
double bessel_j(BesselOrder order, double x);
double bessel_j0(double x);
double bessel_j1(double x);

enum class QuadKind { GaussLegendre, GaussLaguerre };

struct QuadratureRule {
    QuadKind kind;
    std::vector<double> nodes;    // strictly increasing
    std::vector<double> weights;  // positive (extreme Laguerre tails may
                                  // underflow to 0 for n >~ 160)
    int size() const { return static_cast<int>(nodes.size()); }
};

// GaussLegendre is returned on [-1, 1]; GaussLaguerre on [0, inf) against
// e^{-t}. Deterministic; nodes accurate to ~1e-14. n in [1, 512].
QuadratureRule gauss_rule(QuadKind kind, int n);

// Gauss-Legendre rule mapped to [a, b].
QuadratureRule gauss_legendre(int n, double a, double b);

template <typename F>
double quad_sum(const QuadratureRule& rule, F&& f) {
    double s = 0.0, c = 0.0;
    for (int i = 0; i < rule.size(); ++i) {
        double y = rule.weights[i] * f(rule.nodes[i]) - c;
        double t = s + y;
        c = (t - s) - y;
        s = t;
    }
    return s;
}

// Smooth compactly supported profile u -> exp(-1/(1-s^2)), s = (u-center)/radius,
// zero outside |s| < 1.
struct Mollifier {
    double center = 0.0;
    double radius = 1.0;
    double operator()(double u) const;
};

Mollifier mollifier(double center, double radius);

}  // namespace sphdiff
