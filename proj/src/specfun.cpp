#include "sphdiff/specfun.hpp"

#include "sphdiff/errors.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>
#include <string>

namespace sphdiff {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

double laguerre(int n, double t) {
    if (!std::isfinite(t)) throw std::domain_error("laguerre: non-finite argument");
    if (n < 0 || n > 10000) throw std::invalid_argument("laguerre: n out of range");
    if (n == 0) return 1.0;
    double lm = 1.0, l = 1.0 - t;
    for (int k = 1; k < n; ++k) {
        double lp = ((2.0 * k + 1.0 - t) * l - k * lm) / (k + 1.0);
        lm = l;
        l = lp;
    }
    return l;
}

double laguerre_scaled(int n, double t) {
    if (!std::isfinite(t)) throw std::domain_error("laguerre_scaled: non-finite argument");
    if (n < 0 || n > 10000) throw std::invalid_argument("laguerre_scaled: n out of range");
    // Scaled recurrence: e^{-t/2} L_n satisfies the same three-term relation.
    double e = std::exp(-0.5 * t);
    if (n == 0) return e;
    double lm = e, l = (1.0 - t) * e;
    for (int k = 1; k < n; ++k) {
        double lp = ((2.0 * k + 1.0 - t) * l - k * lm) / (k + 1.0);
        lm = l;
        l = lp;
    }
    return l;
}

namespace {

// Power series sum_k (-x^2/4)^k / (k!)^2 [ / (k!(k+1)!) for J1 ], with
// compensated summation to keep cancellation error near machine precision.
double bessel_series(int order, double x) {
    const double q = -0.25 * x * x;
    double term = (order == 0) ? 1.0 : 0.5 * x;
    double sum = term, comp = 0.0;
    for (int k = 1; k < 200; ++k) {
        term *= q / (static_cast<double>(k) * (k + order));
        double y = term - comp;
        double t = sum + y;
        comp = (t - sum) - y;
        sum = t;
        if (std::fabs(term) < 1e-18 * (std::fabs(sum) + 1e-300)) break;
    }
    return sum;
}

// Hankel asymptotic expansion, usable for x >= 12. Coefficients are built
// on the fly from A_m = prod_{j<=m} (mu - (2j-1)^2) / (m! 8^m), mu = 4 nu^2,
// truncated at the smallest term.
double bessel_asymptotic(int order, double x) {
    const double mu = 4.0 * order * order;
    double p = 1.0, q = 0.0;
    double a = 1.0;
    double last = 1.0;
    for (int m = 1; m <= 40; ++m) {
        double j = 2.0 * m - 1.0;
        a *= (mu - j * j) / (8.0 * m * x);
        if (std::fabs(a) >= last) break;  // past the smallest term
        last = std::fabs(a);
        int r = m % 4;
        if (r == 1)
            q += a;
        else if (r == 2)
            p -= a;
        else if (r == 3)
            q -= a;
        else
            p += a;
        if (last < 1e-17) break;
    }
    const double chi = x - (2.0 * order + 1.0) * kPi / 4.0;
    return std::sqrt(2.0 / (kPi * x)) * (p * std::cos(chi) - q * std::sin(chi));
}

}  // namespace

double bessel_j(BesselOrder order, double x) {
    if (!std::isfinite(x)) throw std::domain_error("bessel_j: non-finite argument");
    const int nu = (order == BesselOrder::J0) ? 0 : 1;
    double ax = std::fabs(x);
    double v = (ax < 12.0) ? bessel_series(nu, ax) : bessel_asymptotic(nu, ax);
    if (nu == 1 && x < 0.0) v = -v;  // J1 is odd
    return v;
}

double bessel_j0(double x) { return bessel_j(BesselOrder::J0, x); }
double bessel_j1(double x) { return bessel_j(BesselOrder::J1, x); }

namespace {

// Legendre P_n and derivative via recurrence; Newton from Chebyshev-like guesses.
QuadratureRule make_gauss_legendre(int n) {
    QuadratureRule rule;
    rule.kind = QuadKind::GaussLegendre;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(kPi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            double dx = p1 / dp;
            x -= dx;
            if (std::fabs(dx) < 1e-15) break;
        }
        rule.nodes[i] = -x;
        rule.nodes[n - 1 - i] = x;
        double w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.weights[i] = w;
        rule.weights[n - 1 - i] = w;
    }
    if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
    return rule;
}

// Scaled recurrence values (e^{-x/2} L_m(x), e^{-x/2} L_{m-1}(x)).
std::pair<double, double> laguerre_scaled_pair(int m, double x) {
    double e = std::exp(-0.5 * x);
    double lm = e, l = (1.0 - x) * e;  // L_0, L_1 scaled
    if (m == 0) return {e, 0.0};
    for (int k = 1; k < m; ++k) {
        double lp = ((2.0 * k + 1.0 - x) * l - k * lm) / (k + 1.0);
        lm = l;
        l = lp;
    }
    return {l, lm};
}

// Gauss-Laguerre via Newton on the scaled polynomial e^{-x/2} L_n(x).
// Weights in log space: log w_i = log x_i - x_i - 2 log((n+1) |Lt_{n+1}(x_i)|),
// where Lt = e^{-x/2} L. Extreme tail weights may underflow for large n.
QuadratureRule make_gauss_laguerre(int n) {
    QuadratureRule rule;
    rule.kind = QuadKind::GaussLaguerre;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    double x = 0.0;
    for (int i = 0; i < n; ++i) {
        // Stroud-Secrest style initial guesses.
        if (i == 0)
            x = 3.0 / (1.0 + 2.4 * n);
        else if (i == 1)
            x += 15.0 / (1.0 + 2.5 * n);
        else
            x += ((1.0 + 2.55 * (i - 1)) / (1.9 * (i - 1))) * (x - rule.nodes[i - 2]);
        for (int iter = 0; iter < 200; ++iter) {
            auto [l, prev] = laguerre_scaled_pair(n, x);
            // d/dx [e^{-x/2} L_n] = e^{-x/2}(L_n' - L_n/2), x L_n' = n(L_n - L_{n-1})
            double deriv = (n * (l - prev)) / x - 0.5 * l;
            double dx = l / deriv;
            x -= dx;
            if (std::fabs(dx) < 1e-15 * (1.0 + x)) break;
        }
        rule.nodes[i] = x;
        auto [lnp1, unused] = laguerre_scaled_pair(n + 1, x);
        (void)unused;
        double logw = std::log(x) - x - 2.0 * std::log((n + 1.0) * std::fabs(lnp1));
        rule.weights[i] = std::exp(logw);
    }
    return rule;
}

std::mutex g_rule_mutex;
std::map<std::pair<int, int>, QuadratureRule> g_rule_cache;

}  // namespace

QuadratureRule gauss_rule(QuadKind kind, int n) {
    if (n < 1 || n > 512)
        throw ConfigError("gauss_rule: order must be in [1, 512], got " + std::to_string(n));
    std::lock_guard<std::mutex> lock(g_rule_mutex);
    auto key = std::make_pair(static_cast<int>(kind), n);
    auto it = g_rule_cache.find(key);
    if (it != g_rule_cache.end()) return it->second;
    QuadratureRule rule = (kind == QuadKind::GaussLegendre) ? make_gauss_legendre(n)
                                                            : make_gauss_laguerre(n);
    g_rule_cache[key] = rule;
    return rule;
}

QuadratureRule gauss_legendre(int n, double a, double b) {
    QuadratureRule base = gauss_rule(QuadKind::GaussLegendre, n);
    QuadratureRule out;
    out.kind = QuadKind::GaussLegendre;
    out.nodes.resize(n);
    out.weights.resize(n);
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    for (int i = 0; i < n; ++i) {
        out.nodes[i] = mid + half * base.nodes[i];
        out.weights[i] = half * base.weights[i];
    }
    return out;
}

double Mollifier::operator()(double u) const {
    double s = (u - center) / radius;
    double s2 = s * s;
    if (s2 >= 1.0) return 0.0;
    return std::exp(-1.0 / (1.0 - s2));
}

Mollifier mollifier(double center, double radius) {
    if (!(radius > 0.0)) throw std::invalid_argument("mollifier: radius must be positive");
    return Mollifier{center, radius};
}

}  // namespace sphdiff
