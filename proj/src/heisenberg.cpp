#include "sphdiff/heisenberg.hpp"

#include "sphdiff/errors.hpp"
#include "sphdiff/parallel.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>

namespace sphdiff {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kTwoPi = 2.0 * kPi;
}

HeisenbergPoint h_identity(int d) { return HeisenbergPoint{0.0, CVec(d, Complex(0.0, 0.0))}; }

double beta_form(const CVec& u, const CVec& v) {
    if (u.size() != v.size()) throw std::domain_error("beta_form: dimension mismatch");
    double s = 0.0;
    for (size_t j = 0; j < u.size(); ++j) s += std::imag(u[j] * std::conj(v[j]));
    return -0.5 * s;
}

HeisenbergPoint hmul(const HeisenbergPoint& p, const HeisenbergPoint& q) {
    if (p.v.size() != q.v.size()) throw std::domain_error("hmul: dimension mismatch");
    HeisenbergPoint r;
    r.t = p.t + q.t + beta_form(p.v, q.v);
    r.v.resize(p.v.size());
    for (size_t j = 0; j < p.v.size(); ++j) r.v[j] = p.v[j] + q.v[j];
    return r;
}

HeisenbergPoint hinv(const HeisenbergPoint& p) {
    HeisenbergPoint r;
    r.t = -p.t;
    r.v.resize(p.v.size());
    for (size_t j = 0; j < p.v.size(); ++j) r.v[j] = -p.v[j];
    return r;
}

double koranyi_norm(const HeisenbergPoint& p) {
    double v2 = 0.0;
    for (const auto& z : p.v) v2 += std::norm(z);
    return std::pow(v2 * v2 + p.t * p.t, 0.25);
}

namespace {

std::mutex g_ball_mutex;
std::map<int, double> g_unit_ball;

// vol = S_{2d-1} int_0^1 2 sqrt(1-r^4) r^{2d-1} dr, S_{2d-1} = 2 pi^d/(d-1)!
double unit_ball_volume(int d) {
    std::lock_guard<std::mutex> lock(g_ball_mutex);
    auto it = g_unit_ball.find(d);
    if (it != g_unit_ball.end()) return it->second;
    double fact = 1.0;
    for (int k = 1; k < d; ++k) fact *= k;
    double sphere = 2.0 * std::pow(kPi, d) / fact;  // area of S^{2d-1}
    // int_0^1 2 sqrt(1-r^4) r^{2d-1} dr = int_0^{pi/2} cos^2(phi) sin^{d-1}(phi) dphi
    // after r^2 = sin(phi); the substitution removes the sqrt endpoint
    // singularity so Gauss-Legendre converges to machine precision
    QuadratureRule rule = gauss_legendre(128, 0.0, 0.5 * kPi);
    double integral = quad_sum(rule, [&](double phi) {
        double c = std::cos(phi);
        return c * c * std::pow(std::sin(phi), d - 1);
    });
    double vol = sphere * integral;
    g_unit_ball[d] = vol;
    return vol;
}

}  // namespace

double ball_volume(int d, double R) {
    if (!(R > 0.0)) throw std::domain_error("ball_volume: R must be positive");
    return std::pow(R, 2.0 * d + 2.0) * unit_ball_volume(d);
}

SphericalParam SphericalParam::vertical(double tau, std::vector<int> alpha) {
    if (tau == 0.0) throw std::domain_error("SphericalParam: vertical requires tau != 0");
    SphericalParam p;
    p.kind = Kind::Vertical;
    p.tau = tau;
    p.alpha = std::move(alpha);
    return p;
}

SphericalParam SphericalParam::horizontal(std::vector<double> kappa) {
    SphericalParam p;
    p.kind = Kind::Horizontal;
    p.kappa = std::move(kappa);
    return p;
}

double q_eval(double tau, const std::vector<int>& alpha, const CVec& v) {
    if (tau == 0.0) throw std::domain_error("q_eval: tau must be nonzero (use the horizontal family)");
    if (alpha.size() != v.size()) throw std::domain_error("q_eval: dimension mismatch");
    double at = std::fabs(tau);
    double prod = 1.0;
    for (size_t j = 0; j < v.size(); ++j) {
        double s = 0.5 * at * std::norm(v[j]);
        prod *= laguerre_scaled(alpha[j], s);  // e^{-s/2} L_a(s)
    }
    return prod;
}

Complex omega_eval(const SphericalParam& param, const HeisenbergPoint& p) {
    if (param.dim() != static_cast<int>(p.v.size()))
        throw std::domain_error("omega_eval: dimension mismatch");
    if (param.kind == SphericalParam::Kind::Vertical) {
        double q = q_eval(param.tau, param.alpha, p.v);
        return std::polar(1.0, param.tau * p.t) * q;
    }
    double prod = 1.0;
    for (size_t j = 0; j < p.v.size(); ++j) prod *= bessel_j0(param.kappa[j] * std::abs(p.v[j]));
    return Complex(prod, 0.0);
}

double PolyradialFunction::operator()(double t, const CVec& v) const {
    if (v.size() != psi.size()) throw std::domain_error("PolyradialFunction: dimension mismatch");
    if (std::fabs(t) >= chi_support) return 0.0;
    double val = chi(t);
    for (size_t j = 0; j < psi.size(); ++j) {
        if (val == 0.0) return 0.0;
        val *= psi[j](std::abs(v[j]));
    }
    return val;
}

double PolyradialFunction::support_radius() const {
    double r2 = 0.0;
    for (const auto& p : psi) r2 += p.support * p.support;
    return std::pow(r2 * r2 + chi_support * chi_support, 0.25);
}

PolyradialFunction default_test_function(int d) {
    PolyradialFunction f;
    Mollifier chi = mollifier(0.0, 1.0);
    f.chi = [chi](double t) { return chi(t); };
    f.chi_support = 1.0;
    for (int j = 0; j < d; ++j) {
        Mollifier m = mollifier(0.0, 1.5);
        f.psi.push_back(RadialProfile{[m](double r) { return m(r); }, 1.5});
    }
    return f;
}

PolyradialFunction modulated_test_function(int d, double freq) {
    PolyradialFunction f = default_test_function(d);
    Mollifier chi = mollifier(0.0, 1.0);
    f.chi = [chi, freq](double t) { return chi(t) * (1.0 + std::cos(freq * t)); };
    return f;
}

Complex chi_hat(const PolyradialFunction& f, double tau) {
    int n = std::min(512, std::max(96, static_cast<int>(f.chi_support * std::fabs(tau))));
    QuadratureRule rule = gauss_legendre(n, -f.chi_support, f.chi_support);
    double re = quad_sum(rule, [&](double t) { return f.chi(t) * std::cos(tau * t); });
    double im = quad_sum(rule, [&](double t) { return -f.chi(t) * std::sin(tau * t); });
    return Complex(re, im);
}

Complex PolyradialSlice::operator()(const CVec& v) const {
    Complex val = coef;
    for (size_t j = 0; j < psi.size(); ++j) val *= psi[j](std::abs(v[j]));
    return val;
}

PolyradialSlice central_ft(const PolyradialFunction& f, double tau) {
    PolyradialSlice s;
    s.coef = chi_hat(f, tau);
    s.psi = f.psi;
    return s;
}

GridFunction sample_grid(const GridSpec& spec, const std::function<Complex(Complex)>& f) {
    GridFunction g;
    g.spec = spec;
    QuadratureRule rule = gauss_legendre(spec.n, -spec.half_width, spec.half_width);
    g.axis_nodes = rule.nodes;
    g.axis_weights = rule.weights;
    g.values.resize(static_cast<size_t>(spec.n) * spec.n);
    for (int i = 0; i < spec.n; ++i)
        for (int j = 0; j < spec.n; ++j)
            g.values[static_cast<size_t>(i) * spec.n + j] =
                f(Complex(rule.nodes[i], rule.nodes[j]));
    return g;
}

GridFunction twisted_convolve(const std::function<Complex(Complex)>& phi,
                              const std::function<Complex(Complex)>& psi, double tau,
                              const GridSpec& spec) {
    // decay precondition at the grid edge
    double edge = 0.0;
    const double L = spec.half_width;
    for (int k = 0; k <= 32; ++k) {
        double s = -L + 2.0 * L * k / 32.0;
        edge = std::max(edge, std::abs(phi(Complex(s, L))));
        edge = std::max(edge, std::abs(phi(Complex(L, s))));
        edge = std::max(edge, std::abs(psi(Complex(s, L))));
        edge = std::max(edge, std::abs(psi(Complex(L, s))));
    }
    if (edge > 1e-12)
        throw AccuracyError("twisted_convolve: insufficient decay at grid boundary", edge);

    GridFunction phi_g = sample_grid(spec, phi);
    GridFunction out;
    out.spec = spec;
    out.axis_nodes = phi_g.axis_nodes;
    out.axis_weights = phi_g.axis_weights;
    out.values.assign(static_cast<size_t>(spec.n) * spec.n, Complex(0.0, 0.0));

    const int n = spec.n;
    const auto& nodes = phi_g.axis_nodes;
    const auto& w = phi_g.axis_weights;
    parallel_shards(static_cast<size_t>(n), 2 * thread_cap(), [&](int, size_t ib, size_t ie) {
        for (size_t i = ib; i < ie; ++i) {
            double vx = nodes[i];
            for (int j = 0; j < n; ++j) {
                double vy = nodes[j];
                Complex v(vx, vy);
                Complex acc(0.0, 0.0);
                for (int k = 0; k < n; ++k) {
                    double ux = nodes[k];
                    double wk = w[k];
                    for (int l = 0; l < n; ++l) {
                        Complex u(ux, nodes[l]);
                        Complex pv = phi_g.at(k, l);
                        if (pv == Complex(0.0, 0.0)) continue;
                        // beta(u, v) = -Im(u conj(v))/2
                        double b = -0.5 * (u.imag() * v.real() - u.real() * v.imag());
                        acc += wk * w[l] * pv * psi(v - u) * std::polar(1.0, -tau * b);
                    }
                }
                out.values[i * n + j] = acc;
            }
        }
    });
    return out;
}

double radial_q_inner(const RadialProfile& phi, double tau, int a) {
    double at = std::fabs(tau);
    // integrate to where the Gaussian factor is < 1e-16, or the profile ends
    double rmax = phi.support;
    if (at > 0.0) rmax = std::min(rmax, std::sqrt(4.0 * 37.0 / at));
    if (!(rmax > 0.0)) return 0.0;
    int n = std::max(96, a + 32);
    QuadratureRule rule = gauss_legendre(n, 0.0, rmax);
    return kTwoPi * quad_sum(rule, [&](double r) {
        return phi(r) * laguerre_scaled(a, 0.5 * at * r * r) * r;
    });
}

Complex spherical_ft(const PolyradialFunction& f, const SphericalParam& param) {
    if (param.dim() != f.dim()) throw std::domain_error("spherical_ft: dimension mismatch");
    if (param.kind == SphericalParam::Kind::Vertical) {
        Complex val = chi_hat(f, param.tau);
        for (int j = 0; j < f.dim(); ++j)
            val *= radial_q_inner(f.psi[j], param.tau, param.alpha[j]);
        return val;
    }
    Complex val = chi_hat(f, 0.0);
    for (int j = 0; j < f.dim(); ++j) {
        const RadialProfile& p = f.psi[j];
        double kj = param.kappa[j];
        int n = std::max(96, static_cast<int>(kj * p.support) + 32);
        QuadratureRule rule = gauss_legendre(std::min(n, 512), 0.0, p.support);
        val *= kTwoPi * quad_sum(rule, [&](double r) { return p(r) * bessel_j0(kj * r) * r; });
    }
    return val;
}

}  // namespace sphdiff
