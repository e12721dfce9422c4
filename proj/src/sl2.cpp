#include "sphdiff/sl2.hpp"

#include "sphdiff/errors.hpp"
#include "sphdiff/linalg.hpp"
#include "sphdiff/parallel.hpp"

#include <cmath>
#include <stdexcept>

namespace sphdiff {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kTwoPi = 2.0 * kPi;
}

SL2 sl2_a(double t) { return SL2{std::exp(0.5 * t), 0.0, 0.0, std::exp(-0.5 * t)}; }
SL2 sl2_n(double u) { return SL2{1.0, u, 0.0, 1.0}; }
SL2 sl2_k(double theta) {
    double c = std::cos(kTwoPi * theta), s = std::sin(kTwoPi * theta);
    return SL2{c, s, -s, c};
}

IwasawaCoords iwasawa(const SL2& g) {
    if (std::fabs(g.det() - 1.0) > 1e-9)
        throw std::domain_error("iwasawa: determinant must be 1");
    // bottom row of a_t n_u is (0, e^{-t/2}); right-multiplying by k_{-theta}
    // must zero the (1,0) entry with positive (1,1) entry.
    double nrm = std::hypot(g.c, g.d);
    double theta = std::atan2(-g.c, g.d) / kTwoPi;
    if (theta < 0.0) theta += 1.0;
    double t = -2.0 * std::log(nrm);
    SL2 an = g * sl2_k(-theta);  // k_theta^{-1} = k_{-theta}
    double u = an.b / an.a;
    return IwasawaCoords{t, u, theta};
}

double cartan_t(const SL2& g) {
    double T = g.a * g.a + g.b * g.b + g.c * g.c + g.d * g.d;  // tr(g g^T)
    if (T < 2.0) T = 2.0;
    // sigma_1^2 = (T + sqrt(T^2 - 4)) / 2, t = log sigma_1^2
    return std::log(0.5 * (T + std::sqrt((T - 2.0) * (T + 2.0))));
}

double BiKFunction::operator()(const SL2& g) const {
    double t = cartan_t(g);
    return (t < T0) ? h(t) : 0.0;
}

BiKFunction bik_from_mollifier(double T0) {
    Mollifier m = mollifier(0.0, T0);
    return BiKFunction{[m](double t) { return m(t); }, T0};
}

namespace {

// cartan_t(a_t n_u) <= T0 iff e^t (1 + u^2) + e^{-t} <= 2 cosh T0.
double u_support(double t, double T0) {
    double bound = (2.0 * std::cosh(T0) - std::exp(-t)) * std::exp(-t) - 1.0;
    return bound > 0.0 ? std::sqrt(bound) : 0.0;
}

}  // namespace

double harish_transform(const BiKFunction& f, double t) {
    if (std::fabs(t) >= f.T0) return 0.0;
    double umax = u_support(t, f.T0);
    if (umax == 0.0) return 0.0;
    QuadratureRule rule = gauss_legendre(192, -umax, umax);
    double integral = quad_sum(rule, [&](double u) { return f(sl2_a(t) * sl2_n(u)); });
    return std::exp(0.5 * t) * integral;
}

Complex mellin(const std::function<double(double)>& phi, double support, Complex z) {
    QuadratureRule rule = gauss_legendre(256, -support, support);
    Complex s(0.0, 0.0);
    for (int i = 0; i < rule.size(); ++i) {
        double t = rule.nodes[i];
        s += rule.weights[i] * phi(t) * std::exp(0.5 * t * z);
    }
    return s;
}

namespace {

// e^{w (z+1)} for real w: cheaper than std::pow on complex base
inline Complex real_power(double rho, Complex z) {
    double lr = std::log(rho);
    double re = lr * (z.real() + 1.0), im = lr * z.imag();
    double m = std::exp(re);
    return Complex(m * std::cos(im), m * std::sin(im));
}

}  // namespace

Complex spherical_omega(Complex z, const SL2& g, int theta_nodes) {
    QuadratureRule rule = gauss_legendre(theta_nodes, 0.0, 1.0);
    Complex s(0.0, 0.0);
    for (int i = 0; i < rule.size(); ++i) {
        SL2 kg = sl2_k(rule.nodes[i]) * g;
        // rho(a_t n_u k_theta) = e^{t/2} = 1 / |bottom row|
        double rho = 1.0 / std::hypot(kg.c, kg.d);
        s += rule.weights[i] * real_power(rho, z);
    }
    return s;
}

Complex spherical_transform(const BiKFunction& f, Complex z, int nodes) {
    QuadratureRule t_rule = gauss_legendre(nodes, -f.T0, f.T0);
    Complex total(0.0, 0.0);
    for (int i = 0; i < t_rule.size(); ++i) {
        double t = t_rule.nodes[i];
        double umax = u_support(t, f.T0);
        if (umax == 0.0) continue;
        QuadratureRule u_rule = gauss_legendre(nodes, -umax, umax);
        Complex inner(0.0, 0.0);
        for (int j = 0; j < u_rule.size(); ++j) {
            SL2 an = sl2_a(t) * sl2_n(u_rule.nodes[j]);
            double fv = f(an);
            if (fv == 0.0) continue;
            inner += u_rule.weights[j] * fv * spherical_omega(z, an);
        }
        total += t_rule.weights[i] * inner;
    }
    return total;
}

SmhReport verify_smh(const BiKFunction& f, const std::vector<Complex>& z_list,
                     double refine_tol) {
    auto run = [&](int nodes) {
        SmhReport rep;
        rep.rows.resize(z_list.size());
        // Harish transform tabulated once on the Mellin quadrature nodes
        QuadratureRule t_rule = gauss_legendre(256, -f.T0, f.T0);
        std::vector<double> hf(t_rule.size());
        for (int i = 0; i < t_rule.size(); ++i) hf[i] = harish_transform(f, t_rule.nodes[i]);
        parallel_shards(z_list.size(), static_cast<int>(z_list.size()),
                        [&](int, size_t zb, size_t ze) {
                            for (size_t zi = zb; zi < ze; ++zi) {
                                Complex z = z_list[zi];
                                SmhRow row;
                                row.z = z;
                                Complex mh(0.0, 0.0);
                                for (int i = 0; i < t_rule.size(); ++i)
                                    mh += t_rule.weights[i] * hf[i] *
                                          std::exp(0.5 * t_rule.nodes[i] * z);
                                row.mellin_harish = mh;
                                row.spherical = spherical_transform(f, z, nodes);
                                double denom = std::max(std::abs(row.spherical),
                                                        std::abs(row.mellin_harish));
                                row.rel_err = denom > 0.0
                                                  ? std::abs(row.spherical - row.mellin_harish) /
                                                        denom
                                                  : 0.0;
                                rep.rows[zi] = row;
                            }
                        });
        for (const auto& r : rep.rows) rep.max_rel_err = std::max(rep.max_rel_err, r.rel_err);
        return rep;
    };
    SmhReport rep = run(96);
    SmhReport fine = run(160);
    for (size_t i = 0; i < rep.rows.size(); ++i) {
        double move = std::abs(rep.rows[i].spherical - fine.rows[i].spherical);
        double scale = std::max(1.0, std::abs(fine.rows[i].spherical));
        if (move / scale > refine_tol)
            throw AccuracyError("verify_smh: quadrature did not converge", move / scale);
    }
    return fine;
}

SL2 random_sl2(std::mt19937_64& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (;;) {
        SL2 g{gauss(rng), gauss(rng), gauss(rng), gauss(rng)};
        double det = g.det();
        if (std::fabs(det) < 0.05) continue;
        double s = 1.0 / std::sqrt(std::fabs(det));
        g.a *= s;
        g.b *= s;
        g.c *= s;
        g.d *= s;
        if (det < 0.0) {
            // flip a column to restore det +1
            g.b = -g.b;
            g.d = -g.d;
        }
        return g;
    }
}

double omega_gram_min_eigenvalue(Complex z, const std::vector<SL2>& points) {
    const int n = static_cast<int>(points.size());
    Mat gram(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            Complex v = spherical_omega(z, points[i] * points[j].inverse());
            gram(i, j) = v.real();  // omega_z real on [-1,1] u iR via +/- z symmetry
        }
    // symmetrize against quadrature noise
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            double m = 0.5 * (gram(i, j) + gram(j, i));
            gram(i, j) = gram(j, i) = m;
        }
    Vec ev = symmetric_eigenvalues(gram);
    return ev.front();
}

}  // namespace sphdiff
