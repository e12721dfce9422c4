#pragma once

// Numerical checks for the hyperbolic-plane transform identities:
// Iwasawa coordinates g = a_t n_u k_theta (with k_theta in terms of
// cos 2 pi theta, theta in [0,1)), the Harish transform
// (Hf)(t) = e^{t/2} int f(a_t n_u) du, the even Mellin transform
// M phi(z) = int phi(t) e^{tz/2} dt, the spherical functions
// omega_z(g) = int_0^1 rho(k_theta g)^{z+1} dtheta, and the identity
// S f = M(H f).

#include "sphdiff/specfun.hpp"

#include <complex>
#include <functional>
#include <random>
#include <vector>

namespace sphdiff {

using Complex = std::complex<double>;

struct SL2 {
    // [[a, b], [c, d]]
    double a = 1.0, b = 0.0, c = 0.0, d = 1.0;

    double det() const { return a * d - b * c; }
    SL2 operator*(const SL2& o) const {
        return SL2{a * o.a + b * o.c, a * o.b + b * o.d, c * o.a + d * o.c, c * o.b + d * o.d};
    }
    SL2 inverse() const { return SL2{d, -b, -c, a}; }
};

SL2 sl2_a(double t);      // diag(e^{t/2}, e^{-t/2})
SL2 sl2_n(double u);      // unipotent upper triangular
SL2 sl2_k(double theta);  // rotation by 2 pi theta

struct IwasawaCoords {
    double t = 0.0, u = 0.0, theta = 0.0;  // theta in [0, 1)
};

// Unique decomposition g = a_t n_u k_theta. Throws std::domain_error when
// |det g - 1| > 1e-9.
IwasawaCoords iwasawa(const SL2& g);

// Cartan radius: the unique t >= 0 with g in K a_t K, via the largest
// singular value (t = 2 log sigma_1 = arccosh(|g|_F^2 / 2)).
double cartan_t(const SL2& g);

// Bi-K-invariant function f(g) = h(cartan_t(g)) for an even smooth profile
// h supported in [-T0, T0].
struct BiKFunction {
    std::function<double(double)> h;
    double T0 = 0.0;
    double operator()(const SL2& g) const;
};

BiKFunction bik_from_mollifier(double T0);

// e^{t/2} int f(a_t n_u) du; exactly 0 for |t| > T0 (the integrand support
// in u is solved in closed form from cartan_t(a_t n_u) <= T0).
double harish_transform(const BiKFunction& f, double t);

// int phi(t) e^{t z / 2} dt over [-support, support].
Complex mellin(const std::function<double(double)>& phi, double support, Complex z);

Complex spherical_omega(Complex z, const SL2& g, int theta_nodes = 256);

// int f(g) omega_z(g) dm_G(g) in Iwasawa coordinates (the theta integral
// is trivial by right-K-invariance).
Complex spherical_transform(const BiKFunction& f, Complex z, int nodes = 128);

struct SmhRow {
    Complex z;
    Complex spherical;  // S f (z)
    Complex mellin_harish;  // M(H f)(z)
    double rel_err = 0.0;
};

struct SmhReport {
    std::vector<SmhRow> rows;
    double max_rel_err = 0.0;
};

// Checks S f = M(H f) on the given z list; quadrature orders are doubled
// once on retry, and an AccuracyError is thrown if the refinement still
// moves the result by more than refine_tol.
SmhReport verify_smh(const BiKFunction& f, const std::vector<Complex>& z_list,
                     double refine_tol = 1e-7);

// Gaussian 2x2 matrices scaled to det 1.
SL2 random_sl2(std::mt19937_64& rng);

// Minimum eigenvalue of the Gram matrix (omega_z(x_i x_j^{-1}))_{ij}.
double omega_gram_min_eigenvalue(Complex z, const std::vector<SL2>& points);

}  // namespace sphdiff
