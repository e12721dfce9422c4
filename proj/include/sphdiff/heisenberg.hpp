#pragma once

// Heisenberg group N_d = R (+)_beta C^d with group law
//   (s,u)(t,v) = (s + t + beta_d(u,v), u + v),  beta_d(u,v) = -Im<u,v>/2,
// its positive-definite spherical functions for the minimal motion group
// (Laguerre type for tau != 0, Bessel type for tau = 0), central Fourier
// transform, twisted convolution (d = 1, verification scale), and spherical
// transforms of polyradial test functions.

#include "sphdiff/specfun.hpp"

#include <complex>
#include <functional>
#include <vector>

namespace sphdiff {

using Complex = std::complex<double>;
using CVec = std::vector<Complex>;

struct HeisenbergPoint {
    double t = 0.0;
    CVec v;
};

HeisenbergPoint h_identity(int d);
HeisenbergPoint hmul(const HeisenbergPoint& p, const HeisenbergPoint& q);
HeisenbergPoint hinv(const HeisenbergPoint& p);

// beta_d(u, v) = -Im<u,v>/2 with <u,v> = sum u_j conj(v_j).
double beta_form(const CVec& u, const CVec& v);

// Koranyi gauge (|v|^4 + t^2)^{1/4}; homogeneous of degree 1 under the
// dilation (t,v) -> (r^2 t, r v).
double koranyi_norm(const HeisenbergPoint& p);

// Haar volume of the Koranyi ball; scales as R^{2d+2}. The unit volume is
// computed once per d by quadrature and cached (pi^2/2 for d = 1).
double ball_volume(int d, double R);

struct SphericalParam {
    enum class Kind { Vertical, Horizontal };
    Kind kind;
    double tau = 0.0;          // Vertical only, nonzero
    std::vector<int> alpha;    // Vertical only
    std::vector<double> kappa; // Horizontal only

    int dim() const {
        return kind == Kind::Vertical ? static_cast<int>(alpha.size())
                                      : static_cast<int>(kappa.size());
    }
    static SphericalParam vertical(double tau, std::vector<int> alpha);
    static SphericalParam horizontal(std::vector<double> kappa);
};

// q_{tau,alpha}(v) = e^{-|tau||v|^2/4} prod_j L_{alpha_j}(|tau||v_j|^2/2).
double q_eval(double tau, const std::vector<int>& alpha, const CVec& v);

// omega at (t, v): Vertical -> e^{i tau t} q_{tau,alpha}(v),
// Horizontal -> prod_j J0(kappa_j |v_j|).
Complex omega_eval(const SphericalParam& param, const HeisenbergPoint& p);

// Radial profile with compact support [0, support).
struct RadialProfile {
    std::function<double(double)> f;
    double support = 0.0;
    double operator()(double r) const { return (r < support) ? f(r) : 0.0; }
};

// f(t, v) = chi(t) prod_j psi_j(|v_j|); K_d-invariant by construction.
struct PolyradialFunction {
    std::function<double(double)> chi;
    double chi_support = 0.0;  // supp chi in [-chi_support, chi_support]
    std::vector<RadialProfile> psi;

    int dim() const { return static_cast<int>(psi.size()); }
    double operator()(double t, const CVec& v) const;
    double operator()(const HeisenbergPoint& p) const { return (*this)(p.t, p.v); }
    // Koranyi radius of the support.
    double support_radius() const;
};

// chi = bump on [-1,1], psi_j = bump-in-r of radius 1.5 (even extension is
// smooth at 0 since the profile depends on r^2).
PolyradialFunction default_test_function(int d);
// Same but with chi modulated by cos(freq * t); pushes central-frequency
// weight onto the vertical spectrum.
PolyradialFunction modulated_test_function(int d, double freq);

// hat{chi}(tau) = int chi(t) e^{-i tau t} dt over the support.
Complex chi_hat(const PolyradialFunction& f, double tau);

// tau-central Fourier transform: f_tau(v) = hat{chi}(tau) prod psi_j(|v_j|).
struct PolyradialSlice {
    Complex coef;
    std::vector<RadialProfile> psi;
    Complex operator()(const CVec& v) const;
};
PolyradialSlice central_ft(const PolyradialFunction& f, double tau);

// Tensor-product Gauss-Legendre grid on [-half_width, half_width]^2 (d = 1).
struct GridSpec {
    double half_width = 10.0;
    int n = 96;
};

struct GridFunction {
    GridSpec spec;
    std::vector<double> axis_nodes;    // n Gauss-Legendre nodes
    std::vector<double> axis_weights;  // n weights
    std::vector<Complex> values;       // n*n, row-major (re index fast)
    Complex at(int i, int j) const { return values[static_cast<size_t>(i) * spec.n + j]; }
};

GridFunction sample_grid(const GridSpec& spec, const std::function<Complex(Complex)>& f);

// (phi *_tau psi)(v) = int phi(u) psi(v-u) e^{-i tau beta(u,v)} du, evaluated
// on the grid by tensor quadrature. phi and psi are supplied as callables so
// psi(v-u) needs no interpolation. Throws AccuracyError when either factor
// exceeds 1e-12 at the grid edge (insufficient decay).
GridFunction twisted_convolve(const std::function<Complex(Complex)>& phi,
                              const std::function<Complex(Complex)>& psi, double tau,
                              const GridSpec& spec);

// <iota(f), omega> = <f_tau, q>:
//   Vertical(tau, alpha): hat{chi}(tau) prod_j 2pi int psi_j(r)
//       e^{-|tau| r^2/4} L_{alpha_j}(|tau| r^2/2) r dr
//   Horizontal(kappa):    hat{chi}(0) prod_j 2pi int psi_j(r) J0(kappa_j r) r dr
Complex spherical_ft(const PolyradialFunction& f, const SphericalParam& param);

// 2pi int_0^inf phi(r) [e^{-|tau| r^2/4} L_a(|tau| r^2/2)] r dr for one
// radial factor; used by spherical_ft and the property tests.
double radial_q_inner(const RadialProfile& phi, double tau, int a);

}  // namespace sphdiff
