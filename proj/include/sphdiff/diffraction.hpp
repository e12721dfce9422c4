#pragma once

// Closed-form diffraction spectra for the three scheme variants and the
// two-sided Poisson-summation verifier.
//
// All coefficients are computed with Lebesgue Haar measures and explicit
// covolume factors:
//   abelian / powder / Heisenberg-horizontal:  covol(Gamma)^{-2}
//   Heisenberg-vertical:                       (covol(Gamma) covol(Xi))^{-1}
// The split follows from applying the lattice Poisson summation formula
// once per branch (twice for the horizontal part, once - in the central
// variables only - for the vertical part); the zero-frequency = density^2
// law and the PSF verifier pin both constants.

#include "sphdiff/modelset.hpp"

#include <map>
#include <string>
#include <vector>

namespace sphdiff {

struct TruncationParams {
    double dual_radius = 24.0;   // physical dual-frequency cutoff
    int alpha_max = 16;          // Laguerre index cutoff per coordinate
    double delta_radius = 14.0;  // Delta-sum cutoff in sigma^Delta
    double coeff_floor = 1e-8;   // atoms below this go to the tail bound

    TruncationParams scaled(double f) const {
        TruncationParams t = *this;
        t.dual_radius *= f;
        t.alpha_max = static_cast<int>(t.alpha_max * f);
        t.delta_radius *= f;
        t.coeff_floor /= f * f;
        return t;
    }
};

struct AtomLabel {
    enum class Kind { Frequency, Horizontal, Vertical };
    Kind kind = Kind::Frequency;
    Vec freq;                // Frequency: physical frequency vector
    double kappa = 0.0;      // Horizontal: K-orbit radius |sigma_1|
    double abs_tau = 0.0;    // Vertical: |tau_1| (+/- merged)
    std::vector<int> alpha;  // Vertical

    std::string key() const;  // deterministic identity (1e-9 rounding)
};

struct Atom {
    AtomLabel label;
    double coeff = 0.0;
    double tail = 0.0;  // truncation-error bound for this coefficient
};

struct DiffractionSpectrum {
    std::vector<Atom> atoms;  // sorted by label key
    TruncationParams trunc;
    double dropped_mass = 0.0;  // accumulated coefficients below coeff_floor
    struct Normalization {
        double covol_gamma = 0.0;
        double covol_xi = 0.0;     // Heisenberg only
        double covol_delta = 0.0;  // Heisenberg only
        double horizontal_scale = 0.0;
        double vertical_scale = 0.0;
    } norm;
    std::string scheme_note;

    double total_mass() const;
    const Atom* find(const AtomLabel& label) const;
};

// eta-hat = sum_{xi in Gamma-perp} |1_W-hat(zeta(xi))|^2 covol^{-2} delta_{xi1}.
DiffractionSpectrum meyer_spectrum(const Scheme& scheme, const Window& window,
                                   const TruncationParams& trunc);

// Powder formula: Meyer atoms grouped over K-orbits |sigma_1|.
DiffractionSpectrum powder_spectrum(const Scheme& scheme, const Window& window,
                                    const TruncationParams& trunc);

DiffractionSpectrum heisenberg_spectrum(const Scheme& scheme, const Window& window,
                                        const TruncationParams& trunc);

// prod_j 2 pi (b_j J1(s b_j) - a_j J1(s a_j)) / s at s = sigma_j, with the
// s -> 0 limit pi (b_j^2 - a_j^2).
double annulus_ft(const std::vector<std::pair<double, double>>& annuli, const Vec& sigma);

// Fourier transform of the interval indicator, int_a^b e^{-i h t} dt.
Complex interval_ft(double lo, double hi, double h);

// <1_{W_o}, q_{tau,beta}> = prod_j (2pi/|tau|) int_{...} e^{-s/2} L_b(s) ds.
double window_laguerre_coeff(const std::vector<std::pair<double, double>>& annuli, double tau,
                             const std::vector<int>& beta);

struct SigmaDeltaResult {
    double value = 0.0;
    double tail = 0.0;
};

// sigma^Delta_{tau1,tau2}(alpha, beta): Gaussian-weighted Delta-sum with a
// shell tail bound past delta_radius.
SigmaDeltaResult sigma_delta(double tau1, double tau2, const std::vector<int>& alpha,
                             const std::vector<int>& beta, const EmbeddedLattice& delta, int d1,
                             int d2, const TruncationParams& trunc);

// Twisted self-convolution of one annulus indicator, (1_A *_tau 1_A)(v),
// as a function of |v|; real by radial symmetry, supported in |v| <= 2b.
double annulus_twisted_selfconv(double a, double b, double tau, double abs_v);

// Vertical coefficient by the expansion identity instead of the beta-sum:
//   c(tau1, alpha) = |1_I-hat(tau2)|^2 (|tau1|^{d1}/(2pi)^{d1})
//                    sum_{delta} q_{tau1,alpha}(delta1) prod_j T_{tau2}(|delta2_j|)
// (unnormalized: multiply by the vertical covolume scale). The delta-sum is
// finite because T is compactly supported in delta2.
double vertical_coeff_resummed(const Scheme& scheme, const Window& window, double tau1,
                               double tau2, const std::vector<int>& alpha);

struct PsfReport {
    double lhs = 0.0;
    double rhs = 0.0;
    double rel_err = 0.0;
    double rhs_horizontal = 0.0;
    double rhs_vertical = 0.0;
    double dual_tail = 0.0;   // truncated dual-sum remainder estimate
    double alpha_tail = 0.0;  // truncated alpha-sum remainder estimate
    std::size_t sample_points = 0;
};

// Two-sided check of the exotic Poisson summation formula. The test
// function is interpreted per variant: Abelian uses f.chi (d = 0),
// EuclideanMotion uses f.psi[0] as radial profile, Heisenberg uses f.
PsfReport verify_psf(const Scheme& scheme, const Window& window, const PolyradialFunction& f,
                     double R, const TruncationParams& trunc, double rhs_tol = 1e-6);

}  // namespace sphdiff
