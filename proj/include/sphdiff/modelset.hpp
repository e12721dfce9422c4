#pragma once

// Cut-and-project schemes (abelian / Euclidean-motion / Heisenberg),
// interval x polyannulus windows, regularity certificates, model-set point
// generation and the empirical pair-sum autocorrelation.
//
// Physical point coordinate layout in samples:
//   Abelian/EuclideanMotion: the n_phys real coordinates.
//   Heisenberg:              (t, Re v_1, Im v_1, ..., Re v_{d1}, Im v_{d1}).

#include "sphdiff/heisenberg.hpp"
#include "sphdiff/lattice.hpp"

#include <optional>
#include <string>
#include <vector>

namespace sphdiff {

struct RegularityStatus {
    enum class State { Unchecked, Verified, BoundaryHit };
    State state = State::Unchecked;
    double radius = 0.0;  // Verified: physical radius the certificate covers
    Vec hit_internal;     // BoundaryHit: internal coordinates of the hit
};

struct Window {
    bool has_interval = false;
    double I_lo = 0.0, I_hi = 0.0;
    std::vector<std::pair<double, double>> annuli;  // radii [a_j, b_j]
    RegularityStatus status;

    double interval_measure() const { return I_hi - I_lo; }
    double annuli_measure() const;  // prod_j pi (b_j^2 - a_j^2)
    double measure() const;         // product of whatever parts are present
    void validate() const;          // throws ConfigError on bad bounds
};

Window interval_window(double lo, double hi);
Window annulus_window(double a, double b);
Window heisenberg_window(double lo, double hi, std::vector<std::pair<double, double>> annuli);

struct Scheme {
    enum class Variant { Abelian, EuclideanMotion, Heisenberg };
    Variant variant;

    // Abelian / EuclideanMotion: gamma has rank n_phys + n_int.
    int n_phys = 0, n_int = 0;
    EmbeddedLattice gamma;

    // Heisenberg: xi (rank 2, central pair) and delta (rank 2(d1+d2)).
    int d1 = 0, d2 = 0;
    EmbeddedLattice xi, delta;

    std::string note;  // provenance, e.g. recorded lattice rescalings

    double covolume() const;
    // Physical sampling-ball volume (interval / Euclidean ball / Koranyi ball).
    double phys_ball_volume(double R) const;
};

// Presets. The Heisenberg scheme uses Xi = (1/2) silver: the displayed
// silver pair has beta(Delta, Delta) inside (1/2) Xi only, so the central
// lattice is rescaled to restore compatibility; the substitution is
// recorded in `note` and certified by check_symplectic_compat.
Scheme abelian_silver_scheme();
Scheme euclidean_gaussian_silver_scheme();
Scheme heisenberg_silver_scheme();

Scheme abelian_scheme(const EmbeddedLattice& gamma, int n_phys);
Scheme euclidean_scheme(const EmbeddedLattice& gamma, int n_phys);
Scheme heisenberg_scheme(const EmbeddedLattice& xi, const EmbeddedLattice& delta, int d1, int d2);

// Scans lattice points whose physical part lies in the radius-R region and
// flags internal parts within tol of the window boundary.
RegularityStatus window_regularity_check(const Scheme& scheme, const Window& window, double radius,
                                         double tol = 1e-9);

struct ModelSetSample {
    Scheme scheme;
    Window window;
    double R = 0.0;
    int point_dim = 0;
    std::vector<double> coords;  // flat physical coordinates, deterministic order
    double density = 0.0;

    std::size_t num_points() const {
        return point_dim ? coords.size() / static_cast<std::size_t>(point_dim) : 0;
    }
    Vec point(std::size_t i) const {
        return Vec(coords.begin() + static_cast<std::ptrdiff_t>(i) * point_dim,
                   coords.begin() + static_cast<std::ptrdiff_t>(i + 1) * point_dim);
    }
};

// proj_G(Gamma cap (G x W)) intersected with the physical R-ball. The window
// must carry a Verified certificate unless allow_unverified is set.
ModelSetSample generate_points(const Scheme& scheme, const Window& window, double R,
                               bool allow_unverified = false);

// Reconstructs the lattice lift of a physical point from the window bounds
// alone and checks the internal part lies in W (residual < tol).
bool lift_in_window(const Scheme& scheme, const Window& window, const Vec& phys,
                    double tol = 1e-9);

// Test function on the physical group, evaluated on group differences.
struct GroupTestFunction {
    Scheme::Variant variant;
    double support_radius = 0.0;  // Euclidean or Koranyi radius of supp
    std::function<double(const double* diff, int dim)> eval;  // diff in sample layout
};

GroupTestFunction abelian_test_function(std::function<double(double)> f, double support);
GroupTestFunction euclidean_radial_test_function(RadialProfile profile);
GroupTestFunction heisenberg_test_function(const PolyradialFunction& f);

// (1/vol(B_R)) sum_{x in (sample cap B_R)} sum_{y in sample} f(x^{-1} y)
// with neighbor lookup through a spatial hash. The sample must extend to
// radius >= R + diameter(supp f).
double empirical_autocorr(const ModelSetSample& sample, const GroupTestFunction& f, double R);

}  // namespace sphdiff
