#pragma once

// Full-rank embedded lattices, duals under the character convention
// chi_tau(t) = e^{i<tau,t>} (so L^perp = 2 pi B^{-T} Z^k), region
// enumeration, and the quadratic-field presets: the "silver" lattice
// {(a+b sqrt2, a-b sqrt2)} and its Gaussian extension in C^{d1+d2}.

#include "sphdiff/linalg.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace sphdiff {

struct EmbeddedLattice {
    int rank = 0;
    Mat basis;      // columns are generators
    Mat inv_basis;  // cached basis^{-1}
    double covolume = 0.0;

    Vec point(const std::vector<long long>& coeffs) const;
    Vec generator(int j) const;
    // Nearest-lattice-point coefficients of x (rounded solve).
    std::vector<long long> nearest_coeffs(const Vec& x) const;
    // Membership within tol (solve, round, check residual in the max norm).
    bool contains(const Vec& x, double tol = 1e-9) const;
};

EmbeddedLattice make_lattice(const Mat& basis);
EmbeddedLattice integer_lattice(int k);

// {(a + b sqrt2, a - b sqrt2) : a, b in Z}, covolume 2 sqrt2.
EmbeddedLattice silver_lattice();

// Gaussian extension {(a+b sqrt2+ic+id sqrt2, a-b sqrt2+ic-id sqrt2)} in
// C x C = R^4 (coordinates Re z1, Im z1, Re z2, Im z2), products of d1
// copies for d1 = d2 > 1. Throws ConfigError when d1 != d2.
EmbeddedLattice gaussian_silver_lattice(int d1, int d2);

// Scale every generator by s.
EmbeddedLattice scale_lattice(const EmbeddedLattice& L, double s);

EmbeddedLattice dual_lattice(const EmbeddedLattice& L);

struct Box {
    Vec lo, hi;
};
struct Ball {
    Vec center;
    double radius = 0.0;
};

// All lattice points in the region, each exactly once, in lexicographic
// coefficient order. Integer coefficient ranges come from interval
// arithmetic on the rows of basis^{-1} over the box.
std::vector<Vec> enumerate_lattice(const EmbeddedLattice& L, const Box& box);
std::vector<Vec> enumerate_lattice(const EmbeddedLattice& L, const Ball& ball);

// Streaming form; fn receives (coeffs, point) for every point in the box.
void enumerate_visit(const EmbeddedLattice& L, const Box& box,
                     const std::function<void(const std::vector<long long>&, const Vec&)>& fn);

// Parallel streaming enumeration: the leading coefficient range is split
// into contiguous shards, fn(shard, coeffs, point) runs concurrently per
// shard. Point-to-shard assignment is deterministic.
void enumerate_visit_sharded(
    const EmbeddedLattice& L, const Box& box, int shards,
    const std::function<void(int, const std::vector<long long>&, const Vec&)>& fn);

// Symplectic pairing beta on C^{d1} x C^{d2} stacked as R^{2(d1+d2)}
// (physical complex coordinates first): component g is
// -1/2 sum_j Im(u_j conj(v_j)) over the coordinates of factor g.
std::array<double, 2> symplectic_form_pair(const Vec& u, const Vec& v, int d1, int d2);

// Checks beta(Delta, Delta) subset Xi. Bilinearity reduces this to the
// generator Gram table: if every beta(g_i, g_j) has integer Xi-coordinates
// (within tol), the inclusion holds for all coefficient bounds at once.
struct CompatResult {
    bool ok = true;
    // On failure: generator pair indices and the offending beta value with
    // its (non-integral) Xi-coordinates.
    int i = -1, j = -1;
    std::array<double, 2> value{0.0, 0.0};
    Vec xi_coords;
};
CompatResult check_symplectic_compat(const EmbeddedLattice& delta, const EmbeddedLattice& xi,
                                     int bound, double tol = 1e-9);

}  // namespace sphdiff
