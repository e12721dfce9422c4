#include "sphdiff/lattice.hpp"

#include "sphdiff/errors.hpp"
#include "sphdiff/parallel.hpp"

#include <cmath>
#include <stdexcept>

namespace sphdiff {

namespace {
constexpr double kTwoPi = 6.283185307179586476925;
constexpr double kSqrt2 = 1.41421356237309504880;
}

Vec EmbeddedLattice::point(const std::vector<long long>& coeffs) const {
    Vec x(rank, 0.0);
    for (int j = 0; j < rank; ++j) {
        double c = static_cast<double>(coeffs[j]);
        if (c == 0.0) continue;
        for (int i = 0; i < rank; ++i) x[i] += basis(i, j) * c;
    }
    return x;
}

Vec EmbeddedLattice::generator(int j) const {
    Vec g(rank);
    for (int i = 0; i < rank; ++i) g[i] = basis(i, j);
    return g;
}

std::vector<long long> EmbeddedLattice::nearest_coeffs(const Vec& x) const {
    Vec c = mat_vec(inv_basis, x);
    std::vector<long long> n(rank);
    for (int i = 0; i < rank; ++i) n[i] = std::llround(c[i]);
    return n;
}

bool EmbeddedLattice::contains(const Vec& x, double tol) const {
    std::vector<long long> n = nearest_coeffs(x);
    Vec y = point(n);
    for (int i = 0; i < rank; ++i)
        if (std::fabs(y[i] - x[i]) > tol) return false;
    return true;
}

EmbeddedLattice make_lattice(const Mat& basis) {
    if (basis.rows != basis.cols || basis.rows < 1)
        throw ConfigError("make_lattice: basis must be square and nonempty");
    EmbeddedLattice L;
    L.rank = basis.rows;
    L.basis = basis;
    double det = lu_invert(basis, &L.inv_basis);
    if (det == 0.0 || !std::isfinite(det))
        throw ConfigError("make_lattice: basis is singular");
    L.covolume = std::fabs(det);
    return L;
}

EmbeddedLattice integer_lattice(int k) { return make_lattice(Mat::identity(k)); }

EmbeddedLattice silver_lattice() {
    Mat b(2, 2);
    b(0, 0) = 1.0;
    b(1, 0) = 1.0;
    b(0, 1) = kSqrt2;
    b(1, 1) = -kSqrt2;
    return make_lattice(b);
}

EmbeddedLattice gaussian_silver_lattice(int d1, int d2) {
    if (d1 != d2)
        throw ConfigError("gaussian_silver_lattice: only d1 == d2 products are constructed");
    if (d1 < 1) throw ConfigError("gaussian_silver_lattice: d must be positive");
    const int d = d1;
    const int rank = 4 * d;  // 2(d1+d2)
    // Coordinates: (Re z1_1, Im z1_1, ..., Re z1_d, Im z1_d, Re z2_1, ...).
    // Generators per copy c: a -> (e_c, e_c), b -> (sqrt2 e_c, -sqrt2 e_c) on
    // the real parts, and the same pair on the imaginary parts.
    Mat b(rank, rank);
    for (int c = 0; c < d; ++c) {
        int re1 = 2 * c, im1 = 2 * c + 1;
        int re2 = 2 * d + 2 * c, im2 = 2 * d + 2 * c + 1;
        int col = 4 * c;
        b(re1, col) = 1.0;
        b(re2, col) = 1.0;
        b(re1, col + 1) = kSqrt2;
        b(re2, col + 1) = -kSqrt2;
        b(im1, col + 2) = 1.0;
        b(im2, col + 2) = 1.0;
        b(im1, col + 3) = kSqrt2;
        b(im2, col + 3) = -kSqrt2;
    }
    return make_lattice(b);
}

EmbeddedLattice scale_lattice(const EmbeddedLattice& L, double s) {
    if (s == 0.0) throw ConfigError("scale_lattice: zero scale");
    Mat b = L.basis;
    for (auto& x : b.a) x *= s;
    return make_lattice(b);
}

EmbeddedLattice dual_lattice(const EmbeddedLattice& L) {
    Mat dual = transpose(L.inv_basis);
    for (auto& x : dual.a) x *= kTwoPi;
    return make_lattice(dual);
}

namespace {

struct CoeffRange {
    long long lo, hi;
};

std::vector<CoeffRange> coefficient_ranges(const EmbeddedLattice& L, const Box& box) {
    const int k = L.rank;
    if (static_cast<int>(box.lo.size()) != k || static_cast<int>(box.hi.size()) != k)
        throw std::domain_error("enumerate: box dimension mismatch");
    for (int i = 0; i < k; ++i)
        if (!std::isfinite(box.lo[i]) || !std::isfinite(box.hi[i]))
            throw std::domain_error("enumerate: non-finite box bounds");
    std::vector<CoeffRange> ranges(k);
    for (int j = 0; j < k; ++j) {
        double lo = 0.0, hi = 0.0;
        for (int i = 0; i < k; ++i) {
            double a = L.inv_basis(j, i);
            if (a >= 0.0) {
                lo += a * box.lo[i];
                hi += a * box.hi[i];
            } else {
                lo += a * box.hi[i];
                hi += a * box.lo[i];
            }
        }
        ranges[j].lo = static_cast<long long>(std::ceil(lo - 1e-9));
        ranges[j].hi = static_cast<long long>(std::floor(hi + 1e-9));
    }
    return ranges;
}

// Depth-first enumeration with per-level interval refinement: fixing the
// leading coefficients lets each coordinate constraint narrow the next
// coefficient range (exactly at the last level). This keeps the visited
// tree close to the actual point count even for very anisotropic boxes,
// where the global coefficient box can be off by orders of magnitude.
struct PrefixEnumerator {
    const EmbeddedLattice& L;
    const Box& box;
    std::vector<CoeffRange> global;
    // suffix[j][m] = interval of sum_{i >= j} c_i basis(m, i) over the
    // global ranges; suffix[k] = {0}
    std::vector<Vec> suffix_lo, suffix_hi;
    std::vector<long long> c;
    std::vector<Vec> level_partial;  // level_partial[j] = sum_{i < j} c_i * column_i
    const std::function<void(const std::vector<long long>&, const Vec&)>* fn = nullptr;

    PrefixEnumerator(const EmbeddedLattice& lat, const Box& b)
        : L(lat), box(b), global(coefficient_ranges(lat, b)) {
        const int k = L.rank;
        suffix_lo.assign(k + 1, Vec(k, 0.0));
        suffix_hi.assign(k + 1, Vec(k, 0.0));
        for (int j = k - 1; j >= 0; --j) {
            for (int m = 0; m < k; ++m) {
                double bj = L.basis(m, j);
                double a = bj * static_cast<double>(global[j].lo);
                double bb = bj * static_cast<double>(global[j].hi);
                suffix_lo[j][m] = suffix_lo[j + 1][m] + std::min(a, bb);
                suffix_hi[j][m] = suffix_hi[j + 1][m] + std::max(a, bb);
            }
        }
        c.assign(k, 0);
        level_partial.assign(k + 1, Vec(k, 0.0));
    }

    bool empty() const {
        for (const auto& r : global)
            if (r.lo > r.hi) return true;
        return false;
    }

    void recurse(int j, long long lvl0_lo, long long lvl0_hi) {
        const int k = L.rank;
        const Vec& partial = level_partial[j];
        if (j == k) {
            const double tol = 1e-12;
            for (int m = 0; m < k; ++m)
                if (partial[m] < box.lo[m] - tol || partial[m] > box.hi[m] + tol) return;
            (*fn)(c, partial);
            return;
        }
        long long lo = (j == 0) ? lvl0_lo : global[j].lo;
        long long hi = (j == 0) ? lvl0_hi : global[j].hi;
        for (int m = 0; m < k; ++m) {
            double bjm = L.basis(m, j);
            double room_lo = box.lo[m] - partial[m] - suffix_hi[j + 1][m];
            double room_hi = box.hi[m] - partial[m] - suffix_lo[j + 1][m];
            if (std::fabs(bjm) < 1e-14) {
                if (room_lo > 1e-9 || room_hi < -1e-9) return;  // infeasible prefix
                continue;
            }
            double a = room_lo / bjm, bb = room_hi / bjm;
            if (bjm < 0.0) std::swap(a, bb);
            lo = std::max(lo, static_cast<long long>(std::ceil(a - 1e-9)));
            hi = std::min(hi, static_cast<long long>(std::floor(bb + 1e-9)));
        }
        if (lo > hi) return;
        Vec& next = level_partial[j + 1];
        for (long long v = lo; v <= hi; ++v) {
            c[j] = v;
            for (int m = 0; m < k; ++m)
                next[m] = partial[m] + L.basis(m, j) * static_cast<double>(v);
            recurse(j + 1, lvl0_lo, lvl0_hi);
        }
    }
};

}  // namespace

void enumerate_visit(const EmbeddedLattice& L, const Box& box,
                     const std::function<void(const std::vector<long long>&, const Vec&)>& fn) {
    PrefixEnumerator e(L, box);
    if (e.empty()) return;
    e.fn = &fn;
    e.recurse(0, e.global[0].lo, e.global[0].hi);
}

std::vector<Vec> enumerate_lattice(const EmbeddedLattice& L, const Box& box) {
    std::vector<Vec> out;
    enumerate_visit(L, box, [&](const std::vector<long long>&, const Vec& x) { out.push_back(x); });
    return out;
}

void enumerate_visit_sharded(
    const EmbeddedLattice& L, const Box& box, int shards,
    const std::function<void(int, const std::vector<long long>&, const Vec&)>& fn) {
    PrefixEnumerator probe(L, box);
    if (probe.empty()) return;
    long long lo0 = probe.global[0].lo, hi0 = probe.global[0].hi;
    long long span = hi0 - lo0 + 1;
    shards = static_cast<int>(std::min<long long>(shards, span));
    shards = std::max(1, shards);
    long long chunk = (span + shards - 1) / shards;
    parallel_shards(static_cast<size_t>(shards), shards, [&](int, size_t sb, size_t se) {
        for (size_t s = sb; s < se; ++s) {
            long long lo = lo0 + static_cast<long long>(s) * chunk;
            long long hi = std::min(hi0, lo + chunk - 1);
            if (lo > hi) continue;
            PrefixEnumerator e(L, box);
            std::function<void(const std::vector<long long>&, const Vec&)> local =
                [&](const std::vector<long long>& c, const Vec& x) {
                    fn(static_cast<int>(s), c, x);
                };
            e.fn = &local;
            e.recurse(0, lo, hi);
        }
    });
}

std::vector<Vec> enumerate_lattice(const EmbeddedLattice& L, const Ball& ball) {
    if (!(ball.radius >= 0.0) || !std::isfinite(ball.radius))
        throw std::domain_error("enumerate: bad ball radius");
    Box box;
    box.lo.resize(L.rank);
    box.hi.resize(L.rank);
    for (int i = 0; i < L.rank; ++i) {
        box.lo[i] = ball.center[i] - ball.radius;
        box.hi[i] = ball.center[i] + ball.radius;
    }
    std::vector<Vec> out;
    const double r2 = ball.radius * ball.radius + 1e-12;
    enumerate_visit(L, box, [&](const std::vector<long long>&, const Vec& x) {
        double d2 = 0.0;
        for (int i = 0; i < L.rank; ++i) {
            double d = x[i] - ball.center[i];
            d2 += d * d;
        }
        if (d2 <= r2) out.push_back(x);
    });
    return out;
}

std::array<double, 2> symplectic_form_pair(const Vec& u, const Vec& v, int d1, int d2) {
    if (static_cast<int>(u.size()) != 2 * (d1 + d2) || u.size() != v.size())
        throw std::domain_error("symplectic_form_pair: dimension mismatch");
    auto ip = [&](int re, int im) {
        // Im(u_j conj(v_j)) = Im(u) Re(v) - Re(u) Im(v)
        return u[im] * v[re] - u[re] * v[im];
    };
    double b1 = 0.0, b2 = 0.0;
    for (int j = 0; j < d1; ++j) b1 += ip(2 * j, 2 * j + 1);
    for (int j = 0; j < d2; ++j) b2 += ip(2 * d1 + 2 * j, 2 * d1 + 2 * j + 1);
    return {-0.5 * b1, -0.5 * b2};
}

CompatResult check_symplectic_compat(const EmbeddedLattice& delta, const EmbeddedLattice& xi,
                                     int bound, double tol) {
    if (xi.rank != 2) throw ConfigError("check_symplectic_compat: Xi must have rank 2");
    if (delta.rank % 2 != 0) throw ConfigError("check_symplectic_compat: Delta rank must be even");
    (void)bound;  // the generator table certifies every coefficient bound
    const int d_total = delta.rank / 2;
    const int d1 = d_total / 2, d2 = d_total - d_total / 2;
    CompatResult res;
    for (int i = 0; i < delta.rank; ++i) {
        Vec gi = delta.generator(i);
        for (int j = 0; j < delta.rank; ++j) {
            Vec gj = delta.generator(j);
            std::array<double, 2> b = symplectic_form_pair(gi, gj, d1, d2);
            Vec bv{b[0], b[1]};
            Vec coords = mat_vec(xi.inv_basis, bv);
            bool integral = true;
            for (double c : coords)
                if (std::fabs(c - std::llround(c)) > tol) integral = false;
            if (!integral) {
                res.ok = false;
                res.i = i;
                res.j = j;
                res.value = b;
                res.xi_coords = coords;
                return res;
            }
        }
    }
    return res;
}

}  // namespace sphdiff
