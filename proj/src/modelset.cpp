#include "sphdiff/modelset.hpp"

#include "sphdiff/errors.hpp"
#include "sphdiff/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace sphdiff {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

double Window::annuli_measure() const {
    double m = 1.0;
    for (const auto& [a, b] : annuli) m *= kPi * (b * b - a * a);
    return m;
}

double Window::measure() const {
    double m = 1.0;
    if (has_interval) m *= interval_measure();
    if (!annuli.empty()) m *= annuli_measure();
    return m;
}

void Window::validate() const {
    if (has_interval && !(I_lo < I_hi)) throw ConfigError("window: interval requires a_0 < b_0");
    for (const auto& [a, b] : annuli)
        if (!(0.0 <= a && a < b)) throw ConfigError("window: annulus requires 0 <= a_j < b_j");
    if (!(measure() > 0.0)) throw ConfigError("window: measure must be positive");
}

Window interval_window(double lo, double hi) {
    Window w;
    w.has_interval = true;
    w.I_lo = lo;
    w.I_hi = hi;
    w.validate();
    return w;
}

Window annulus_window(double a, double b) {
    Window w;
    w.annuli.emplace_back(a, b);
    w.validate();
    return w;
}

Window heisenberg_window(double lo, double hi, std::vector<std::pair<double, double>> annuli) {
    Window w;
    w.has_interval = true;
    w.I_lo = lo;
    w.I_hi = hi;
    w.annuli = std::move(annuli);
    if (w.annuli.empty()) throw ConfigError("window: Heisenberg window needs annuli");
    w.validate();
    return w;
}

double Scheme::covolume() const {
    if (variant == Variant::Heisenberg) return xi.covolume * delta.covolume;
    return gamma.covolume;
}

double Scheme::phys_ball_volume(double R) const {
    if (variant == Variant::Heisenberg) return ball_volume(d1, R);
    if (n_phys == 1) return 2.0 * R;
    // Euclidean unit ball volume pi^{n/2} / Gamma(n/2 + 1)
    double unit = std::pow(kPi, 0.5 * n_phys) / std::tgamma(0.5 * n_phys + 1.0);
    return unit * std::pow(R, n_phys);
}

Scheme abelian_scheme(const EmbeddedLattice& gamma, int n_phys) {
    if (n_phys < 1 || n_phys >= gamma.rank)
        throw ConfigError("abelian_scheme: need 1 <= n_phys < rank");
    Scheme s;
    s.variant = Scheme::Variant::Abelian;
    s.n_phys = n_phys;
    s.n_int = gamma.rank - n_phys;
    s.gamma = gamma;
    return s;
}

Scheme euclidean_scheme(const EmbeddedLattice& gamma, int n_phys) {
    Scheme s = abelian_scheme(gamma, n_phys);
    s.variant = Scheme::Variant::EuclideanMotion;
    return s;
}

Scheme heisenberg_scheme(const EmbeddedLattice& xi, const EmbeddedLattice& delta, int d1, int d2) {
    if (xi.rank != 2) throw ConfigError("heisenberg_scheme: Xi must have rank 2");
    if (delta.rank != 2 * (d1 + d2))
        throw ConfigError("heisenberg_scheme: Delta must have rank 2(d1+d2)");
    CompatResult compat = check_symplectic_compat(delta, xi, 4);
    if (!compat.ok) {
        std::ostringstream os;
        os << "heisenberg_scheme: beta(Delta, Delta) escapes Xi at generator pair (" << compat.i
           << ", " << compat.j << "), value (" << compat.value[0] << ", " << compat.value[1]
           << ")";
        throw PreconditionError(os.str());
    }
    Scheme s;
    s.variant = Scheme::Variant::Heisenberg;
    s.d1 = d1;
    s.d2 = d2;
    s.n_phys = 2 * d1 + 1;
    s.n_int = 2 * d2 + 1;
    s.xi = xi;
    s.delta = delta;
    return s;
}

Scheme abelian_silver_scheme() {
    Scheme s = abelian_scheme(silver_lattice(), 1);
    s.note = "silver";
    return s;
}

Scheme euclidean_gaussian_silver_scheme() {
    Scheme s = euclidean_scheme(gaussian_silver_lattice(1, 1), 2);
    s.note = "gaussian-silver";
    return s;
}

Scheme heisenberg_silver_scheme() {
    EmbeddedLattice delta = gaussian_silver_lattice(1, 1);
    // beta of the displayed generators lands in (1/2)Xi only; rescale.
    EmbeddedLattice xi = scale_lattice(silver_lattice(), 0.5);
    Scheme s = heisenberg_scheme(xi, delta, 1, 1);
    s.note = "silver pair, Xi rescaled by 1/2 for beta-compatibility";
    return s;
}

namespace {

bool in_interval(double x, double lo, double hi, double tol) {
    return x >= lo - tol && x <= hi + tol;
}

// Distance of |z| = r to the annulus boundary; the inner radius is a real
// boundary only when a > 0 (at a = 0 the window is a disc).
double annulus_boundary_dist(double r, double a, double b) {
    double d = std::fabs(r - b);
    if (a > 0.0) d = std::min(d, std::fabs(r - a));
    return d;
}

bool annuli_member(const Window& w, const Vec& z_coords, int offset, double tol) {
    for (size_t j = 0; j < w.annuli.size(); ++j) {
        double re = z_coords[offset + 2 * j], im = z_coords[offset + 2 * j + 1];
        double r = std::hypot(re, im);
        if (r < w.annuli[j].first - tol || r > w.annuli[j].second + tol) return false;
    }
    return true;
}

double max_annulus_outer(const Window& w) {
    double b = 0.0;
    for (const auto& ab : w.annuli) b = std::max(b, ab.second);
    return b;
}

// Enumerates Xi pairs (xi1, xi2) with |xi1| <= r1 and xi2 in [lo, hi].
std::vector<std::array<double, 2>> xi_pairs(const EmbeddedLattice& xi, double r1, double lo,
                                            double hi) {
    Box box{{-r1, lo}, {r1, hi}};
    std::vector<std::array<double, 2>> out;
    enumerate_visit(xi, box, [&](const std::vector<long long>&, const Vec& x) {
        out.push_back({x[0], x[1]});
    });
    return out;
}

}  // namespace

RegularityStatus window_regularity_check(const Scheme& scheme, const Window& window, double radius,
                                         double tol) {
    window.validate();
    RegularityStatus status;
    status.state = RegularityStatus::State::Verified;
    status.radius = radius;

    auto hit = [&](Vec internal) {
        RegularityStatus h;
        h.state = RegularityStatus::State::BoundaryHit;
        h.hit_internal = std::move(internal);
        return h;
    };

    if (scheme.variant == Scheme::Variant::Abelian) {
        if (scheme.n_phys != 1 || scheme.n_int != 1)
            throw ConfigError("abelian regularity check supports n = m = 1");
        Box box{{-radius, window.I_lo - tol}, {radius, window.I_hi + tol}};
        RegularityStatus result = status;
        enumerate_visit(scheme.gamma, box, [&](const std::vector<long long>&, const Vec& x) {
            double d = std::min(std::fabs(x[1] - window.I_lo), std::fabs(x[1] - window.I_hi));
            if (d <= tol) result = hit({x[1]});
        });
        return result;
    }

    if (scheme.variant == Scheme::Variant::EuclideanMotion) {
        if (scheme.n_int % 2 != 0 || window.annuli.size() != static_cast<size_t>(scheme.n_int / 2))
            throw ConfigError("euclidean regularity check: annuli must match internal dimension");
        Box box;
        box.lo.assign(scheme.gamma.rank, 0.0);
        box.hi.assign(scheme.gamma.rank, 0.0);
        for (int i = 0; i < scheme.n_phys; ++i) {
            box.lo[i] = -radius;
            box.hi[i] = radius;
        }
        double b = max_annulus_outer(window) + tol;
        for (int i = scheme.n_phys; i < scheme.gamma.rank; ++i) {
            box.lo[i] = -b;
            box.hi[i] = b;
        }
        RegularityStatus result = status;
        enumerate_visit(scheme.gamma, box, [&](const std::vector<long long>&, const Vec& x) {
            for (size_t j = 0; j < window.annuli.size(); ++j) {
                double re = x[scheme.n_phys + 2 * j], im = x[scheme.n_phys + 2 * j + 1];
                double r = std::hypot(re, im);
                double d = annulus_boundary_dist(r, window.annuli[j].first,
                                                 window.annuli[j].second);
                bool others = true;
                for (size_t k = 0; k < window.annuli.size(); ++k) {
                    if (k == j) continue;
                    double rk = std::hypot(x[scheme.n_phys + 2 * k], x[scheme.n_phys + 2 * k + 1]);
                    if (rk < window.annuli[k].first - tol || rk > window.annuli[k].second + tol)
                        others = false;
                }
                if (d <= tol && others)
                    result = hit(Vec(x.begin() + scheme.n_phys, x.end()));
            }
        });
        return result;
    }

    // Heisenberg: Gamma_o = Xi x Delta as a set, so boundary proximity
    // factorizes: internal = (xi2, delta2) hits the boundary iff the central
    // part hits {a_0, b_0} while some delta2 lies in the annuli, or some
    // |delta2_j| hits {a_j, b_j} while some xi2 lies in I.
    {
        if (!window.has_interval || window.annuli.size() != static_cast<size_t>(scheme.d2))
            throw ConfigError("heisenberg regularity check: window must be I x polyannulus");
        const double r1 = radius * radius;  // Koranyi ball bound on |xi1|
        auto pairs = xi_pairs(scheme.xi, r1, window.I_lo - tol, window.I_hi + tol);
        bool xi_in_window = false;
        std::optional<double> xi_boundary;
        for (const auto& p : pairs) {
            double d = std::min(std::fabs(p[1] - window.I_lo), std::fabs(p[1] - window.I_hi));
            if (d <= tol) xi_boundary = p[1];
            else xi_in_window = true;
        }

        Box dbox;
        dbox.lo.assign(scheme.delta.rank, 0.0);
        dbox.hi.assign(scheme.delta.rank, 0.0);
        for (int i = 0; i < 2 * scheme.d1; ++i) {
            dbox.lo[i] = -radius;
            dbox.hi[i] = radius;
        }
        double b = max_annulus_outer(window) + tol;
        for (int i = 2 * scheme.d1; i < scheme.delta.rank; ++i) {
            dbox.lo[i] = -b;
            dbox.hi[i] = b;
        }
        bool delta_in_window = false;
        std::optional<Vec> delta_boundary;
        enumerate_visit(scheme.delta, dbox, [&](const std::vector<long long>&, const Vec& x) {
            bool all_in = true, near_edge = false;
            for (int j = 0; j < scheme.d2; ++j) {
                double re = x[2 * scheme.d1 + 2 * j], im = x[2 * scheme.d1 + 2 * j + 1];
                double r = std::hypot(re, im);
                if (r < window.annuli[j].first - tol || r > window.annuli[j].second + tol)
                    all_in = false;
                double d = annulus_boundary_dist(r, window.annuli[j].first,
                                                 window.annuli[j].second);
                if (d <= tol) near_edge = true;
            }
            if (all_in && near_edge && !delta_boundary)
                delta_boundary = Vec(x.begin() + 2 * scheme.d1, x.end());
            if (all_in && !near_edge) delta_in_window = true;
        });

        if (xi_boundary && (delta_in_window || delta_boundary)) {
            Vec internal{*xi_boundary};
            return hit(internal);
        }
        if (delta_boundary && (xi_in_window || xi_boundary)) {
            Vec internal{xi_boundary ? *xi_boundary : 0.0};
            internal.insert(internal.end(), delta_boundary->begin(), delta_boundary->end());
            return hit(internal);
        }
        return status;
    }
}

ModelSetSample generate_points(const Scheme& scheme, const Window& window, double R,
                               bool allow_unverified) {
    window.validate();
    if (window.status.state != RegularityStatus::State::Verified && !allow_unverified)
        throw PreconditionError(
            "generate_points: window has no regularity certificate (pass allow_unverified to "
            "override)");
    if (window.status.state == RegularityStatus::State::BoundaryHit && !allow_unverified)
        throw RegularityError("generate_points: window boundary meets the lattice projection");

    ModelSetSample sample;
    sample.scheme = scheme;
    sample.window = window;
    sample.R = R;

    if (scheme.variant == Scheme::Variant::Abelian) {
        sample.point_dim = scheme.n_phys;
        Box box{{-R, window.I_lo}, {R, window.I_hi}};
        enumerate_visit(scheme.gamma, box, [&](const std::vector<long long>&, const Vec& x) {
            sample.coords.push_back(x[0]);
        });
    } else if (scheme.variant == Scheme::Variant::EuclideanMotion) {
        sample.point_dim = scheme.n_phys;
        Box box;
        box.lo.assign(scheme.gamma.rank, 0.0);
        box.hi.assign(scheme.gamma.rank, 0.0);
        for (int i = 0; i < scheme.n_phys; ++i) {
            box.lo[i] = -R;
            box.hi[i] = R;
        }
        double b = max_annulus_outer(window);
        for (int i = scheme.n_phys; i < scheme.gamma.rank; ++i) {
            box.lo[i] = -b;
            box.hi[i] = b;
        }
        const double R2 = R * R;
        enumerate_visit(scheme.gamma, box, [&](const std::vector<long long>&, const Vec& x) {
            double p2 = 0.0;
            for (int i = 0; i < scheme.n_phys; ++i) p2 += x[i] * x[i];
            if (p2 > R2) return;
            if (!annuli_member(window, x, scheme.n_phys, 0.0)) return;
            for (int i = 0; i < scheme.n_phys; ++i) sample.coords.push_back(x[i]);
        });
    } else {
        sample.point_dim = 1 + 2 * scheme.d1;
        auto pairs = xi_pairs(scheme.xi, R * R, window.I_lo, window.I_hi);
        Box dbox;
        dbox.lo.assign(scheme.delta.rank, 0.0);
        dbox.hi.assign(scheme.delta.rank, 0.0);
        for (int i = 0; i < 2 * scheme.d1; ++i) {
            dbox.lo[i] = -R;
            dbox.hi[i] = R;
        }
        double b = max_annulus_outer(window);
        for (int i = 2 * scheme.d1; i < scheme.delta.rank; ++i) {
            dbox.lo[i] = -b;
            dbox.hi[i] = b;
        }
        const double R4 = R * R * R * R;
        enumerate_visit(scheme.delta, dbox, [&](const std::vector<long long>&, const Vec& x) {
            if (!annuli_member(window, x, 2 * scheme.d1, 0.0)) return;
            double v2 = 0.0;
            for (int i = 0; i < 2 * scheme.d1; ++i) v2 += x[i] * x[i];
            const double v4 = v2 * v2;
            if (v4 > R4) return;
            const double tmax = std::sqrt(R4 - v4);
            for (const auto& p : pairs) {
                if (std::fabs(p[0]) > tmax) continue;
                sample.coords.push_back(p[0]);
                for (int i = 0; i < 2 * scheme.d1; ++i) sample.coords.push_back(x[i]);
            }
        });
    }

    sample.density = static_cast<double>(sample.num_points()) / scheme.phys_ball_volume(R);
    return sample;
}

bool lift_in_window(const Scheme& scheme, const Window& window, const Vec& phys, double tol) {
    if (scheme.variant == Scheme::Variant::Heisenberg) {
        // central part
        Box xbox{{phys[0] - tol, window.I_lo - tol}, {phys[0] + tol, window.I_hi + tol}};
        bool found_xi = false;
        enumerate_visit(scheme.xi, xbox,
                        [&](const std::vector<long long>&, const Vec&) { found_xi = true; });
        if (!found_xi) return false;
        Box dbox;
        dbox.lo.assign(scheme.delta.rank, 0.0);
        dbox.hi.assign(scheme.delta.rank, 0.0);
        for (int i = 0; i < 2 * scheme.d1; ++i) {
            dbox.lo[i] = phys[1 + i] - tol;
            dbox.hi[i] = phys[1 + i] + tol;
        }
        double b = max_annulus_outer(window) + tol;
        for (int i = 2 * scheme.d1; i < scheme.delta.rank; ++i) {
            dbox.lo[i] = -b;
            dbox.hi[i] = b;
        }
        bool found_delta = false;
        enumerate_visit(scheme.delta, dbox, [&](const std::vector<long long>&, const Vec& x) {
            if (annuli_member(window, x, 2 * scheme.d1, tol)) found_delta = true;
        });
        return found_delta;
    }

    Box box;
    box.lo.assign(scheme.gamma.rank, 0.0);
    box.hi.assign(scheme.gamma.rank, 0.0);
    for (int i = 0; i < scheme.n_phys; ++i) {
        box.lo[i] = phys[i] - tol;
        box.hi[i] = phys[i] + tol;
    }
    if (scheme.variant == Scheme::Variant::Abelian) {
        box.lo[scheme.n_phys] = window.I_lo - tol;
        box.hi[scheme.n_phys] = window.I_hi + tol;
    } else {
        double b = max_annulus_outer(window) + tol;
        for (int i = scheme.n_phys; i < scheme.gamma.rank; ++i) {
            box.lo[i] = -b;
            box.hi[i] = b;
        }
    }
    bool found = false;
    enumerate_visit(scheme.gamma, box, [&](const std::vector<long long>&, const Vec& x) {
        if (scheme.variant == Scheme::Variant::EuclideanMotion &&
            !annuli_member(window, x, scheme.n_phys, tol))
            return;
        found = true;
    });
    return found;
}

GroupTestFunction abelian_test_function(std::function<double(double)> f, double support) {
    GroupTestFunction g;
    g.variant = Scheme::Variant::Abelian;
    g.support_radius = support;
    g.eval = [fn = std::move(f)](const double* diff, int) { return fn(diff[0]); };
    return g;
}

GroupTestFunction euclidean_radial_test_function(RadialProfile profile) {
    GroupTestFunction g;
    g.variant = Scheme::Variant::EuclideanMotion;
    g.support_radius = profile.support;
    g.eval = [p = std::move(profile)](const double* diff, int dim) {
        double r2 = 0.0;
        for (int i = 0; i < dim; ++i) r2 += diff[i] * diff[i];
        return p(std::sqrt(r2));
    };
    return g;
}

GroupTestFunction heisenberg_test_function(const PolyradialFunction& f) {
    GroupTestFunction g;
    g.variant = Scheme::Variant::Heisenberg;
    g.support_radius = f.support_radius();
    g.eval = [f](const double* diff, int dim) {
        double val = (std::fabs(diff[0]) < f.chi_support) ? f.chi(diff[0]) : 0.0;
        if (val == 0.0) return 0.0;
        int d = (dim - 1) / 2;
        for (int j = 0; j < d; ++j) {
            double r = std::hypot(diff[1 + 2 * j], diff[2 + 2 * j]);
            val *= f.psi[j](r);
            if (val == 0.0) return 0.0;
        }
        return val;
    };
    return g;
}

namespace {

double autocorr_abelian(const ModelSetSample& sample, const GroupTestFunction& f, double R) {
    const auto& c = sample.coords;
    const size_t n = c.size();
    // points are enumerated in increasing order already; rely on sortedness
    std::vector<double> xs(c.begin(), c.end());
    std::sort(xs.begin(), xs.end());
    const double rho = f.support_radius;
    double total = parallel_sum(n, 4 * thread_cap(), [&](size_t i) {
        double x = xs[i];
        if (std::fabs(x) > R) return 0.0;
        auto lo = std::lower_bound(xs.begin(), xs.end(), x - rho);
        auto hi = std::upper_bound(xs.begin(), xs.end(), x + rho);
        double s = 0.0;
        for (auto it = lo; it != hi; ++it) {
            double d = *it - x;
            s += f.eval(&d, 1);
        }
        return s;
    });
    return total / (2.0 * R);
}

struct Grid2D {
    double lo = 0.0, h = 1.0;
    int n = 1;
    // CSR cell storage of point indices
    std::vector<int> offsets;
    std::vector<int> items;

    int cell_of(double x, double y) const {
        int i = std::clamp(static_cast<int>((x - lo) / h), 0, n - 1);
        int j = std::clamp(static_cast<int>((y - lo) / h), 0, n - 1);
        return i * n + j;
    }
};

Grid2D build_grid(const std::vector<double>& px, const std::vector<double>& py, double extent,
                  double h) {
    Grid2D g;
    g.h = h;
    g.lo = -extent;
    g.n = std::max(1, static_cast<int>(std::ceil(2.0 * extent / h)));
    const size_t npts = px.size();
    std::vector<int> count(static_cast<size_t>(g.n) * g.n + 1, 0);
    std::vector<int> cell(npts);
    for (size_t k = 0; k < npts; ++k) {
        cell[k] = g.cell_of(px[k], py[k]);
        ++count[cell[k] + 1];
    }
    g.offsets.resize(count.size());
    std::partial_sum(count.begin(), count.end(), g.offsets.begin());
    g.items.resize(npts);
    std::vector<int> cursor(g.offsets.begin(), g.offsets.end() - 1);
    for (size_t k = 0; k < npts; ++k) g.items[cursor[cell[k]]++] = static_cast<int>(k);
    return g;
}

double autocorr_euclidean(const ModelSetSample& sample, const GroupTestFunction& f, double R) {
    const int dim = sample.point_dim;
    if (dim != 2) throw ConfigError("empirical_autocorr: Euclidean variant implemented for d = 2");
    const size_t n = sample.num_points();
    std::vector<double> px(n), py(n);
    for (size_t k = 0; k < n; ++k) {
        px[k] = sample.coords[2 * k];
        py[k] = sample.coords[2 * k + 1];
    }
    const double rho = f.support_radius;
    Grid2D grid = build_grid(px, py, sample.R + rho, std::max(rho, 1e-3));
    const double R2 = R * R, rho2 = rho * rho;
    double total = parallel_sum(n, 4 * thread_cap(), [&](size_t k) {
        if (px[k] * px[k] + py[k] * py[k] > R2) return 0.0;
        double s = 0.0;
        int ci = static_cast<int>((px[k] - grid.lo) / grid.h);
        int cj = static_cast<int>((py[k] - grid.lo) / grid.h);
        int reach = static_cast<int>(rho / grid.h) + 1;
        for (int i = std::max(0, ci - reach); i <= std::min(grid.n - 1, ci + reach); ++i)
            for (int j = std::max(0, cj - reach); j <= std::min(grid.n - 1, cj + reach); ++j) {
                int c0 = grid.offsets[i * grid.n + j], c1 = grid.offsets[i * grid.n + j + 1];
                for (int idx = c0; idx < c1; ++idx) {
                    int m = grid.items[idx];
                    double d[2] = {px[m] - px[k], py[m] - py[k]};
                    if (d[0] * d[0] + d[1] * d[1] > rho2) continue;
                    s += f.eval(d, 2);
                }
            }
        return s;
    });
    return total / sample.scheme.phys_ball_volume(R);
}

double autocorr_heisenberg(const ModelSetSample& sample, const GroupTestFunction& f, double R) {
    const int dim = sample.point_dim;
    if (dim != 3)
        throw ConfigError("empirical_autocorr: Heisenberg pair sum implemented for d1 = 1");
    const size_t n = sample.num_points();
    std::vector<double> t(n), px(n), py(n);
    for (size_t k = 0; k < n; ++k) {
        t[k] = sample.coords[3 * k];
        px[k] = sample.coords[3 * k + 1];
        py[k] = sample.coords[3 * k + 2];
    }
    const double rho = f.support_radius;
    const double rho2 = rho * rho, rho4 = rho2 * rho2;

    // v-plane grid; cells keep their points sorted by t so the twisted
    // t-window can be binary-searched.
    double vmax = 0.0;
    for (size_t k = 0; k < n; ++k) vmax = std::max(vmax, std::max(std::fabs(px[k]), std::fabs(py[k])));
    const double h = std::max(0.5 * rho, 1e-3);
    Grid2D grid = build_grid(px, py, vmax + h, h);
    for (size_t c = 0; c + 1 < grid.offsets.size(); ++c) {
        std::sort(grid.items.begin() + grid.offsets[c], grid.items.begin() + grid.offsets[c + 1],
                  [&](int a, int b) { return t[a] < t[b]; });
    }

    const double R4 = R * R * R * R;
    double total = parallel_sum(n, 4 * thread_cap(), [&](size_t k) {
        double v2k = px[k] * px[k] + py[k] * py[k];
        if (v2k * v2k + t[k] * t[k] > R4) return 0.0;
        const double vnorm = std::sqrt(v2k);
        double s = 0.0;
        int ci = static_cast<int>((px[k] - grid.lo) / grid.h);
        int cj = static_cast<int>((py[k] - grid.lo) / grid.h);
        int reach = static_cast<int>(rho / grid.h) + 1;
        const double half_diag = 0.7071067811865476 * grid.h;
        for (int i = std::max(0, ci - reach); i <= std::min(grid.n - 1, ci + reach); ++i)
            for (int j = std::max(0, cj - reach); j <= std::min(grid.n - 1, cj + reach); ++j) {
                int c0 = grid.offsets[i * grid.n + j], c1 = grid.offsets[i * grid.n + j + 1];
                if (c0 == c1) continue;
                double cx = grid.lo + (i + 0.5) * grid.h, cy = grid.lo + (j + 0.5) * grid.h;
                // beta(v_k, v_c) with slop for the cell extent
                double beta_c = -0.5 * (py[k] * cx - px[k] * cy);
                double slop = rho2 + 0.5 * vnorm * half_diag * 1.4143 + 1e-12;
                double t_lo = t[k] + beta_c - slop, t_hi = t[k] + beta_c + slop;
                auto cmp = [&](int a, double val) { return t[a] < val; };
                int b0 = static_cast<int>(std::lower_bound(grid.items.begin() + c0,
                                                           grid.items.begin() + c1, t_lo, cmp) -
                                          grid.items.begin());
                for (int idx = b0; idx < c1; ++idx) {
                    int m = grid.items[idx];
                    if (t[m] > t_hi) break;
                    double dvx = px[m] - px[k], dvy = py[m] - py[k];
                    double dv2 = dvx * dvx + dvy * dvy;
                    if (dv2 > rho2) continue;
                    double beta = -0.5 * (py[k] * px[m] - px[k] * py[m]);
                    double dt = t[m] - t[k] - beta;
                    if (dv2 * dv2 + dt * dt > rho4) continue;
                    double d[3] = {dt, dvx, dvy};
                    s += f.eval(d, 3);
                }
            }
        return s;
    });
    return total / sample.scheme.phys_ball_volume(R);
}

}  // namespace

double empirical_autocorr(const ModelSetSample& sample, const GroupTestFunction& f, double R) {
    if (f.variant != sample.scheme.variant)
        throw PreconditionError("empirical_autocorr: test function variant mismatch");
    double required = R + 2.0 * f.support_radius;
    if (sample.R + 1e-9 < required) {
        std::ostringstream os;
        os << "empirical_autocorr: sample radius " << sample.R << " < required " << required;
        throw PreconditionError(os.str());
    }
    switch (sample.scheme.variant) {
        case Scheme::Variant::Abelian:
            return autocorr_abelian(sample, f, R);
        case Scheme::Variant::EuclideanMotion:
            return autocorr_euclidean(sample, f, R);
        case Scheme::Variant::Heisenberg:
            return autocorr_heisenberg(sample, f, R);
    }
    throw std::logic_error("unreachable");
}

}  // namespace sphdiff
