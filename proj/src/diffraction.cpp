#include "sphdiff/diffraction.hpp"

#include "sphdiff/errors.hpp"
#include "sphdiff/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <mutex>
#include <sstream>

namespace sphdiff {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kTwoPi = 2.0 * kPi;

double round9(double x) { return std::round(x * 1e9) / 1e9; }

std::string fmt9(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9f", round9(x));
    return std::string(buf);
}
}  // namespace

std::string AtomLabel::key() const {
    std::string k;
    switch (kind) {
        case Kind::Frequency: {
            k = "F";
            for (double f : freq) k += ":" + fmt9(f);
            break;
        }
        case Kind::Horizontal:
            k = "H:" + fmt9(kappa);
            break;
        case Kind::Vertical: {
            k = "V:" + fmt9(abs_tau);
            for (int a : alpha) k += ":" + std::to_string(a);
            break;
        }
    }
    return k;
}

double DiffractionSpectrum::total_mass() const {
    double m = 0.0;
    for (const auto& a : atoms) m += a.coeff;
    return m;
}

const Atom* DiffractionSpectrum::find(const AtomLabel& label) const {
    std::string k = label.key();
    for (const auto& a : atoms)
        if (a.label.key() == k) return &a;
    return nullptr;
}

Complex interval_ft(double lo, double hi, double h) {
    if (std::fabs(h) < 1e-12) return Complex(hi - lo, 0.0);
    // int_a^b e^{-i h t} dt = (e^{-i h a} - e^{-i h b}) / (i h)
    Complex num = std::polar(1.0, -h * lo) - std::polar(1.0, -h * hi);
    return num / Complex(0.0, h);
}

double annulus_ft(const std::vector<std::pair<double, double>>& annuli, const Vec& sigma) {
    if (annuli.size() != sigma.size())
        throw std::domain_error("annulus_ft: dimension mismatch");
    double prod = 1.0;
    for (size_t j = 0; j < annuli.size(); ++j) {
        auto [a, b] = annuli[j];
        double s = std::fabs(sigma[j]);
        if (s < 1e-3) {
            // series of 2pi (b J1(sb) - a J1(sa)) / s around s = 0
            double s2 = s * s;
            double b2 = b * b, a2 = a * a;
            prod *= kPi * ((b2 - a2) - s2 * (b2 * b2 - a2 * a2) / 8.0 +
                           s2 * s2 * (b2 * b2 * b2 - a2 * a2 * a2) / 192.0);
        } else {
            prod *= kTwoPi * (b * bessel_j1(s * b) - a * bessel_j1(s * a)) / s;
        }
    }
    return prod;
}

double window_laguerre_coeff(const std::vector<std::pair<double, double>>& annuli, double tau,
                             const std::vector<int>& beta) {
    if (tau == 0.0) throw std::domain_error("window_laguerre_coeff: tau must be nonzero");
    if (annuli.size() != beta.size())
        throw std::domain_error("window_laguerre_coeff: dimension mismatch");
    const double at = std::fabs(tau);
    double prod = 1.0;
    for (size_t j = 0; j < annuli.size(); ++j) {
        auto [a, b] = annuli[j];
        double s0 = 0.5 * at * a * a, s1 = 0.5 * at * b * b;
        if (s1 <= s0) return 0.0;
        int n = std::min(512, std::max(64, beta[j] + 24));
        QuadratureRule rule = gauss_legendre(n, s0, s1);
        double integral =
            quad_sum(rule, [&](double s) { return laguerre_scaled(beta[j], s); });
        prod *= (kTwoPi / at) * integral;
    }
    return prod;
}

namespace {

// sup_{s >= 0} e^{-s/4} |L_n(s)|, cached; used as the Gaussian-envelope
// constant |q_{tau,n}(v)| <= C_n e^{-|tau||v|^2/8} in tail bounds.
double laguerre_envelope(int n) {
    static std::mutex mu;
    static std::map<int, double> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;
    double smax = 8.0 * (n + 1) + 60.0;
    double best = 0.0;
    int steps = 4000;
    for (int i = 0; i <= steps; ++i) {
        double s = smax * i / steps;
        double v = std::fabs(laguerre_scaled(n, s)) * std::exp(0.25 * s);
        best = std::max(best, v);
    }
    best *= 1.1;  // margin for grid misses
    cache[n] = best;
    return best;
}

// (1/covol) int_{|x| > a} e^{-kappa |x|^2 / 8} dx in dimension D; upper
// bound for the lattice sum past radius a (shifted by the covering radius
// rho_c: every Voronoi cell of an outside point lies outside a - rho_c).
double gaussian_shell_bound(double kappa, double a, int D, double covol, double rho_c) {
    double a_eff = std::max(0.0, a - rho_c);
    double fact = 1.0;
    // surface area S_{D-1} = 2 pi^{D/2} / Gamma(D/2)
    double sphere = 2.0 * std::pow(kPi, 0.5 * D) / std::tgamma(0.5 * D);
    double reach = std::sqrt(8.0 * 80.0 / kappa);
    QuadratureRule rule = gauss_legendre(128, a_eff, a_eff + reach);
    double integral = quad_sum(rule, [&](double r) {
        return std::pow(r, D - 1) * std::exp(-kappa * r * r / 8.0);
    });
    return fact * sphere * integral / covol;
}

double covering_radius_bound(const EmbeddedLattice& L) {
    double s = 0.0;
    for (int j = 0; j < L.rank; ++j) {
        double n2 = 0.0;
        for (int i = 0; i < L.rank; ++i) n2 += L.basis(i, j) * L.basis(i, j);
        s += std::sqrt(n2);
    }
    return 0.5 * s;
}

// All multi-indices in {0..amax}^d, lexicographic.
std::vector<std::vector<int>> multi_indices(int d, int amax) {
    std::vector<std::vector<int>> out;
    std::vector<int> cur(d, 0);
    for (;;) {
        out.push_back(cur);
        int j = d - 1;
        while (j >= 0 && ++cur[j] > amax) cur[j--] = 0;
        if (j < 0) break;
    }
    return out;
}

struct SpectrumBuilder {
    std::map<std::string, Atom> atoms;
    double dropped = 0.0;

    void add(const AtomLabel& label, double coeff, double tail, double floor) {
        if (coeff < floor) {
            dropped += coeff;
            return;
        }
        auto [it, inserted] = atoms.try_emplace(label.key(), Atom{label, coeff, tail});
        if (!inserted) {
            it->second.coeff += coeff;
            it->second.tail += tail;
        }
    }

    std::vector<Atom> sorted() const {
        std::vector<Atom> v;
        v.reserve(atoms.size());
        for (const auto& [k, a] : atoms) v.push_back(a);
        return v;
    }
};

}  // namespace

DiffractionSpectrum meyer_spectrum(const Scheme& scheme, const Window& window,
                                   const TruncationParams& trunc) {
    if (scheme.variant != Scheme::Variant::Abelian)
        throw ConfigError("meyer_spectrum: abelian scheme required");
    if (scheme.n_phys != 1 || scheme.n_int != 1)
        throw ConfigError("meyer_spectrum: implemented for n = m = 1");
    if (window.status.state != RegularityStatus::State::Verified)
        throw RegularityError("meyer_spectrum: window must carry a regularity certificate");

    const double hs = 1.0 / (scheme.covolume() * scheme.covolume());
    EmbeddedLattice dual = dual_lattice(scheme.gamma);
    const double mI = window.interval_measure();
    // coefficient <= 4 hs / s^2; enumerate until it falls below coeff_floor
    double s_cut = 2.0 * std::sqrt(hs / trunc.coeff_floor);
    s_cut = std::clamp(s_cut, 2.0 * trunc.dual_radius, 1e6);

    SpectrumBuilder sb;
    Box box{{-trunc.dual_radius, -s_cut}, {trunc.dual_radius, s_cut}};
    enumerate_visit(dual, box, [&](const std::vector<long long>&, const Vec& x) {
        AtomLabel label;
        label.kind = AtomLabel::Kind::Frequency;
        label.freq = {round9(x[0])};
        double wft = std::abs(interval_ft(window.I_lo, window.I_hi, x[1]));
        double coeff = wft * wft * hs;
        sb.add(label, coeff, 1e-13 * (1.0 + coeff), trunc.coeff_floor);
    });
    // remainder past s_cut: density of dual points ~ 2 dual_radius / covol-dual
    // per unit of s, each with coefficient <= 4 hs / s^2
    double dens = 2.0 * trunc.dual_radius / dual.covolume;
    double remainder = 2.0 * dens * 4.0 * hs / s_cut;
    (void)mI;

    DiffractionSpectrum spec;
    spec.atoms = sb.sorted();
    spec.trunc = trunc;
    spec.dropped_mass = sb.dropped + remainder;
    spec.norm.covol_gamma = scheme.covolume();
    spec.norm.horizontal_scale = hs;
    spec.scheme_note = scheme.note;
    return spec;
}

DiffractionSpectrum powder_spectrum(const Scheme& scheme, const Window& window,
                                    const TruncationParams& trunc) {
    if (scheme.variant != Scheme::Variant::EuclideanMotion)
        throw ConfigError("powder_spectrum: Euclidean-motion scheme required");
    if (scheme.n_phys != 2 || scheme.n_int != 2 || window.annuli.size() != 1)
        throw ConfigError("powder_spectrum: implemented for d = m = 2 with one annulus");
    if (window.status.state != RegularityStatus::State::Verified)
        throw RegularityError("powder_spectrum: window must carry a regularity certificate");

    const double hs = 1.0 / (scheme.covolume() * scheme.covolume());
    EmbeddedLattice dual = dual_lattice(scheme.gamma);
    auto [a, b] = window.annuli[0];
    // |annulus_ft(s)|^2 <= K^2 / s^3 with K from |J1| <= 0.6
    double K = kTwoPi * 0.6 * (a + b);
    double s_cut = std::cbrt(K * K * hs / trunc.coeff_floor);
    s_cut = std::clamp(s_cut, 2.0 * trunc.dual_radius, 3e4);

    SpectrumBuilder sb;
    Box box{{-trunc.dual_radius, -trunc.dual_radius, -s_cut, -s_cut},
            {trunc.dual_radius, trunc.dual_radius, s_cut, s_cut}};
    const double dr2 = trunc.dual_radius * trunc.dual_radius, sc2 = s_cut * s_cut;
    enumerate_visit(dual, box, [&](const std::vector<long long>&, const Vec& x) {
        double k2 = x[0] * x[0] + x[1] * x[1];
        double s2 = x[2] * x[2] + x[3] * x[3];
        if (k2 > dr2 || s2 > sc2) return;
        AtomLabel label;
        label.kind = AtomLabel::Kind::Horizontal;
        label.kappa = round9(std::sqrt(k2));
        double wft = annulus_ft(window.annuli, {std::sqrt(s2)});
        sb.add(label, wft * wft * hs, 1e-13, trunc.coeff_floor);
    });
    // remainder: point density (pi dual_radius^2) (2 pi s) / covol-dual per ds
    double remainder = (kPi * dr2 / dual.covolume) * kTwoPi * K * K * hs / s_cut;

    DiffractionSpectrum spec;
    spec.atoms = sb.sorted();
    spec.trunc = trunc;
    spec.dropped_mass = sb.dropped + remainder;
    spec.norm.covol_gamma = scheme.covolume();
    spec.norm.horizontal_scale = hs;
    spec.scheme_note = scheme.note;
    return spec;
}

SigmaDeltaResult sigma_delta(double tau1, double tau2, const std::vector<int>& alpha,
                             const std::vector<int>& beta, const EmbeddedLattice& delta, int d1,
                             int d2, const TruncationParams& trunc) {
    if (tau1 == 0.0 || tau2 == 0.0) throw std::domain_error("sigma_delta: tau must be nonzero");
    if (static_cast<int>(alpha.size()) != d1 || static_cast<int>(beta.size()) != d2 ||
        delta.rank != 2 * (d1 + d2))
        throw std::domain_error("sigma_delta: dimension mismatch");

    const double at1 = std::fabs(tau1), at2 = std::fabs(tau2);
    const double scale =
        std::pow(at1, d1) * std::pow(at2, d2) / std::pow(kTwoPi, d1 + d2);

    int amax = 0;
    for (int a : alpha) amax = std::max(amax, a);
    for (int b : beta) amax = std::max(amax, b);
    // per-factor reach: scaled Laguerre dies past the turning point
    auto reach = [&](double at) {
        double s_max = 4.0 * amax + 2.0 + 160.0;
        return std::min(trunc.delta_radius, std::sqrt(2.0 * s_max / at));
    };
    double r1 = reach(at1), r2 = reach(at2);
    Box box;
    box.lo.assign(delta.rank, 0.0);
    box.hi.assign(delta.rank, 0.0);
    for (int i = 0; i < 2 * d1; ++i) {
        box.lo[i] = -r1;
        box.hi[i] = r1;
    }
    for (int i = 2 * d1; i < delta.rank; ++i) {
        box.lo[i] = -r2;
        box.hi[i] = r2;
    }

    double sum = 0.0, comp = 0.0;
    enumerate_visit(delta, box, [&](const std::vector<long long>&, const Vec& x) {
        double term = 1.0;
        for (int j = 0; j < d1; ++j) {
            double v2 = x[2 * j] * x[2 * j] + x[2 * j + 1] * x[2 * j + 1];
            term *= laguerre_scaled(alpha[j], 0.5 * at1 * v2);
        }
        for (int j = 0; j < d2; ++j) {
            double re = x[2 * d1 + 2 * j], im = x[2 * d1 + 2 * j + 1];
            term *= laguerre_scaled(beta[j], 0.5 * at2 * (re * re + im * im));
        }
        double y = term - comp;
        double t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    });

    double env = 1.0;
    for (int a : alpha) env *= laguerre_envelope(a);
    for (int b : beta) env *= laguerre_envelope(b);
    double kappa = std::min(at1, at2);
    double shell = gaussian_shell_bound(kappa, std::min(r1, r2), delta.rank, delta.covolume,
                                        covering_radius_bound(delta));

    SigmaDeltaResult res;
    res.value = scale * sum;
    res.tail = scale * env * shell + 1e-15 * std::fabs(scale * sum);
    return res;
}

double annulus_twisted_selfconv(double a, double b, double tau, double abs_v) {
    if (abs_v >= 2.0 * b) return 0.0;
    const double area = kPi * (b * b - a * a);
    if (abs_v < 1e-12) return area;
    const double R = abs_v;
    int n_r = 96;
    QuadratureRule r_rule = gauss_legendre(n_r, a, b);
    double outer = 0.0;
    for (int ir = 0; ir < n_r; ++ir) {
        double r = r_rule.nodes[ir];
        // |v - u|^2 = r^2 + R^2 - 2 r R cos(psi) in [a^2, b^2]
        double c_lo = (r * r + R * R - b * b) / (2.0 * r * R);
        double c_hi = (r * r + R * R - a * a) / (2.0 * r * R);
        c_lo = std::clamp(c_lo, -1.0, 1.0);
        c_hi = std::clamp(c_hi, -1.0, 1.0);
        if (c_hi <= c_lo) continue;
        double psi0 = std::acos(c_hi), psi1 = std::acos(c_lo);
        if (psi1 <= psi0) continue;
        double kap = 0.5 * std::fabs(tau) * r * R;
        int n_psi = std::min(2048, 64 + static_cast<int>(kap));
        QuadratureRule psi_rule = gauss_legendre(n_psi, psi0, psi1);
        double inner =
            quad_sum(psi_rule, [&](double psi) { return 2.0 * std::cos(kap * std::sin(psi)); });
        outer += r_rule.weights[ir] * r * inner;
    }
    return outer;
}

double vertical_coeff_resummed(const Scheme& scheme, const Window& window, double tau1,
                               double tau2, const std::vector<int>& alpha) {
    if (scheme.variant != Scheme::Variant::Heisenberg)
        throw ConfigError("vertical_coeff_resummed: Heisenberg scheme required");
    const int d1 = scheme.d1, d2 = scheme.d2;
    const double at1 = std::fabs(tau1);
    int amax = 0;
    for (int a : alpha) amax = std::max(amax, a);
    double s_max = 4.0 * amax + 2.0 + 160.0;
    double r1 = std::sqrt(2.0 * s_max / at1);
    double b_out = 0.0;
    for (auto& ab : window.annuli) b_out = std::max(b_out, ab.second);

    Box box;
    box.lo.assign(scheme.delta.rank, 0.0);
    box.hi.assign(scheme.delta.rank, 0.0);
    for (int i = 0; i < 2 * d1; ++i) {
        box.lo[i] = -r1;
        box.hi[i] = r1;
    }
    for (int i = 2 * d1; i < scheme.delta.rank; ++i) {
        box.lo[i] = -2.0 * b_out;
        box.hi[i] = 2.0 * b_out;
    }

    double sum = 0.0;
    enumerate_visit(scheme.delta, box, [&](const std::vector<long long>&, const Vec& x) {
        double term = 1.0;
        for (int j = 0; j < d1 && term != 0.0; ++j) {
            double v2 = x[2 * j] * x[2 * j] + x[2 * j + 1] * x[2 * j + 1];
            term *= laguerre_scaled(alpha[j], 0.5 * at1 * v2);
        }
        for (int j = 0; j < d2 && term != 0.0; ++j) {
            double re = x[2 * d1 + 2 * j], im = x[2 * d1 + 2 * j + 1];
            auto [a, b] = window.annuli[j];
            term *= annulus_twisted_selfconv(a, b, tau2, std::hypot(re, im));
        }
        sum += term;
    });

    double i_ft = std::abs(interval_ft(window.I_lo, window.I_hi, tau2));
    return i_ft * i_ft * std::pow(at1 / kTwoPi, d1) * sum;
}

namespace {

// Fitted tail bound for a truncated positive series: decay rate from the
// last terms, doubled for safety. Returns 0 for series that already died.
double fitted_tail(const std::vector<double>& terms) {
    int n = static_cast<int>(terms.size());
    if (n < 3) return 0.0;
    double last = std::fabs(terms[n - 1]);
    if (last < 1e-300) return 0.0;
    int k = std::min(6, n - 1);
    double prev = std::fabs(terms[n - 1 - k]);
    if (prev <= last) return 2.0 * last * 16.0;  // not decaying; crude cap
    double ratio = std::pow(last / prev, 1.0 / k);
    if (ratio < 0.9) {
        // geometric
        return 2.0 * last * ratio / (1.0 - ratio);
    }
    // power-law |t_m| ~ C m^{-p}
    double B = static_cast<double>(n - 1);
    double p = std::log(prev / last) / std::log(B / (B - k));
    if (p > 1.05) return 2.0 * last * B / (p - 1.0);
    return 2.0 * last * B * 16.0;  // near-divergent; crude cap
}

}  // namespace

DiffractionSpectrum heisenberg_spectrum(const Scheme& scheme, const Window& window,
                                        const TruncationParams& trunc) {
    if (scheme.variant != Scheme::Variant::Heisenberg)
        throw ConfigError("heisenberg_spectrum: Heisenberg scheme required");
    if (scheme.d1 != 1 || scheme.d2 != 1)
        throw ConfigError("heisenberg_spectrum: implemented for d1 = d2 = 1");
    if (window.status.state != RegularityStatus::State::Verified)
        throw RegularityError("heisenberg_spectrum: window must carry a regularity certificate");

    const double covol = scheme.covolume();
    const double hs = 1.0 / (covol * covol);
    const double vs = 1.0 / (covol * scheme.xi.covolume);
    const double mI = window.interval_measure();
    const double mWo = window.annuli_measure();
    const int A = trunc.alpha_max;

    SpectrumBuilder sb;

    // Horizontal part over Delta-perp, K-orbits merged by |sigma_1|.
    {
        EmbeddedLattice dual = dual_lattice(scheme.delta);
        auto [a, b] = window.annuli[0];
        double K = kTwoPi * 0.6 * (a + b);
        double s_cut = std::cbrt(mI * mI * K * K * hs / trunc.coeff_floor);
        s_cut = std::clamp(s_cut, 2.0 * trunc.dual_radius, 3e4);
        Box box{{-trunc.dual_radius, -trunc.dual_radius, -s_cut, -s_cut},
                {trunc.dual_radius, trunc.dual_radius, s_cut, s_cut}};
        const double dr2 = trunc.dual_radius * trunc.dual_radius, sc2 = s_cut * s_cut;
        enumerate_visit(dual, box, [&](const std::vector<long long>&, const Vec& x) {
            double k2 = x[0] * x[0] + x[1] * x[1];
            double s2 = x[2] * x[2] + x[3] * x[3];
            if (k2 > dr2 || s2 > sc2) return;
            AtomLabel label;
            label.kind = AtomLabel::Kind::Horizontal;
            label.kappa = round9(std::sqrt(k2));
            double wft = annulus_ft(window.annuli, {std::sqrt(s2)});
            sb.add(label, mI * mI * wft * wft * hs, 1e-13, trunc.coeff_floor);
        });
        sb.dropped += (kPi * dr2 / dual.covolume) * kTwoPi * mI * mI * K * K * hs / s_cut;
    }

    // Vertical part over Xi-perp (half plane, +/- merged) and alpha, with the
    // beta-sum truncated at alpha_max and a fitted tail.
    {
        EmbeddedLattice dualXi = dual_lattice(scheme.xi);
        double t2_cut = std::max(512.0, 16.0 * trunc.dual_radius);
        Box box{{1e-12, -t2_cut}, {trunc.dual_radius, t2_cut}};
        std::vector<std::array<double, 2>> pairs;
        enumerate_visit(dualXi, box, [&](const std::vector<long long>&, const Vec& x) {
            if (std::fabs(x[0]) < 1e-9 || std::fabs(x[1]) < 1e-9) return;
            pairs.push_back({x[0], x[1]});
        });

        std::vector<SpectrumBuilder> locals(pairs.size());
        parallel_shards(pairs.size(), static_cast<int>(pairs.size()), [&](int s, size_t pb,
                                                                          size_t pe) {
            for (size_t pi = pb; pi < pe; ++pi) {
                double tau1 = pairs[pi][0], tau2 = pairs[pi][1];
                const double at1 = std::fabs(tau1), at2 = std::fabs(tau2);
                double i_ft = std::abs(interval_ft(window.I_lo, window.I_hi, tau2));
                double i_ft2 = i_ft * i_ft;
                const double scale = at1 * at2 / (kTwoPi * kTwoPi);

                // window Laguerre coefficients, squared
                std::vector<double> wlc2(A + 1);
                for (int be = 0; be <= A; ++be) {
                    double w = window_laguerre_coeff(window.annuli, tau2, {be});
                    wlc2[be] = w * w;
                }

                // shared Delta pass accumulating M[a][b] = sum q_a(d1) q_b(d2)
                double s_max = 4.0 * A + 2.0 + 160.0;
                double r1 = std::min(trunc.delta_radius, std::sqrt(2.0 * s_max / at1));
                double r2 = std::min(trunc.delta_radius, std::sqrt(2.0 * s_max / at2));
                Box dbox{{-r1, -r1, -r2, -r2}, {r1, r1, r2, r2}};
                std::vector<double> M(static_cast<size_t>(A + 1) * (A + 1), 0.0);
                std::vector<double> u(A + 1), w(A + 1);
                enumerate_visit(scheme.delta, dbox,
                                [&](const std::vector<long long>&, const Vec& x) {
                                    double s1 = 0.5 * at1 * (x[0] * x[0] + x[1] * x[1]);
                                    double s2 = 0.5 * at2 * (x[2] * x[2] + x[3] * x[3]);
                                    // scaled Laguerre arrays by recurrence
                                    double e1 = std::exp(-0.5 * s1), e2 = std::exp(-0.5 * s2);
                                    u[0] = e1;
                                    w[0] = e2;
                                    if (A >= 1) {
                                        u[1] = (1.0 - s1) * e1;
                                        w[1] = (1.0 - s2) * e2;
                                    }
                                    for (int k = 1; k < A; ++k) {
                                        u[k + 1] =
                                            ((2.0 * k + 1.0 - s1) * u[k] - k * u[k - 1]) / (k + 1.0);
                                        w[k + 1] =
                                            ((2.0 * k + 1.0 - s2) * w[k] - k * w[k - 1]) / (k + 1.0);
                                    }
                                    for (int ia = 0; ia <= A; ++ia) {
                                        double ua = u[ia];
                                        if (ua == 0.0) continue;
                                        double* row = &M[static_cast<size_t>(ia) * (A + 1)];
                                        for (int ib = 0; ib <= A; ++ib) row[ib] += ua * w[ib];
                                    }
                                });

                double kappa = std::min(at1, at2);
                double shell =
                    gaussian_shell_bound(kappa, std::min(r1, r2), 4, scheme.delta.covolume,
                                         covering_radius_bound(scheme.delta));

                for (int ia = 0; ia <= A; ++ia) {
                    std::vector<double> terms(A + 1);
                    double coeff = 0.0, dtail = 0.0;
                    double env_a = laguerre_envelope(ia);
                    for (int ib = 0; ib <= A; ++ib) {
                        double sd = scale * M[static_cast<size_t>(ia) * (A + 1) + ib];
                        terms[ib] = sd * wlc2[ib];
                        coeff += terms[ib];
                        dtail += scale * env_a * laguerre_envelope(ib) * shell * wlc2[ib];
                    }
                    double btail = fitted_tail(terms);
                    AtomLabel label;
                    label.kind = AtomLabel::Kind::Vertical;
                    label.abs_tau = round9(at1);
                    label.alpha = {ia};
                    // factor 2: atoms at (tau1, tau2) and (-tau1, -tau2) merge
                    locals[s].add(label, 2.0 * vs * i_ft2 * coeff,
                                  2.0 * vs * i_ft2 * (dtail + btail) + 1e-13, trunc.coeff_floor);
                }
            }
        });
        for (auto& loc : locals) {
            for (auto& [k, atom] : loc.atoms)
                sb.add(atom.label, atom.coeff, atom.tail, trunc.coeff_floor);
            sb.dropped += loc.dropped;
        }
        // remainder past t2_cut: delta = 0 dominates, coefficient mass per
        // pair ~ (A+1) vs (at1 at2 / 4pi^2) (4/t2^2) (2pi/t2) Leb(Wo)
        double dens = 2.0 * trunc.dual_radius / dualXi.covolume;  // pairs per unit tau2
        double rem = dens * (A + 1.0) * vs * (trunc.dual_radius * 0.5) * mWo *
                     (4.0 / (kTwoPi * kPi)) / t2_cut;
        sb.dropped += rem;
    }

    DiffractionSpectrum spec;
    spec.atoms = sb.sorted();
    spec.trunc = trunc;
    spec.dropped_mass = sb.dropped;
    spec.norm.covol_gamma = covol;
    spec.norm.covol_xi = scheme.xi.covolume;
    spec.norm.covol_delta = scheme.delta.covolume;
    spec.norm.horizontal_scale = hs;
    spec.norm.vertical_scale = vs;
    spec.scheme_note = scheme.note;
    return spec;
}

// ---------------------------------------------------------------------------
// verify_psf
// ---------------------------------------------------------------------------

namespace {

// Uniform grid + 4-point Lagrange interpolation for an even real transform.
struct CachedTransform {
    double xmax = 0.0, h = 0.0;
    std::vector<double> values;

    static CachedTransform build(const std::function<double(double)>& fn, double xmax,
                                 int n = 4096) {
        CachedTransform ct;
        ct.xmax = xmax;
        ct.h = xmax / (n - 1);
        ct.values.resize(n);
        for (int i = 0; i < n; ++i) ct.values[i] = fn(i * ct.h);
        return ct;
    }

    double operator()(double x) const {
        x = std::fabs(x);
        if (x >= xmax) return 0.0;
        double u = x / h;
        int i = std::clamp(static_cast<int>(u) - 1, 0, static_cast<int>(values.size()) - 4);
        double t = u - i;
        double c0 = -(t - 1) * (t - 2) * (t - 3) / 6.0;
        double c1 = t * (t - 2) * (t - 3) / 2.0;
        double c2 = -t * (t - 1) * (t - 3) / 2.0;
        double c3 = t * (t - 1) * (t - 2) / 6.0;
        return c0 * values[i] + c1 * values[i + 1] + c2 * values[i + 2] + c3 * values[i + 3];
    }

    // int_0^xmax |transform| dx on the grid
    double l1_norm() const {
        double s = 0.0;
        for (double v : values) s += std::fabs(v);
        return s * h;
    }

    // 2 pi int_0^xmax |transform(k)| k dk (area-weighted, for 2D tails)
    double l1_radial() const {
        double s = 0.0;
        for (size_t i = 0; i < values.size(); ++i) s += std::fabs(values[i]) * (i * h);
        return 2.0 * kPi * s * h;
    }

    // smallest grid point beyond which 2 pi int_k^xmax |t(u)| u du < eps
    double radial_cut(double eps) const {
        double acc = 0.0;
        for (size_t i = values.size(); i-- > 0;) {
            acc += std::fabs(values[i]) * (i * h) * 2.0 * kPi * h;
            if (acc >= eps) return std::min(xmax, (i + 2) * h);
        }
        return 0.0;
    }
};

// Smallest x past which |fn| stays below floor_ratio * |fn(0)|.
double decay_cut(const std::function<double(double)>& magnitude, double step,
                 double floor_ratio) {
    double peak = std::max(magnitude(0.0), 1e-300);
    int quiet = 0;
    double x = step;
    for (int i = 1; i < 100000; ++i) {
        x = i * step;
        if (magnitude(x) < floor_ratio * peak) {
            if (++quiet >= 5) return x;
        } else {
            quiet = 0;
        }
    }
    return x;
}

double radial_j0_transform(const RadialProfile& psi, double k) {
    QuadratureRule rule = gauss_legendre(192, 0.0, psi.support);
    return kTwoPi * quad_sum(rule, [&](double r) { return psi(r) * bessel_j0(k * r) * r; });
}

// Per-pair vertical series by the expansion identity: for alpha = 0..A,
//   series[alpha] = sum_{delta} Ltilde_alpha(|tau1||delta1|^2/2) T_{tau2}(delta2),
// with the twisted window self-convolution T cached per point. Finite sum:
// T vanishes for |delta2| > 2 b.
std::vector<double> vertical_series(const Scheme& scheme, const Window& window, double tau1,
                                    double tau2, int A) {
    const double at1 = std::fabs(tau1);
    double s_max = 4.0 * A + 2.0 + 160.0;
    double r1 = std::sqrt(2.0 * s_max / at1);
    double b_out = 0.0;
    for (auto& ab : window.annuli) b_out = std::max(b_out, ab.second);

    Box box;
    box.lo.assign(scheme.delta.rank, 0.0);
    box.hi.assign(scheme.delta.rank, 0.0);
    for (int i = 0; i < 2 * scheme.d1; ++i) {
        box.lo[i] = -r1;
        box.hi[i] = r1;
    }
    for (int i = 2 * scheme.d1; i < scheme.delta.rank; ++i) {
        box.lo[i] = -2.0 * b_out;
        box.hi[i] = 2.0 * b_out;
    }

    std::vector<double> series(A + 1, 0.0);
    std::vector<double> u(A + 1);
    enumerate_visit(scheme.delta, box, [&](const std::vector<long long>&, const Vec& x) {
        double T = 1.0;
        for (int j = 0; j < scheme.d2 && T != 0.0; ++j) {
            double re = x[2 * scheme.d1 + 2 * j], im = x[2 * scheme.d1 + 2 * j + 1];
            auto [a, b] = window.annuli[j];
            T *= annulus_twisted_selfconv(a, b, tau2, std::hypot(re, im));
        }
        if (T == 0.0) return;
        double s1 = 0.5 * at1 * (x[0] * x[0] + x[1] * x[1]);
        double e1 = std::exp(-0.5 * s1);
        u[0] = e1;
        if (A >= 1) u[1] = (1.0 - s1) * e1;
        for (int k = 1; k < A; ++k)
            u[k + 1] = ((2.0 * k + 1.0 - s1) * u[k] - k * u[k - 1]) / (k + 1.0);
        for (int a = 0; a <= A; ++a) series[a] += u[a] * T;
    });
    return series;
}

struct BandResult {
    double value = 0.0;
    double remainder = 0.0;  // analytic bound past the last band
};

}  // namespace

PsfReport verify_psf(const Scheme& scheme, const Window& window, const PolyradialFunction& f,
                     double R, const TruncationParams& trunc, double rhs_tol) {
    PsfReport report;
    const double tol_abs = rhs_tol;
    const int n_shards = 4 * thread_cap();

    if (scheme.variant == Scheme::Variant::Abelian) {
        GroupTestFunction g = abelian_test_function(f.chi, f.chi_support);
        ModelSetSample sample = generate_points(scheme, window, R + 2.0 * g.support_radius);
        report.sample_points = sample.num_points();
        report.lhs = empirical_autocorr(sample, g, R);

        // rhs: Meyer sum over the dual lattice, banded in xi2. The
        // remainder past T is estimated from the equidistributed point
        // density: (1/covol-dual) |1_W-hat|^2-mass beyond T (= 8 m^2.../T
        // with a 1/2 oscillation factor) times ||chi-hat||_1.
        const double hs = 1.0 / (scheme.covolume() * scheme.covolume());
        EmbeddedLattice dual = dual_lattice(scheme.gamma);
        double chi_cut =
            decay_cut([&](double t) { return std::abs(chi_hat(f, t)); }, 0.5, 1e-13);
        CachedTransform chi_re = CachedTransform::build(
            [&](double t) { return std::real(chi_hat(f, t)); }, chi_cut + 1.0, 8192);
        double chi_l1 = 2.0 * chi_re.l1_norm();  // both signs of xi1

        double rhs = 0.0, band_lo = 0.0, band_hi = 64.0, remainder = 0.0;
        for (int band = 0; band < 24; ++band) {
            Box box{{-chi_cut, -band_hi}, {chi_cut, band_hi}};
            std::vector<double> partial(n_shards, 0.0);
            enumerate_visit_sharded(dual, box, n_shards,
                                    [&](int s, const std::vector<long long>&, const Vec& x) {
                                        if (std::fabs(x[1]) < band_lo) return;
                                        double wft = std::abs(
                                            interval_ft(window.I_lo, window.I_hi, x[1]));
                                        partial[s] += wft * wft * hs * chi_re(x[0]);
                                    });
            for (double p : partial) rhs += p;
            band_lo = band_hi;
            band_hi *= 2.0;
            remainder = (1.0 / dual.covolume) * hs * (0.5 * 8.0 / band_lo) * chi_l1;
            if (remainder < tol_abs && band >= 1) break;
        }
        report.dual_tail = remainder;
        report.rhs = rhs;
        report.rhs_horizontal = rhs;
    } else if (scheme.variant == Scheme::Variant::EuclideanMotion) {
        if (f.dim() < 1) throw ConfigError("verify_psf: Euclidean variant needs a radial profile");
        GroupTestFunction g = euclidean_radial_test_function(f.psi[0]);
        ModelSetSample sample = generate_points(scheme, window, R + 2.0 * g.support_radius);
        report.sample_points = sample.num_points();
        report.lhs = empirical_autocorr(sample, g, R);

        const double hs = 1.0 / (scheme.covolume() * scheme.covolume());
        EmbeddedLattice dual = dual_lattice(scheme.gamma);
        double kcut = decay_cut(
            [&](double k) { return std::fabs(radial_j0_transform(f.psi[0], k)); }, 0.5, 1e-13);
        CachedTransform rt = CachedTransform::build(
            [&](double k) { return radial_j0_transform(f.psi[0], k); }, kcut + 1.0);
        auto [wa, wb] = window.annuli[0];
        // |annulus_ft(s)|^2 mass past T: int (K^2/s^3) 2 pi s ds with the
        // J1 oscillation averaging to 1/2
        const double K2 = std::pow(kTwoPi * 0.6 * (wa + wb), 2.0);
        const double rt_l1 = rt.l1_radial();

        double rhs = 0.0, band_lo = 0.0, band_hi = 64.0, remainder = 0.0, skipped = 0.0;
        for (int band = 0; band < 24; ++band) {
            double sigma2_mass = 0.5 * kTwoPi * K2 / std::max(band_lo, 32.0);
            double keff = rt.radial_cut(0.02 * tol_abs * dual.covolume / (hs * sigma2_mass));
            skipped += tol_abs * 0.02;
            Box box{{-keff, -keff, -band_hi, -band_hi}, {keff, keff, band_hi, band_hi}};
            const double ke2 = keff * keff;
            std::vector<double> partial(n_shards, 0.0);
            enumerate_visit_sharded(
                dual, box, n_shards, [&](int s, const std::vector<long long>&, const Vec& x) {
                    double sg = std::hypot(x[2], x[3]);
                    if (sg < band_lo) return;
                    double k2 = x[0] * x[0] + x[1] * x[1];
                    if (k2 > ke2) return;
                    double wft = annulus_ft(window.annuli, {sg});
                    partial[s] += wft * wft * hs * rt(std::sqrt(k2));
                });
            for (double p : partial) rhs += p;
            band_lo = band_hi;
            band_hi *= 2.0;
            remainder = (hs / dual.covolume) * (0.5 * kTwoPi * K2 / band_lo) * rt_l1;
            if (remainder < tol_abs && band >= 1) break;
        }
        report.dual_tail = remainder + skipped;
        report.rhs = rhs;
        report.rhs_horizontal = rhs;
    } else {
        if (scheme.d1 != 1 || scheme.d2 != 1)
            throw ConfigError("verify_psf: Heisenberg variant implemented for d1 = d2 = 1");
        GroupTestFunction g = heisenberg_test_function(f);
        ModelSetSample sample = generate_points(scheme, window, R + 2.0 * g.support_radius);
        report.sample_points = sample.num_points();
        report.lhs = empirical_autocorr(sample, g, R);

        const double covol = scheme.covolume();
        const double hs = 1.0 / (covol * covol);
        const double vs = 1.0 / (covol * scheme.xi.covolume);
        const double mI = window.interval_measure();

        // ---- horizontal rhs over Delta-perp
        EmbeddedLattice dualD = dual_lattice(scheme.delta);
        double kcut = decay_cut(
            [&](double k) { return std::fabs(radial_j0_transform(f.psi[0], k)); }, 0.5, 1e-13);
        CachedTransform rt = CachedTransform::build(
            [&](double k) { return radial_j0_transform(f.psi[0], k); }, kcut + 1.0);
        const double chi0 = std::real(chi_hat(f, 0.0));
        auto [wa, wb] = window.annuli[0];
        const double K2 = std::pow(kTwoPi * 0.6 * (wa + wb), 2.0);
        const double rt_l1 = rt.l1_radial();
        const double hscale = mI * mI * hs * chi0;

        double rhs_hor = 0.0, band_lo = 0.0, band_hi = 64.0, remainder_h = 0.0, skipped = 0.0;
        for (int band = 0; band < 24; ++band) {
            double stop_tol = std::max(tol_abs, 2e-4 * std::fabs(rhs_hor));
            double sigma2_mass = 0.5 * kTwoPi * K2 / std::max(band_lo, 32.0);
            double keff = rt.radial_cut(0.02 * stop_tol * dualD.covolume /
                                        (std::fabs(hscale) * sigma2_mass));
            skipped += stop_tol * 0.02;
            Box box{{-keff, -keff, -band_hi, -band_hi}, {keff, keff, band_hi, band_hi}};
            const double ke2 = keff * keff;
            std::vector<double> partial(n_shards, 0.0);
            enumerate_visit_sharded(
                dualD, box, n_shards, [&](int s, const std::vector<long long>&, const Vec& x) {
                    double sg = std::hypot(x[2], x[3]);
                    if (sg < band_lo) return;
                    double k2 = x[0] * x[0] + x[1] * x[1];
                    if (k2 > ke2) return;
                    double wft = annulus_ft(window.annuli, {sg});
                    partial[s] += hscale * wft * wft * rt(std::sqrt(k2));
                });
            for (double p : partial) rhs_hor += p;
            band_lo = band_hi;
            band_hi *= 2.0;
            remainder_h =
                (std::fabs(hscale) / dualD.covolume) * (0.5 * kTwoPi * K2 / band_lo) * rt_l1;
            if (remainder_h < std::max(tol_abs, 2e-4 * std::fabs(rhs_hor)) && band >= 1) break;
        }
        report.dual_tail = remainder_h + skipped;
        report.rhs_horizontal = rhs_hor;

        // ---- vertical rhs over Xi-perp (half plane), beta resummed through
        // the twisted window self-convolution
        EmbeddedLattice dualXi = dual_lattice(scheme.xi);
        double tau1_cut =
            decay_cut([&](double t) { return std::abs(chi_hat(f, t)); }, 0.5, 1e-14);
        const int A = std::max(48, 2 * trunc.alpha_max);

        double rhs_vert = 0.0, t2_lo = 0.0, t2_hi = 256.0, last_vband = 0.0;
        double alpha_tail_total = 0.0;
        for (int band = 0; band < 16; ++band) {
            std::vector<std::array<double, 2>> pairs;
            Box box{{1e-12, -t2_hi}, {tau1_cut, t2_hi}};
            enumerate_visit(dualXi, box, [&](const std::vector<long long>&, const Vec& x) {
                if (std::fabs(x[1]) < std::max(t2_lo, 1e-9) || std::fabs(x[0]) < 1e-9) return;
                pairs.push_back({x[0], x[1]});
            });
            std::vector<double> contribs(pairs.size(), 0.0), atails(pairs.size(), 0.0);
            parallel_shards(pairs.size(), static_cast<int>(pairs.size()),
                            [&](int, size_t pb, size_t pe) {
                                for (size_t pi = pb; pi < pe; ++pi) {
                                    double tau1 = pairs[pi][0], tau2 = pairs[pi][1];
                                    double c_re = std::real(chi_hat(f, tau1));
                                    if (std::fabs(c_re) < 1e-18) continue;
                                    double ift =
                                        std::abs(interval_ft(window.I_lo, window.I_hi, tau2));
                                    double pair_scale =
                                        2.0 * vs * ift * ift * (std::fabs(tau1) / kTwoPi);
                                    std::vector<double> series =
                                        vertical_series(scheme, window, tau1, tau2, A);
                                    std::vector<double> terms(A + 1);
                                    double c = 0.0;
                                    for (int a = 0; a <= A; ++a) {
                                        double fa =
                                            c_re * radial_q_inner(f.psi[0], tau1, a);
                                        terms[a] = pair_scale * series[a] * fa;
                                        c += terms[a];
                                    }
                                    contribs[pi] = c;
                                    atails[pi] = fitted_tail(terms);
                                }
                            });
            double contrib = 0.0;
            for (size_t pi = 0; pi < pairs.size(); ++pi) {
                contrib += contribs[pi];
                alpha_tail_total += atails[pi];
            }
            rhs_vert += contrib;
            last_vband = std::fabs(contrib);
            t2_lo = t2_hi;
            t2_hi *= 2.0;
            if (last_vband < std::max(0.25 * tol_abs,
                                      1e-4 * std::fabs(rhs_hor + rhs_vert)) &&
                band >= 1)
                break;
        }
        report.alpha_tail = alpha_tail_total;
        report.dual_tail += 2.0 * last_vband;
        report.rhs_vertical = rhs_vert;
        report.rhs = rhs_hor + rhs_vert;
    }

    report.rel_err =
        std::fabs(report.lhs - report.rhs) / std::max(std::fabs(report.lhs), std::fabs(report.rhs));
    return report;
}

}  // namespace sphdiff
