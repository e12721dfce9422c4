#include "sphdiff/config.hpp"

#include "sphdiff/errors.hpp"

#include <json.hpp>

#include <cmath>
#include <set>

namespace sphdiff {

using nlohmann::json;

namespace {

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& where) {
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!allowed.count(it.key()))
            throw ConfigError("config: unknown key \"" + it.key() + "\" in " + where);
}

double finite_number(const json& j, const std::string& where) {
    if (!j.is_number()) throw ConfigError("config: " + where + " must be a number");
    double v = j.get<double>();
    if (!std::isfinite(v)) throw ConfigError("config: " + where + " must be finite");
    return v;
}

std::vector<std::vector<double>> matrix_field(const json& j, const std::string& where) {
    std::vector<std::vector<double>> m;
    if (!j.is_array()) throw ConfigError("config: " + where + " must be a matrix");
    for (const auto& row : j) {
        std::vector<double> r;
        for (const auto& v : row) r.push_back(finite_number(v, where));
        m.push_back(std::move(r));
    }
    return m;
}

}  // namespace

RunConfig RunConfig::from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: JSON parse failure: ") + e.what());
    }
    reject_unknown(j, {"scheme", "window", "truncation", "sampling", "output"}, "top level");

    RunConfig c;
    if (j.contains("scheme")) {
        const json& s = j["scheme"];
        reject_unknown(s, {"variant", "preset", "basis", "basis_xi", "basis_delta", "n_phys",
                           "d1", "d2"},
                       "scheme");
        if (s.contains("variant")) c.scheme.variant = s["variant"].get<std::string>();
        if (c.scheme.variant != "abelian" && c.scheme.variant != "euclidean" &&
            c.scheme.variant != "heisenberg")
            throw ConfigError("config: scheme.variant must be abelian|euclidean|heisenberg");
        if (s.contains("preset")) c.scheme.preset = s["preset"].get<std::string>();
        if (s.contains("basis")) c.scheme.basis = matrix_field(s["basis"], "scheme.basis");
        if (s.contains("basis_xi"))
            c.scheme.basis_xi = matrix_field(s["basis_xi"], "scheme.basis_xi");
        if (s.contains("basis_delta"))
            c.scheme.basis_delta = matrix_field(s["basis_delta"], "scheme.basis_delta");
        if (s.contains("n_phys")) c.scheme.n_phys = s["n_phys"].get<int>();
        if (s.contains("d1")) c.scheme.d1 = s["d1"].get<int>();
        if (s.contains("d2")) c.scheme.d2 = s["d2"].get<int>();
    }
    if (j.contains("window")) {
        const json& w = j["window"];
        reject_unknown(w, {"interval", "annuli"}, "window");
        if (w.contains("interval")) {
            if (!w["interval"].is_array() || w["interval"].size() != 2)
                throw ConfigError("config: window.interval must be [lo, hi]");
            c.window.has_interval = true;
            c.window.interval_lo = finite_number(w["interval"][0], "window.interval");
            c.window.interval_hi = finite_number(w["interval"][1], "window.interval");
        }
        if (w.contains("annuli")) {
            for (const auto& ab : w["annuli"]) {
                if (!ab.is_array() || ab.size() != 2)
                    throw ConfigError("config: window.annuli entries must be [a, b]");
                c.window.annuli.emplace_back(finite_number(ab[0], "window.annuli"),
                                             finite_number(ab[1], "window.annuli"));
            }
        }
    }
    if (j.contains("truncation")) {
        const json& t = j["truncation"];
        reject_unknown(t, {"dual_radius", "alpha_max", "delta_radius", "coeff_floor"},
                       "truncation");
        if (t.contains("dual_radius"))
            c.truncation.dual_radius = finite_number(t["dual_radius"], "truncation.dual_radius");
        if (t.contains("alpha_max")) c.truncation.alpha_max = t["alpha_max"].get<int>();
        if (t.contains("delta_radius"))
            c.truncation.delta_radius = finite_number(t["delta_radius"], "truncation.delta_radius");
        if (t.contains("coeff_floor"))
            c.truncation.coeff_floor = finite_number(t["coeff_floor"], "truncation.coeff_floor");
        if (c.truncation.dual_radius <= 0.0 || c.truncation.alpha_max < 0 ||
            c.truncation.delta_radius <= 0.0 || c.truncation.coeff_floor < 0.0)
            throw ConfigError("config: truncation parameters must be positive");
    }
    if (j.contains("sampling")) {
        const json& s = j["sampling"];
        reject_unknown(s, {"R", "seed", "regularity_radius"}, "sampling");
        if (s.contains("R")) c.sampling.R = finite_number(s["R"], "sampling.R");
        if (s.contains("seed")) c.sampling.seed = s["seed"].get<unsigned long long>();
        if (s.contains("regularity_radius"))
            c.sampling.regularity_radius =
                finite_number(s["regularity_radius"], "sampling.regularity_radius");
        if (c.sampling.R <= 0.0) throw ConfigError("config: sampling.R must be positive");
    }
    if (j.contains("output")) {
        const json& o = j["output"];
        reject_unknown(o, {"formats"}, "output");
        if (o.contains("formats")) {
            c.output.formats.clear();
            for (const auto& f : o["formats"]) {
                std::string fmt = f.get<std::string>();
                if (fmt != "json" && fmt != "csv" && fmt != "plot")
                    throw ConfigError("config: output.formats entries must be json|csv|plot");
                c.output.formats.push_back(fmt);
            }
        }
    }
    return c;
}

std::string RunConfig::to_json_text() const {
    json j;
    j["scheme"]["variant"] = scheme.variant;
    if (!scheme.preset.empty()) j["scheme"]["preset"] = scheme.preset;
    if (!scheme.basis.empty()) j["scheme"]["basis"] = scheme.basis;
    if (!scheme.basis_xi.empty()) j["scheme"]["basis_xi"] = scheme.basis_xi;
    if (!scheme.basis_delta.empty()) j["scheme"]["basis_delta"] = scheme.basis_delta;
    j["scheme"]["n_phys"] = scheme.n_phys;
    j["scheme"]["d1"] = scheme.d1;
    j["scheme"]["d2"] = scheme.d2;
    if (window.has_interval)
        j["window"]["interval"] = {window.interval_lo, window.interval_hi};
    if (!window.annuli.empty()) {
        json a = json::array();
        for (auto& [lo, hi] : window.annuli) a.push_back({lo, hi});
        j["window"]["annuli"] = a;
    }
    j["truncation"]["dual_radius"] = truncation.dual_radius;
    j["truncation"]["alpha_max"] = truncation.alpha_max;
    j["truncation"]["delta_radius"] = truncation.delta_radius;
    j["truncation"]["coeff_floor"] = truncation.coeff_floor;
    j["sampling"]["R"] = sampling.R;
    j["sampling"]["seed"] = sampling.seed;
    j["sampling"]["regularity_radius"] = sampling.regularity_radius;
    j["output"]["formats"] = output.formats;
    return j.dump(2);
}

namespace {

Mat to_mat(const std::vector<std::vector<double>>& rows, const std::string& where) {
    int n = static_cast<int>(rows.size());
    if (n == 0) throw ConfigError("config: empty matrix in " + where);
    Mat m(n, n);
    for (int i = 0; i < n; ++i) {
        if (static_cast<int>(rows[i].size()) != n)
            throw ConfigError("config: matrix in " + where + " must be square");
        for (int j2 = 0; j2 < n; ++j2) m(i, j2) = rows[i][j2];
    }
    return m;
}

}  // namespace

Scheme build_scheme(const RunConfig& config) {
    const SchemeConfig& s = config.scheme;
    if (s.variant == "abelian") {
        if (s.preset == "silver") return abelian_silver_scheme();
        if (!s.preset.empty()) throw ConfigError("config: unknown abelian preset " + s.preset);
        if (s.basis.empty()) throw ConfigError("config: abelian scheme needs preset or basis");
        return abelian_scheme(make_lattice(to_mat(s.basis, "scheme.basis")), s.n_phys);
    }
    if (s.variant == "euclidean") {
        if (s.preset == "gaussian-silver") return euclidean_gaussian_silver_scheme();
        if (!s.preset.empty()) throw ConfigError("config: unknown euclidean preset " + s.preset);
        if (s.basis.empty()) throw ConfigError("config: euclidean scheme needs preset or basis");
        return euclidean_scheme(make_lattice(to_mat(s.basis, "scheme.basis")), s.n_phys);
    }
    // heisenberg
    if (s.preset == "silver" || s.preset == "gaussian-silver" || s.preset.empty()) {
        if (s.basis_xi.empty() && s.basis_delta.empty()) {
            if (s.d1 != 1 || s.d2 != 1)
                throw ConfigError("config: heisenberg preset supports d1 = d2 = 1");
            return heisenberg_silver_scheme();
        }
    } else {
        throw ConfigError("config: unknown heisenberg preset " + s.preset);
    }
    if (s.basis_xi.empty() || s.basis_delta.empty())
        throw ConfigError("config: heisenberg scheme needs basis_xi and basis_delta");
    return heisenberg_scheme(make_lattice(to_mat(s.basis_xi, "scheme.basis_xi")),
                             make_lattice(to_mat(s.basis_delta, "scheme.basis_delta")), s.d1,
                             s.d2);
}

Window build_window(const RunConfig& config) {
    const WindowConfig& w = config.window;
    Window out;
    out.has_interval = w.has_interval;
    out.I_lo = w.interval_lo;
    out.I_hi = w.interval_hi;
    out.annuli = w.annuli;
    if (config.scheme.variant == "abelian") {
        if (!w.has_interval || !w.annuli.empty())
            throw ConfigError("config: abelian window is an interval");
    } else if (config.scheme.variant == "euclidean") {
        if (w.has_interval || w.annuli.empty())
            throw ConfigError("config: euclidean window is a polyannulus");
    } else {
        if (!w.has_interval || w.annuli.empty())
            throw ConfigError("config: heisenberg window is interval x polyannulus");
    }
    out.validate();
    return out;
}

std::string config_hash(const RunConfig& config) {
    std::string text = config.to_json_text();
    unsigned long long h = 1469598103934665603ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", h);
    return std::string(buf);
}

}  // namespace sphdiff
