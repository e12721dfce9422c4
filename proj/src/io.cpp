#include "sphdiff/io.hpp"

#include "sphdiff/parallel.hpp"

#include <json.hpp>

#include <atomic>
#include <ostream>
#include <thread>

namespace sphdiff {

namespace {
std::atomic<int> g_thread_cap{0};
}

int thread_cap() {
    int cap = g_thread_cap.load();
    if (cap > 0) return cap;
    unsigned hc = std::thread::hardware_concurrency();
    return hc > 0 ? static_cast<int>(hc) : 1;
}

void set_thread_cap(int n) { g_thread_cap.store(n); }

using nlohmann::json;

namespace {

json label_json(const AtomLabel& label) {
    json j;
    switch (label.kind) {
        case AtomLabel::Kind::Frequency:
            j["kind"] = "frequency";
            j["freq"] = label.freq;
            break;
        case AtomLabel::Kind::Horizontal:
            j["kind"] = "horizontal";
            j["kappa"] = label.kappa;
            break;
        case AtomLabel::Kind::Vertical:
            j["kind"] = "vertical";
            j["abs_tau"] = label.abs_tau;
            j["alpha"] = label.alpha;
            break;
    }
    return j;
}

}  // namespace

void write_spectrum_json(std::ostream& os, const DiffractionSpectrum& spec,
                         const std::string& cfg_hash) {
    json j;
    j["meta"]["config_hash"] = cfg_hash;
    j["meta"]["scheme_note"] = spec.scheme_note;
    j["meta"]["truncation"] = {{"dual_radius", spec.trunc.dual_radius},
                               {"alpha_max", spec.trunc.alpha_max},
                               {"delta_radius", spec.trunc.delta_radius},
                               {"coeff_floor", spec.trunc.coeff_floor}};
    j["meta"]["normalization"] = {{"covol_gamma", spec.norm.covol_gamma},
                                  {"covol_xi", spec.norm.covol_xi},
                                  {"covol_delta", spec.norm.covol_delta},
                                  {"horizontal_scale", spec.norm.horizontal_scale},
                                  {"vertical_scale", spec.norm.vertical_scale}};
    j["meta"]["dropped_mass"] = spec.dropped_mass;
    j["meta"]["atom_count"] = spec.atoms.size();
    json atoms = json::array();
    for (const auto& a : spec.atoms) {
        json row;
        row["label"] = label_json(a.label);
        row["coeff"] = a.coeff;
        row["tail"] = a.tail;
        atoms.push_back(row);
    }
    j["atoms"] = atoms;
    os << j.dump(2) << "\n";
}

void write_spectrum_csv(std::ostream& os, const DiffractionSpectrum& spec,
                        const std::string& cfg_hash) {
    os << "# config=" << cfg_hash << ", atoms=" << spec.atoms.size()
       << ", dropped_mass=" << spec.dropped_mass << "\n";
    os << "label_kind,tau,alpha,coeff,tail\n";
    os.precision(15);
    for (const auto& a : spec.atoms) {
        switch (a.label.kind) {
            case AtomLabel::Kind::Frequency: {
                os << "frequency," << (a.label.freq.empty() ? 0.0 : a.label.freq[0]) << ",,";
                break;
            }
            case AtomLabel::Kind::Horizontal:
                os << "horizontal," << a.label.kappa << ",,";
                break;
            case AtomLabel::Kind::Vertical: {
                os << "vertical," << a.label.abs_tau << ",";
                for (size_t i = 0; i < a.label.alpha.size(); ++i) {
                    if (i) os << ";";
                    os << a.label.alpha[i];
                }
                os << ",";
                break;
            }
        }
        os << a.coeff << "," << a.tail << "\n";
    }
}

void write_plot_horizontal(std::ostream& os, const DiffractionSpectrum& spec) {
    os << "# position intensity\n";
    os.precision(15);
    for (const auto& a : spec.atoms) {
        if (a.label.kind == AtomLabel::Kind::Vertical) continue;
        double pos = (a.label.kind == AtomLabel::Kind::Horizontal)
                         ? a.label.kappa
                         : (a.label.freq.empty() ? 0.0 : a.label.freq[0]);
        os << pos << " " << a.coeff << "\n";
    }
}

void write_plot_vertical(std::ostream& os, const DiffractionSpectrum& spec) {
    os << "# position intensity   (position = |tau|, one block per alpha)\n";
    os.precision(15);
    for (const auto& a : spec.atoms) {
        if (a.label.kind != AtomLabel::Kind::Vertical) continue;
        os << a.label.abs_tau << " " << a.coeff << "\n";
    }
}

void write_points_csv(std::ostream& os, const ModelSetSample& sample,
                      const std::string& cfg_hash) {
    const char* scheme_name = "abelian";
    if (sample.scheme.variant == Scheme::Variant::EuclideanMotion) scheme_name = "euclidean";
    if (sample.scheme.variant == Scheme::Variant::Heisenberg) scheme_name = "heisenberg";
    os << "# scheme=" << scheme_name;
    if (sample.window.has_interval)
        os << ", window_I=[" << sample.window.I_lo << "," << sample.window.I_hi << "]";
    for (const auto& [a, b] : sample.window.annuli) os << ", annulus=[" << a << "," << b << "]";
    os << ", R=" << sample.R << ", covol=" << sample.scheme.covolume()
       << ", config=" << cfg_hash << "\n";
    os.precision(15);
    const std::size_t n = sample.num_points();
    for (std::size_t i = 0; i < n; ++i) {
        for (int k = 0; k < sample.point_dim; ++k) {
            if (k) os << ",";
            os << sample.coords[i * sample.point_dim + k];
        }
        os << "\n";
    }
}

void write_report_json(std::ostream& os, const std::string& check,
                       const std::map<std::string, double>& metrics, bool pass,
                       const std::string& cfg_hash) {
    json j;
    j["check"] = check;
    j["config_hash"] = cfg_hash;
    j["pass"] = pass;
    for (const auto& [k, v] : metrics) j["metrics"][k] = v;
    os << j.dump(2) << "\n";
}

}  // namespace sphdiff
