#pragma once

// JSON run configuration: strict schema (unknown keys rejected), stable
// round-trip, named presets for the quadratic-field example lattices.

#include "sphdiff/diffraction.hpp"
#include "sphdiff/modelset.hpp"

#include <string>
#include <vector>

namespace sphdiff {

struct SchemeConfig {
    std::string variant = "abelian";  // abelian | euclidean | heisenberg
    std::string preset;               // silver | gaussian-silver (or empty)
    std::vector<std::vector<double>> basis;        // abelian/euclidean explicit
    std::vector<std::vector<double>> basis_xi;     // heisenberg explicit
    std::vector<std::vector<double>> basis_delta;  // heisenberg explicit
    int n_phys = 1;
    int d1 = 1, d2 = 1;
};

struct WindowConfig {
    bool has_interval = false;
    double interval_lo = 0.0, interval_hi = 0.0;
    std::vector<std::pair<double, double>> annuli;
};

struct SamplingConfig {
    double R = 100.0;
    unsigned long long seed = 20240801ull;
    double regularity_radius = 0.0;  // 0 -> use R
};

struct OutputConfig {
    std::vector<std::string> formats = {"json", "csv", "plot"};
};

struct RunConfig {
    SchemeConfig scheme;
    WindowConfig window;
    TruncationParams truncation;
    SamplingConfig sampling;
    OutputConfig output;

    static RunConfig from_json_text(const std::string& text);  // throws ConfigError
    std::string to_json_text() const;  // canonical, round-trips
};

Scheme build_scheme(const RunConfig& config);
Window build_window(const RunConfig& config);

// FNV-1a hash of the canonical JSON, for provenance headers.
std::string config_hash(const RunConfig& config);

}  // namespace sphdiff
