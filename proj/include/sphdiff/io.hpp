#pragma once

// File exports with provenance headers, shared by the CLI and tests.

#include "sphdiff/config.hpp"
#include "sphdiff/diffraction.hpp"
#include "sphdiff/modelset.hpp"

#include <iosfwd>
#include <map>
#include <string>

namespace sphdiff {

// spectrum.json: {meta: {...}, atoms: [{label, coeff, tail}]}
void write_spectrum_json(std::ostream& os, const DiffractionSpectrum& spec,
                         const std::string& cfg_hash);

// spectrum.csv: "label_kind,tau,alpha,coeff,tail" rows (kappa/frequency in
// the tau column for horizontal/frequency atoms).
void write_spectrum_csv(std::ostream& os, const DiffractionSpectrum& spec,
                        const std::string& cfg_hash);

// Two-column "position intensity" plot data, horizontal and vertical
// families separately.
void write_plot_horizontal(std::ostream& os, const DiffractionSpectrum& spec);
void write_plot_vertical(std::ostream& os, const DiffractionSpectrum& spec);

// points.csv with the documented header line.
void write_points_csv(std::ostream& os, const ModelSetSample& sample,
                      const std::string& cfg_hash);

// report.json for cmd_verify.
void write_report_json(std::ostream& os, const std::string& check,
                       const std::map<std::string, double>& metrics, bool pass,
                       const std::string& cfg_hash);

}  // namespace sphdiff
