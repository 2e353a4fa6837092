#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "floquet/analysis.hpp"
#include "floquet/sambe.hpp"

namespace floquet::io {

/// Model from JSON, either explicit
///   {"dim": d, "omega": w, "harmonics": [{"m": k, "re": [[...]], "im": [[...]]}, ...]}
/// ("im" optional) or built-in {"builtin": name, "params": {...}}.
/// Every violation is reported in one ConfigError.
FourierHamiltonian parse_model(const nlohmann::json& j);
FourierHamiltonian load_model(const std::filesystem::path& path);
nlohmann::json model_to_json(const FourierHamiltonian& h);

nlohmann::json mode_to_json(const FloquetMode& mode);
FloquetMode mode_from_json(const nlohmann::json& j);

nlohmann::json spectrum_to_json(const Spectrum& spectrum);
Spectrum spectrum_from_json(const nlohmann::json& j);
Spectrum load_spectrum(const std::filesystem::path& path);

/// Shortest round-trip decimal form, used by every CSV writer.
std::string number(double x);

/// state, eps, ebar, residual, centroid
void write_spectrum_csv(std::ostream& out, const Spectrum& spectrum);
/// state, eps0, ebar0, eps, ebar, overlap_qorder, overlap_label
void write_tracking_csv(std::ostream& out, const analysis::TrackingReport& report);
/// lambda, state, eps, ebar (states labelled by continuity; failed points omitted)
void write_sweep_csv(std::ostream& out, const std::vector<analysis::SweepPoint>& points);

void write_text(const std::filesystem::path& path, const std::string& text);
void write_json(const std::filesystem::path& path, const nlohmann::json& j);

}  // namespace floquet::io
