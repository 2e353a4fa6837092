#include "floquet/io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include "floquet/error.hpp"

namespace floquet::io {

using nlohmann::json;

namespace {

Eigen::MatrixXd real_matrix(const json& j, int dim, const std::string& where, std::vector<std::string>& problems) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(dim, dim);
  if (!j.is_array() || static_cast<int>(j.size()) != dim) {
    problems.push_back(where + ": expected " + std::to_string(dim) + " rows");
    return out;
  }
  for (int r = 0; r < dim; ++r) {
    const json& row = j[r];
    if (!row.is_array() || static_cast<int>(row.size()) != dim) {
      problems.push_back(where + ": row " + std::to_string(r) + " must have " + std::to_string(dim) + " entries");
      continue;
    }
    for (int c = 0; c < dim; ++c) {
      if (!row[c].is_number()) {
        problems.push_back(where + ": entry (" + std::to_string(r) + "," + std::to_string(c) + ") is not a number");
        continue;
      }
      out(r, c) = row[c].get<double>();
    }
  }
  return out;
}

json matrix_part(const Matrix& m, bool imaginary) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(imaginary ? m(r, c).imag() : m(r, c).real());
    rows.push_back(std::move(row));
  }
  return rows;
}

template <typename T>
T required(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) throw ConfigError(where + ": missing field '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + ": field '" + key + "' has the wrong type");
  }
}

}  // namespace

FourierHamiltonian parse_model(const json& j) {
  if (!j.is_object()) throw ConfigError("model: top level must be an object");
  if (j.contains("builtin")) {
    ModelSpec spec;
    spec.name = required<std::string>(j, "builtin", "model");
    if (j.contains("params")) {
      if (!j["params"].is_object()) throw ConfigError("model: 'params' must be an object");
      for (const auto& [key, value] : j["params"].items()) {
        if (!value.is_number()) throw ConfigError("model: parameter '" + key + "' must be a number");
        spec.params[key] = value.get<double>();
      }
    }
    return builtin_model(spec);
  }

  HamiltonianData data;
  data.dim = required<int>(j, "dim", "model");
  data.omega = required<double>(j, "omega", "model");
  if (data.dim < 1) throw ConfigError("model: dim must be >= 1");
  if (!j.contains("harmonics") || !j["harmonics"].is_array())
    throw ConfigError("model: 'harmonics' must be an array");

  std::vector<std::string> problems;
  for (std::size_t n = 0; n < j["harmonics"].size(); ++n) {
    const json& entry = j["harmonics"][n];
    const std::string where = "harmonics[" + std::to_string(n) + "]";
    if (!entry.is_object() || !entry.contains("m") || !entry["m"].is_number_integer()) {
      problems.push_back(where + ": needs an integer 'm'");
      continue;
    }
    const int m = entry["m"].get<int>();
    if (data.harmonics.count(m)) {
      problems.push_back(where + ": harmonic m=" + std::to_string(m) + " listed twice");
      continue;
    }
    if (!entry.contains("re")) {
      problems.push_back(where + ": missing 're'");
      continue;
    }
    const Eigen::MatrixXd re = real_matrix(entry["re"], data.dim, where + ".re", problems);
    const Eigen::MatrixXd im = entry.contains("im") ? real_matrix(entry["im"], data.dim, where + ".im", problems)
                                                    : Eigen::MatrixXd::Zero(data.dim, data.dim);
    Matrix hm(data.dim, data.dim);
    hm.real() = re;
    hm.imag() = im;
    data.harmonics[m] = hm;
  }
  if (!problems.empty()) {
    std::string msg = "model: ";
    for (std::size_t i = 0; i < problems.size(); ++i) msg += (i ? "; " : "") + problems[i];
    throw ConfigError(msg);
  }
  return FourierHamiltonian(std::move(data));
}

FourierHamiltonian load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open model file '" + path.string() + "'");
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ConfigError("model file '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return parse_model(j);
}

json model_to_json(const FourierHamiltonian& h) {
  json harmonics = json::array();
  for (const auto& [m, hm] : h.harmonics())
    harmonics.push_back({{"m", m}, {"re", matrix_part(hm, false)}, {"im", matrix_part(hm, true)}});
  return {{"dim", h.dim()}, {"omega", h.omega()}, {"harmonics", std::move(harmonics)}};
}

json mode_to_json(const FloquetMode& mode) {
  std::vector<double> re(static_cast<std::size_t>(mode.size())), im(re.size());
  for (Eigen::Index i = 0; i < mode.size(); ++i) {
    re[i] = mode.coeffs()[i].real();
    im[i] = mode.coeffs()[i].imag();
  }
  return {{"dim", mode.dim()}, {"truncation", mode.truncation()}, {"re", re}, {"im", im}};
}

FloquetMode mode_from_json(const json& j) {
  const int dim = required<int>(j, "dim", "mode");
  const int truncation = required<int>(j, "truncation", "mode");
  const auto re = required<std::vector<double>>(j, "re", "mode");
  const auto im = required<std::vector<double>>(j, "im", "mode");
  const std::size_t size = static_cast<std::size_t>(dim) * (2 * truncation + 1);
  if (dim < 1 || truncation < 0 || re.size() != size || im.size() != size)
    throw ConfigError("mode: coefficient arrays do not match dim and truncation");
  Vector c(static_cast<Eigen::Index>(size));
  for (std::size_t i = 0; i < size; ++i) c[static_cast<Eigen::Index>(i)] = Complex(re[i], im[i]);
  return FloquetMode(dim, truncation, std::move(c));
}

json spectrum_to_json(const Spectrum& s) {
  const auto& m = s.meta;
  json meta = {{"dim", m.dim},
               {"omega", m.omega},
               {"truncation", m.truncation},
               {"tol_deg", m.tol_deg},
               {"solver", m.solver},
               {"model_hash", m.model_hash},
               {"max_residual", m.max_residual},
               {"truncation_change", m.truncation_change ? json(*m.truncation_change) : json(nullptr)},
               {"avg_energy_degenerate", m.avg_energy_degenerate},
               {"timestamp", m.timestamp}};
  json triplets = json::array();
  for (std::size_t i = 0; i < s.triplets.size(); ++i) {
    const auto& t = s.triplets[i];
    triplets.push_back({{"state", i},
                        {"quasi_energy", t.quasi_energy},
                        {"avg_energy", t.avg_energy},
                        {"replica", t.replica},
                        {"residual", t.residual},
                        {"group", t.group},
                        {"centroid", t.mode.centroid()},
                        {"mode", mode_to_json(t.mode)}});
  }
  return {{"meta", std::move(meta)}, {"triplets", std::move(triplets)}};
}

Spectrum spectrum_from_json(const json& j) {
  if (!j.is_object() || !j.contains("meta") || !j.contains("triplets"))
    throw ConfigError("spectrum: expected 'meta' and 'triplets'");
  Spectrum s;
  const json& meta = j["meta"];
  s.meta.dim = required<int>(meta, "dim", "meta");
  s.meta.omega = required<double>(meta, "omega", "meta");
  s.meta.truncation = required<int>(meta, "truncation", "meta");
  s.meta.tol_deg = required<double>(meta, "tol_deg", "meta");
  s.meta.solver = required<std::string>(meta, "solver", "meta");
  s.meta.model_hash = required<std::string>(meta, "model_hash", "meta");
  s.meta.max_residual = required<double>(meta, "max_residual", "meta");
  if (meta.contains("truncation_change") && !meta["truncation_change"].is_null())
    s.meta.truncation_change = meta["truncation_change"].get<double>();
  s.meta.avg_energy_degenerate = meta.value("avg_energy_degenerate", false);
  s.meta.timestamp = meta.value("timestamp", std::string());
  for (const json& t : j["triplets"]) {
    EigenTriplet e;
    e.quasi_energy = required<double>(t, "quasi_energy", "triplet");
    e.avg_energy = required<double>(t, "avg_energy", "triplet");
    e.replica = required<int>(t, "replica", "triplet");
    e.residual = required<double>(t, "residual", "triplet");
    e.group = t.value("group", -1);
    if (!t.contains("mode")) throw ConfigError("triplet: missing mode");
    e.mode = mode_from_json(t["mode"]);
    s.triplets.push_back(std::move(e));
  }
  return s;
}

Spectrum load_spectrum(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open spectrum file '" + path.string() + "'");
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ConfigError("spectrum file '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return spectrum_from_json(j);
}

std::string number(double x) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

void write_spectrum_csv(std::ostream& out, const Spectrum& s) {
  out << "state,eps,ebar,residual,centroid\n";
  for (std::size_t i = 0; i < s.triplets.size(); ++i) {
    const auto& t = s.triplets[i];
    out << i << ',' << number(t.quasi_energy) << ',' << number(t.avg_energy) << ',' << number(t.residual) << ','
        << number(t.mode.centroid()) << '\n';
  }
}

void write_tracking_csv(std::ostream& out, const analysis::TrackingReport& report) {
  out << "state,eps0,ebar0,eps,ebar,overlap_qorder,overlap_label\n";
  for (const auto& r : report.rows) {
    out << r.state << ',' << number(r.eps0) << ',' << number(r.ebar0) << ',' << number(r.eps) << ',' << number(r.ebar)
        << ',' << number(r.overlap_qorder) << ',' << number(r.overlap_label) << '\n';
  }
}

void write_sweep_csv(std::ostream& out, const std::vector<analysis::SweepPoint>& points) {
  out << "lambda,state,eps,ebar\n";
  for (const auto& p : points) {
    if (!p.spectrum) continue;
    std::map<int, const EigenTriplet*> by_label;
    for (std::size_t i = 0; i < p.spectrum->triplets.size(); ++i) by_label[p.identity[i]] = &p.spectrum->triplets[i];
    for (const auto& [label, t] : by_label)
      out << number(p.lambda) << ',' << label << ',' << number(t->quasi_energy) << ',' << number(t->avg_energy) << '\n';
  }
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path.string() + "'");
  out << text;
}

void write_json(const std::filesystem::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

}  // namespace floquet::io
