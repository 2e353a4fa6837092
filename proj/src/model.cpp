#include "floquet/model.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <numbers>
#include <sstream>

#include "floquet/error.hpp"

namespace floquet {

std::string ValidationReport::summary() const {
  if (ok()) return "pass";
  std::ostringstream out;
  for (std::size_t i = 0; i < violations.size(); ++i) {
    if (i) out << "; ";
    out << violations[i];
  }
  return out.str();
}

ValidationReport validate(const HamiltonianData& data, double tolerance) {
  ValidationReport report;
  if (data.dim < 1) report.violations.push_back("dimension(dim=" + std::to_string(data.dim) + ")");
  if (!(data.omega > 0.0) || !std::isfinite(data.omega)) report.violations.push_back("omega(non-positive)");

  for (const auto& [m, hm] : data.harmonics) {
    if (hm.rows() != data.dim || hm.cols() != data.dim) {
      report.violations.push_back("dimension(m=" + std::to_string(m) + ")");
    } else if (!hm.allFinite()) {
      report.violations.push_back("finite(m=" + std::to_string(m) + ")");
    }
  }
  if (!report.ok()) return report;

  for (const auto& [m, hm] : data.harmonics) {
    if (m < 0) continue;
    const auto partner = data.harmonics.find(-m);
    const Matrix expected = hm.adjoint();
    const double scale = std::max(1.0, hm.cwiseAbs().maxCoeff());
    const double mismatch = partner == data.harmonics.end()
                                ? expected.cwiseAbs().maxCoeff()
                                : (partner->second - expected).cwiseAbs().maxCoeff();
    if (mismatch > tolerance * scale) report.violations.push_back("hermiticity(m=" + std::to_string(m) + ")");
  }
  // A negative harmonic without its positive partner is non-Hermitian too.
  for (const auto& [m, hm] : data.harmonics) {
    if (m >= 0 || data.harmonics.count(-m)) continue;
    if (hm.cwiseAbs().maxCoeff() > tolerance) report.violations.push_back("hermiticity(m=" + std::to_string(-m) + ")");
  }
  return report;
}

FourierHamiltonian::FourierHamiltonian(HamiltonianData data) : dim_(data.dim), omega_(data.omega) {
  const ValidationReport report = validate(data);
  if (!report.ok()) throw ConfigError("invalid Hamiltonian: " + report.summary());

  for (const auto& [m, hm] : data.harmonics) {
    if (m < 0) continue;
    if (hm.cwiseAbs().maxCoeff() == 0.0) continue;
    if (m == 0) {
      harmonics_.emplace(0, Matrix(0.5 * (hm + hm.adjoint())));
    } else {
      harmonics_.emplace(m, hm);
      harmonics_.emplace(-m, Matrix(hm.adjoint()));
    }
  }
}

double FourierHamiltonian::period() const { return 2.0 * std::numbers::pi / omega_; }

int FourierHamiltonian::max_harmonic() const {
  if (harmonics_.empty()) return 0;
  return std::max(std::abs(harmonics_.begin()->first), std::abs(harmonics_.rbegin()->first));
}

Matrix FourierHamiltonian::harmonic(int m) const {
  const auto it = harmonics_.find(m);
  if (it == harmonics_.end()) return Matrix::Zero(dim_, dim_);
  return it->second;
}

Matrix FourierHamiltonian::eval(double t) const {
  Matrix out = Matrix::Zero(dim_, dim_);
  for (const auto& [m, hm] : harmonics_) {
    if (m < 0) continue;
    if (m == 0) {
      out += hm;
      continue;
    }
    // H_m e^{imwt} + H_m^dagger e^{-imwt}, summed as a pair so the result is
    // Hermitian to rounding.
    const Complex phase = std::polar(1.0, m * omega_ * t);
    const Matrix term = phase * hm;
    out += term + term.adjoint();
  }
  return out;
}

FourierHamiltonian FourierHamiltonian::scaled(double s) const {
  HamiltonianData out{dim_, omega_, {}};
  for (const auto& [m, hm] : harmonics_) out.harmonics.emplace(m, s * hm);
  return FourierHamiltonian(std::move(out));
}

FourierHamiltonian FourierHamiltonian::plus(const FourierHamiltonian& other) const {
  if (other.dim_ != dim_) throw ConfigError("cannot add Hamiltonians of different dimension");
  if (other.omega_ != omega_) throw ConfigError("cannot add Hamiltonians with different drive frequencies");
  HamiltonianData out{dim_, omega_, harmonics_};
  for (const auto& [m, hm] : other.harmonics_) {
    auto [it, inserted] = out.harmonics.emplace(m, hm);
    if (!inserted) it->second += hm;
  }
  return FourierHamiltonian(std::move(out));
}

ValidationReport validate(const FourierHamiltonian& h) { return validate(h.data()); }

Matrix eval_at_time(const FourierHamiltonian& h, double t) { return h.eval(t); }

std::string model_hash(const FourierHamiltonian& h) {
  std::uint64_t state = 1469598103934665603ull;
  auto mix = [&state](const void* bytes, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(bytes);
    for (std::size_t i = 0; i < n; ++i) {
      state ^= p[i];
      state *= 1099511628211ull;
    }
  };
  const int dim = h.dim();
  const double omega = h.omega();
  mix(&dim, sizeof dim);
  mix(&omega, sizeof omega);
  for (const auto& [m, hm] : h.harmonics()) {
    mix(&m, sizeof m);
    for (Eigen::Index j = 0; j < hm.cols(); ++j) {
      for (Eigen::Index i = 0; i < hm.rows(); ++i) {
        const double re = hm(i, j).real();
        const double im = hm(i, j).imag();
        mix(&re, sizeof re);
        mix(&im, sizeof im);
      }
    }
  }
  std::ostringstream out;
  out << std::hex << state;
  return out.str();
}

namespace pauli {
Matrix x() {
  Matrix s(2, 2);
  s << 0, 1, 1, 0;
  return s;
}
Matrix y() {
  Matrix s(2, 2);
  s << 0, Complex(0, -1), Complex(0, 1), 0;
  return s;
}
Matrix z() {
  Matrix s(2, 2);
  s << 1, 0, 0, -1;
  return s;
}
}  // namespace pauli

namespace {

using Params = std::map<std::string, double>;

const std::map<std::string, Params>& defaults_table() {
  static const std::map<std::string, Params> table{
      {"static", {{"e0", 0.0}, {"e1", 1.0}, {"omega", 0.7}}},
      {"two_level_circular", {{"delta", 1.0}, {"V", 0.4}, {"omega", 1.5}}},
      {"two_level_linear", {{"delta", 1.0}, {"V", 0.4}, {"omega", 1.5}}},
      {"driven_ring", {{"L", 5.0}, {"J", 1.0}, {"V", 0.5}, {"omega", 2.5}}},
  };
  return table;
}

bool is_static_level_key(const std::string& key) {
  if (key.size() < 2 || key[0] != 'e') return false;
  for (std::size_t i = 1; i < key.size(); ++i) {
    if (key[i] < '0' || key[i] > '9') return false;
  }
  return true;
}

Params resolve_params(const ModelSpec& spec) {
  Params params = builtin_defaults(spec.name);
  for (const auto& [key, value] : spec.params) {
    const bool known = params.count(key) || (spec.name == "static" && is_static_level_key(key));
    if (!known) throw ConfigError("model '" + spec.name + "' has no parameter '" + key + "'");
    if (!std::isfinite(value)) throw ConfigError("parameter '" + key + "' is not finite");
    params[key] = value;
  }
  if (!(params.at("omega") > 0.0)) throw ConfigError("parameter 'omega' must be positive");
  return params;
}

FourierHamiltonian make_static(const Params& params) {
  std::vector<double> levels;
  for (int i = 0;; ++i) {
    const auto it = params.find("e" + std::to_string(i));
    if (it == params.end()) break;
    levels.push_back(it->second);
  }
  std::size_t declared = 0;
  for (const auto& [key, value] : params) {
    if (is_static_level_key(key)) ++declared;
  }
  if (declared != levels.size()) throw ConfigError("static model levels must be e0, e1, ... without gaps");
  if (levels.size() > 200) throw ConfigError("static model supports at most 200 levels");

  const int dim = static_cast<int>(levels.size());
  Matrix h0 = Matrix::Zero(dim, dim);
  for (int i = 0; i < dim; ++i) h0(i, i) = levels[i];
  return FourierHamiltonian({dim, params.at("omega"), {{0, h0}}});
}

FourierHamiltonian make_two_level(const Params& params, bool circular) {
  const double delta = params.at("delta");
  const double drive = params.at("V");
  const double omega = params.at("omega");
  HamiltonianData data{2, omega, {}};
  data.harmonics[0] = 0.5 * delta * pauli::z();
  Matrix h1;
  if (circular) {
    // (V/2)(sx cos wt + sy sin wt) = (V/4)(sx - i sy) e^{iwt} + h.c.
    h1 = 0.25 * drive * (pauli::x() - Complex(0, 1) * pauli::y());
  } else {
    // V sx cos wt = (V/2) sx e^{iwt} + h.c.
    h1 = 0.5 * drive * pauli::x();
  }
  data.harmonics[1] = h1;
  data.harmonics[-1] = h1.adjoint();
  return FourierHamiltonian(std::move(data));
}

FourierHamiltonian make_ring(const Params& params) {
  const double sites = params.at("L");
  if (sites != std::floor(sites) || sites < 3 || sites > 200) {
    throw ConfigError("driven_ring requires integer L in [3, 200]");
  }
  const int n = static_cast<int>(sites);
  const double hopping = params.at("J");
  const double drive = params.at("V");
  HamiltonianData data{n, params.at("omega"), {}};
  Matrix h0 = Matrix::Zero(n, n);
  Matrix h1 = Matrix::Zero(n, n);
  for (int j = 0; j < n; ++j) {
    const int next = (j + 1) % n;
    h0(next, j) += -hopping;
    h0(j, next) += -hopping;
    h1(j, j) = 0.5 * drive * std::cos(2.0 * std::numbers::pi * j / n);
  }
  data.harmonics[0] = h0;
  data.harmonics[1] = h1;
  data.harmonics[-1] = h1.adjoint();
  return FourierHamiltonian(std::move(data));
}

}  // namespace

std::vector<std::string> builtin_names() {
  std::vector<std::string> names;
  for (const auto& [name, params] : defaults_table()) names.push_back(name);
  return names;
}

std::map<std::string, double> builtin_defaults(const std::string& name) {
  const auto it = defaults_table().find(name);
  if (it == defaults_table().end()) throw ConfigError("unknown builtin model '" + name + "'");
  return it->second;
}

FourierHamiltonian builtin_model(const ModelSpec& spec) {
  const Params params = resolve_params(spec);
  if (spec.name == "static") return make_static(params);
  if (spec.name == "two_level_circular") return make_two_level(params, true);
  if (spec.name == "two_level_linear") return make_two_level(params, false);
  return make_ring(params);
}

}  // namespace floquet
