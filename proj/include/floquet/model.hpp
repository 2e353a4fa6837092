#pragma once

#include <complex>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace floquet {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

/// Raw, unchecked description of H(t) = sum_m H_m exp(i m omega t).
struct HamiltonianData {
  int dim = 0;
  double omega = 0.0;
  std::map<int, Matrix> harmonics;
};

struct ValidationReport {
  std::vector<std::string> violations;

  bool ok() const { return violations.empty(); }
  std::string summary() const;
};

/// Report-style check: dimension mismatch, non-positive omega, and any pair
/// with H_{-m} != H_m^dagger (a missing partner counts as zero).
ValidationReport validate(const HamiltonianData& data, double tolerance = 1e-12);

/// A time-periodic Hermitian Hamiltonian stored by its Fourier components.
///
/// Construction validates the data and then makes the Hermitian pairing
/// exact (H_{-m} is overwritten by H_m^dagger, H_0 is symmetrized), so every
/// instance satisfies H(t)^dagger == H(t) for all t. Exactly-zero harmonics
/// are not stored. Instances are immutable.
class FourierHamiltonian {
 public:
  explicit FourierHamiltonian(HamiltonianData data);

  int dim() const { return dim_; }
  double omega() const { return omega_; }
  double period() const;
  const std::map<int, Matrix>& harmonics() const { return harmonics_; }

  /// Largest |m| with a stored component; 0 for a static Hamiltonian.
  int max_harmonic() const;
  /// H_m, or the zero matrix when m is not stored.
  Matrix harmonic(int m) const;
  bool has_harmonic(int m) const { return harmonics_.count(m) != 0; }

  /// H(t) = sum_m H_m exp(i m omega t).
  Matrix eval(double t) const;

  /// s * H(t), same omega.
  FourierHamiltonian scaled(double s) const;
  /// H(t) + V(t); both must share dim and omega.
  FourierHamiltonian plus(const FourierHamiltonian& other) const;

  HamiltonianData data() const { return {dim_, omega_, harmonics_}; }

 private:
  int dim_;
  double omega_;
  std::map<int, Matrix> harmonics_;
};

/// Same as validate(), applied to a constructed Hamiltonian (always passes).
ValidationReport validate(const FourierHamiltonian& h);

/// H(t) for a constructed Hamiltonian.
Matrix eval_at_time(const FourierHamiltonian& h, double t);

/// Stable 64-bit FNV-1a digest of (dim, omega, harmonics), hex encoded.
std::string model_hash(const FourierHamiltonian& h);

/// Named benchmark model plus parameters; unspecified parameters take defaults.
struct ModelSpec {
  std::string name;
  std::map<std::string, double> params;
};

/// Built-in models:
///   static              e0, e1, ... (eigenvalues, default 0, 1), omega (0.7)
///   two_level_circular  delta (1), V (0.4), omega (1.5)
///                       H = delta/2 sz + V/2 (sx cos wt + sy sin wt)
///   two_level_linear    delta (1), V (0.4), omega (1.5)
///                       H = delta/2 sz + V sx cos wt
///   driven_ring         L (5), J (1), V (0.5), omega (2.5)
///                       -J sum_j (|j+1><j| + h.c.) + V cos(wt) sum_j cos(2 pi j / L) |j><j|
FourierHamiltonian builtin_model(const ModelSpec& spec);

/// Names of all built-in models.
std::vector<std::string> builtin_names();

/// Default parameters of a built-in model; throws ConfigError for unknown names.
std::map<std::string, double> builtin_defaults(const std::string& name);

namespace pauli {
Matrix x();
Matrix y();
Matrix z();
}  // namespace pauli

}  // namespace floquet
