#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "floquet/sambe.hpp"

namespace floquet::analysis {

// Spectrum truncation by average energy.

struct Keep {
  std::optional<int> count;         ///< keep the lowest `count` states
  std::optional<double> threshold;  ///< keep states with Ebar <= threshold

  static Keep lowest(int n) { return {n, std::nullopt}; }
  static Keep below(double ebar) { return {std::nullopt, ebar}; }
};

struct TruncatedSpectrum {
  std::vector<EigenTriplet> kept;  ///< prefix of the Ebar-ordered spectrum
  Keep rule;
  int discarded = 0;
  double lowest_discarded = 0.0;   ///< Ebar of the first dropped state (NaN when none)
  SpectrumMetadata meta;
};

/// Throws ConfigError when the rule keeps nothing by construction
/// (count <= 0, or neither / both of count and threshold given).
TruncatedSpectrum order_and_truncate(const Spectrum& spectrum, const Keep& keep);

/// Weight of the t = 0 state `psi` captured by the kept modes,
/// sum_n |<Phi_n(0)|psi>|^2; 1 for a complete set and a normalized psi.
double captured_weight(const TruncatedSpectrum& truncated, const Vector& psi);

// Overlaps between spectra.

/// |<<a|shift_k b>>| with k chosen so that both modes sit on the same branch.
double aligned_overlap(const EigenTriplet& a, const EigenTriplet& b, double omega);

/// d x d matrix of aligned overlaps. Throws ConfigError on dim / omega mismatch.
Eigen::MatrixXd overlap_matrix(const Spectrum& a, const Spectrum& b);

/// Distance in (eps / omega, Ebar / omega) with the eps axis wrapped.
double label_distance(const EigenTriplet& a, const EigenTriplet& b, double omega);

/// partner[i] = index in `b` matched to a.triplets[i], by globally greedy
/// nearest (eps, Ebar) label.
std::vector<int> pair_by_label(const Spectrum& a, const Spectrum& b);
/// Both spectra sorted by folded quasi-energy (ties by position) and
/// paired rank by rank; the conventional quasi-energy-only labelling.
std::vector<int> pair_by_quasi_energy(const Spectrum& a, const Spectrum& b);

// Perturbation robustness.

enum class Pairing { quasi_energy, label };

struct TrackingRow {
  int state = 0;
  double eps0 = 0.0, ebar0 = 0.0;  ///< unperturbed
  double eps = 0.0, ebar = 0.0;    ///< label-paired perturbed state
  int partner_qorder = -1, partner_label = -1;
  double overlap_qorder = 0.0, overlap_label = 0.0;
};

struct TrackingReport {
  std::string perturbation;
  double strength = 0.0;
  int truncation = 0;
  std::vector<TrackingRow> rows;  ///< one per physical state, in unperturbed Ebar order

  double min_overlap(Pairing p) const;
  double max_overlap(Pairing p) const;
};

/// Solves h and h + strength v at the same cutoff and pairs the two spectra
/// both ways. Requires 0 <= strength <= 1e-3 omega. A fixed cutoff in
/// `options` is used for both solves; otherwise the cutoff certified for h
/// is reused for the perturbed problem (TruncationError if v needs more).
TrackingReport perturb_and_track(const FourierHamiltonian& h, const FourierHamiltonian& v, double strength,
                                 const sambe::SolveOptions& options = {}, const std::string& description = "");

/// The shipped near-degeneracy experiment: static levels {0, 1} at omega = 0.5
/// (exact quasi-energy degeneracy) and v = |0><0|, which lifts the
/// quasi-energy of the lower level past the upper one.
struct Fixture {
  FourierHamiltonian h;
  FourierHamiltonian v;
  double strength;
  std::string name;
};
Fixture degenerate_pair_fixture();
std::vector<std::string> fixture_names();
Fixture fixture(const std::string& name);

// Parameter sweeps.

struct SweepPoint {
  double lambda = 0.0;
  std::optional<Spectrum> spectrum;  ///< empty when the point failed
  std::string error;
  std::vector<int> identity;         ///< identity[i]: tracked state label of spectrum triplet i
};

/// Solves `make(lambda)` for every value concurrently and labels states
/// across points by (eps, Ebar) continuity with the previous successful point.
/// Failures are recorded per point; the sweep always completes.
std::vector<SweepPoint> sweep(const std::function<FourierHamiltonian(double)>& make, const std::vector<double>& values,
                              const sambe::SolveOptions& options = {});

/// `count` evenly spaced values from `from` to `to` (a single value when count == 1).
std::vector<double> linspace(double from, double to, int count);

// Functionals over the truncated Floquet space.

/// <sum_n Hbar_n> for an arbitrary trial mode. The trial is expanded over
/// the replicas shift_k Phi_n (|k| <= max_shift) of the spectrum's states;
/// each component carries its state's average energy, and the sum is
/// normalized by the captured weight, so the value is a convex combination
/// of the Ebar_n.
class RitzFunctional {
 public:
  /// max_shift < 0 selects M / 2.
  explicit RitzFunctional(const Spectrum& spectrum, int max_shift = -1);

  struct Value {
    double energy = 0.0;
    double captured = 0.0;  ///< sum of |<<shift_k Phi_n|Phi>>|^2 for a normalized trial
  };
  Value operator()(const FloquetMode& mode) const;
  int max_shift() const { return max_shift_; }

 private:
  int truncation_;
  int max_shift_;
  Matrix basis_;            // columns shift_k Phi_n
  Eigen::VectorXd energies_;
};

/// Ebar_cal of the normalized mixture sum_{n,k} c_nk shift_k Phi_n compared
/// with sum |c_nk|^2 Ebar_n / sum |c_nk|^2. Column j of `weights` multiplies
/// replica shift k = j - (cols - 1) / 2 (cols must be odd).
struct MixtureEnergies {
  double calculable = 0.0;
  double resolved = 0.0;
};
MixtureEnergies mixture_energies(const Spectrum& spectrum, const FourierHamiltonian& h, const Matrix& weights);

/// || G D - D G || for the representatives' average-energy matrix G with
/// cross-group entries zeroed and D = diag(exp(-i eps_n T)).
double phase_commutator_norm(const Spectrum& spectrum, const FourierHamiltonian& h);

/// (1/T) int_0^T lambda_min(H(t)) dt by Simpson's rule on `intervals` (even) panels.
double instantaneous_ground_average(const FourierHamiltonian& h, int intervals = 4096);

}  // namespace floquet::analysis
