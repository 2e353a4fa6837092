#pragma once

#include <optional>
#include <string>
#include <vector>

#include "floquet/mode.hpp"
#include "floquet/model.hpp"

namespace floquet {

/// (mode, quasi-energy, average energy): the complete label of a Floquet state.
struct EigenTriplet {
  FloquetMode mode;
  double quasi_energy = 0.0;  ///< folded into [0, omega)
  double avg_energy = 0.0;
  int replica = 0;            ///< the mode's Sambe eigenvalue is quasi_energy + replica * omega
  double residual = 0.0;      ///< ||(H^F - lambda) Phi|| in the truncated space
  int group = -1;             ///< index of the quasi-energy group the state came from

  double branch(double omega) const { return quasi_energy + replica * omega; }
};

struct SpectrumMetadata {
  int dim = 0;
  double omega = 0.0;
  int truncation = 0;
  double tol_deg = 0.0;
  std::string solver;
  std::string model_hash;
  double max_residual = 0.0;
  /// Largest quasi-energy change between cutoffs M/2 and M (auto mode only).
  std::optional<double> truncation_change;
  /// Some group had a degenerate average-energy block; ordering inside it
  /// fell back to the deterministic tie-break.
  bool avg_energy_degenerate = false;
  std::string timestamp;
};

/// The d physical states of one quasi-energy Brillouin zone, ordered by
/// average energy (ties: quasi-energy, then index of the largest coefficient).
struct Spectrum {
  std::vector<EigenTriplet> triplets;
  SpectrumMetadata meta;

  const EigenTriplet& ground() const { return triplets.front(); }
};

/// Fold x into [0, period).
double fold(double x, double period);
/// Distance between two points on a circle of circumference `period`.
double circular_distance(double a, double b, double period);

/// Transitive clustering of points on a circle: neighbours closer than `tol`
/// (including across the 0 / period seam) share a cluster. Clusters are
/// listed in ascending order of their first member; within a cluster members
/// follow the circle starting after the preceding gap.
std::vector<std::vector<int>> cluster_circular(const std::vector<double>& points, double period, double tol);

namespace sambe {

/// Floquet Hamiltonian in the truncated Fourier basis |m| <= M:
/// block (m, m') = H_{m-m'} + m omega delta_{mm'}.
/// Throws TruncationError when M is below the largest stored harmonic.
Matrix build_sambe(const FourierHamiltonian& h, int truncation);

/// Time-averaged energy form: the same blocks without the m omega diagonal,
/// so that Phi^dagger K Phi = (1/T) int <Phi(t)|H(t)|Phi(t)> dt.
Matrix build_average_energy(const FourierHamiltonian& h, int truncation);

/// Matrix-free products with the two operators above.
Vector apply_floquet(const FourierHamiltonian& h, const FloquetMode& mode);
Vector apply_average_energy(const FourierHamiltonian& h, const FloquetMode& mode);

struct RawSpectrum {
  Eigen::VectorXd values;  ///< ascending
  Matrix vectors;          ///< orthonormal columns
  double max_residual = 0.0;
  double matrix_norm = 0.0;
};

/// Full dense Hermitian eigendecomposition with a residual check
/// ||S v - lambda v|| <= 1e-10 ||S||.
RawSpectrum diagonalize(const Matrix& s);

struct Representative {
  FloquetMode mode;
  double quasi_energy = 0.0;  ///< folded
  double branch = 0.0;        ///< raw Sambe eigenvalue
  int raw_index = -1;
};

/// Picks one replica per physical state: exactly d modes with quasi-energies
/// folded into [0, omega).
///
/// Raw eigenvalues are clustered into levels (within tol_deg) and levels into
/// replica families (by folded value). In each family the level of full
/// degeneracy whose vectors have the smallest mean-square harmonic index is
/// kept; for a non-degenerate family that is the eigenvector whose Fourier
/// centroid is nearest zero. All members of a degenerate family therefore
/// share one Sambe eigenvalue, which keeps their average-energy block
/// independent of the replica choice.
///
/// Throws TruncationError when fewer than d families are resolved.
std::vector<Representative> select_representatives(const RawSpectrum& raw, const FourierHamiltonian& h,
                                                   int truncation, double tol_deg);

struct DegenerateGroup {
  std::vector<int> members;  ///< indices into the representative list
  std::vector<int> shifts;   ///< replica shift aligning each member onto the first member's branch
  double quasi_energy = 0.0;
  Matrix block;              ///< average-energy block, filled by average_energy_block
};

/// Wrap-aware transitive clustering of the representatives' quasi-energies.
std::vector<DegenerateGroup> group_degeneracies(const std::vector<Representative>& reps, double omega,
                                                double tol_deg);

/// H_ij = sum_{m,m'} <phi_i^(m)| H_{m-m'} |phi_j^(m')> over the (aligned) members.
Matrix average_energy_block(const DegenerateGroup& group, const std::vector<Representative>& reps,
                            const FourierHamiltonian& h);

/// Diagonalizes every group's block, rotates the members into its
/// eigenbasis and returns the Ebar-ordered spectrum. Blocks missing from
/// `groups` are computed here.
Spectrum resolve_degeneracies(std::vector<DegenerateGroup> groups, const std::vector<Representative>& reps,
                              const FourierHamiltonian& h, int truncation, double tol_deg);

/// Sorts triplets by Ebar; Ebar ties (within meta.tol_deg) by quasi-energy,
/// remaining ties by the index of the largest-magnitude coefficient.
void order_spectrum(Spectrum& spectrum);

/// eps[Phi] = <<Phi|H - i d/dt|Phi>> for a normalized mode.
double quasi_energy_functional(const FloquetMode& mode, const FourierHamiltonian& h);
/// Ebar_cal[Phi] = (1/T) int <Phi(t)|H(t)|Phi(t)> dt for a normalized mode.
double average_energy_functional(const FloquetMode& mode, const FourierHamiltonian& h);

struct SolveOptions {
  std::optional<int> truncation;   ///< fixed M; empty selects the doubling rule
  std::optional<double> tol_deg;   ///< absolute; defaults to 1e-8 * omega
  int initial_truncation = 4;
  int max_truncation = 64;
  double convergence_tol = 1e-9;
};

/// build -> diagonalize -> select -> group -> resolve at a fixed cutoff.
Spectrum solve_at(const FourierHamiltonian& h, int truncation, double tol_deg);

/// Full pipeline. Without a fixed cutoff M is doubled until every
/// quasi-energy moves by less than convergence_tol between M and 2M; the 2M
/// spectrum is returned. Throws ConvergenceError when max_truncation is hit.
Spectrum solve(const FourierHamiltonian& h, const SolveOptions& options = {});

/// Largest wrap-aware distance from each quasi-energy of `a` to its nearest
/// counterpart in `b`.
double quasi_energy_shift(const Spectrum& a, const Spectrum& b);

}  // namespace sambe
}  // namespace floquet
