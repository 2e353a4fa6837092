#pragma once

#include <vector>

#include "floquet/sambe.hpp"

// Independent reference path: everything here is computed from the
// time-dependent Schrodinger equation on a uniform time grid, never from the
// Fourier-block Floquet matrix.
namespace floquet::oracle {

struct PropagationConfig {
  int steps_per_period = 4096;  ///< even, >= 64
  /// Repeat at twice the steps and extrapolate quasi-energies and average
  /// energies as (4 x_fine - x_coarse) / 3 (the midpoint scheme is symmetric,
  /// so its error series is even in the step).
  bool richardson = true;
  double unitarity_tol = 1e-12;
  double tail_tol = 1e-6;  ///< Fourier weight outside |m| <= M that triggers a warning

  void check() const;
};

struct MonodromyResult {
  Matrix propagator;            ///< U(T)
  Eigen::VectorXd eigenphases;  ///< theta_n in [0, 2 pi), U v_n = exp(-i theta_n) v_n
  Matrix eigenvectors;          ///< orthonormal columns
  Eigen::VectorXd quasi_energies;  ///< theta_n / T in [0, omega)
  double unitarity_error = 0.0;    ///< ||U^dagger U - 1||_F
};

/// One period of exp(-i H(t_mid) dt) steps; U(T) and its eigen-decomposition.
/// Throws ConvergenceError when ||U^dagger U - 1|| exceeds the tolerance.
/// Quasi-energies are Richardson-extrapolated when enabled; the eigenvectors
/// always come from the finest run.
MonodromyResult propagate_period(const FourierHamiltonian& h, const PropagationConfig& config = {});

/// psi(t_k) for t_k = k T / steps, k = 0..steps (both period endpoints).
struct Trajectory {
  double dt = 0.0;
  std::vector<Vector> states;
};

Trajectory propagate_state(const FourierHamiltonian& h, const Vector& initial, int steps);

struct OracleMode {
  FloquetMode mode;
  double quasi_energy = 0.0;  ///< folded into [0, omega)
  int replica = 0;            ///< mode is centred so that its branch is quasi_energy + replica * omega
  double tail_weight = 0.0;
  bool truncation_warning = false;
};

/// Propagates `initial` (an eigenvector of U(T)) over one period, strips the
/// phase exp(-i eps t), and Fourier-transforms the periodic part onto the
/// replica window |m| <= M closest to the mode's centroid.
OracleMode mode_from_propagation(const FourierHamiltonian& h, const Vector& initial, int truncation,
                                 const PropagationConfig& config = {});

/// Simpson average of <psi(t)|H(t)|psi(t)> over the trajectory. Throws
/// ConfigError when the integrand differs at the two period endpoints by more
/// than `periodicity_tol` (relative).
double time_averaged_energy(const FourierHamiltonian& h, const Trajectory& trajectory, double periodicity_tol = 1e-6);

/// Simpson average of <Phi(t)|H(t)|Phi(t)> on `samples` intervals.
double time_averaged_energy(const FourierHamiltonian& h, const FloquetMode& mode, int samples = 4096);

/// Complete reference spectrum: quasi-energies from U(T), average energies
/// from explicit time averages, degenerate eigenphases resolved by
/// diagonalizing the time-averaged energy matrix inside each group. The
/// triplets' `residual` field carries sqrt(tail weight).
Spectrum oracle_spectrum(const FourierHamiltonian& h, int truncation, const PropagationConfig& config = {},
                         double tol_deg = -1.0);

}  // namespace floquet::oracle
