#pragma once

#include <cstdint>
#include <vector>

#include "floquet/sambe.hpp"

namespace floquet::variational {

/// Penalty / multiplier schedule for the constrained minimization of the
/// time-averaged energy over Floquet modes.
struct VariationalConfig {
  double mu_res = 1.0;        ///< initial weight of ||(H^F - eps[Phi]) Phi||^2
  double mu_norm = 1.0;       ///< initial weight of (<<Phi|Phi>> - 1)^2
  double mu_growth = 10.0;    ///< penalty growth when the constraint stalls
  double mu_max = 1e8;
  double mu_orth = 10.0;      ///< deflation weight against previously found states
  int max_iterations = 20000; ///< conjugate-gradient iterations per restart
  int max_outer = 60;         ///< multiplier updates per restart
  double gradient_tol = 1e-11;
  double residual_tol = 1e-8;
  int restarts = 3;           ///< random starts in addition to the static one
  std::uint64_t seed = 20240601;
  double init_width = 1.0;    ///< harmonic-index spread of random starts

  void check() const;
};

/// Multipliers of the augmented Lagrangian; zero gives the plain penalty objective.
struct Multipliers {
  Vector residual;    ///< pairs with the residual vector (empty = zero)
  double norm = 0.0;  ///< pairs with <<Phi|Phi>> - 1
};

/// f = Ebar_cal + mu_res ||r||^2 + Re<y, r> + mu_norm (N - 1)^2 + nu (N - 1)
///     + mu_orth sum_v |<<v|Phi>>|^2,
/// with r = H^F Phi - eps[Phi] Phi, eps[Phi] = <<Phi|H^F|Phi>> and N = <<Phi|Phi>>,
/// all as plain (unnormalized) quadratic forms.
class Lagrangian {
 public:
  Lagrangian(const FourierHamiltonian& h, int truncation, double mu_res, double mu_norm, double mu_orth = 0.0,
             std::vector<Vector> deflation = {});

  double value(const Vector& phi) const;
  /// Value and g = 2 df/d(conj phi), so that df = Re(g^dagger dphi).
  double value_and_gradient(const Vector& phi, Vector& gradient) const;
  /// Exact minimizer of f(phi + alpha p) over alpha > 0 (0 if none decreases f).
  double line_minimum(const Vector& phi, const Vector& p) const;

  Vector residual(const Vector& phi) const;

  Multipliers& multipliers() { return multipliers_; }
  const Multipliers& multipliers() const { return multipliers_; }
  double mu_res() const { return mu_res_; }
  double mu_norm() const { return mu_norm_; }
  void set_weights(double mu_res, double mu_norm) {
    mu_res_ = mu_res;
    mu_norm_ = mu_norm;
  }
  const Matrix& floquet_matrix() const { return sambe_; }
  const Matrix& energy_matrix() const { return energy_; }

 private:
  Matrix sambe_;
  Matrix energy_;
  double mu_res_;
  double mu_norm_;
  double mu_orth_;
  Matrix deflation_;  // columns
  Multipliers multipliers_;
};

/// Penalty objective (zero multipliers, no deflation) at `mode`.
double objective(const FloquetMode& mode, const FourierHamiltonian& h, const VariationalConfig& config);
/// Its analytic gradient, 2 df/d(conj phi).
Vector objective_gradient(const FloquetMode& mode, const FourierHamiltonian& h, const VariationalConfig& config);

struct IterationRecord {
  int outer = 0;
  int iterations = 0;  ///< cumulative conjugate-gradient iterations
  double objective = 0.0;
  double residual = 0.0;
  double norm_error = 0.0;
  double mu_res = 0.0;
};

struct VariationalResult {
  FloquetMode mode;           ///< normalized
  double quasi_energy = 0.0;  ///< folded into [0, omega)
  double avg_energy = 0.0;    ///< exactly average_energy_functional(mode)
  int replica = 0;
  double residual = 0.0;      ///< ||(H^F - eps[Phi]) Phi|| after normalization
  bool converged = false;
  std::vector<IterationRecord> trace;
  std::uint64_t seed = 0;
  int restart = -1;           ///< -1: deterministic static start, k >= 0: random start k
};

/// Lowest average-energy Floquet state by constrained minimization.
VariationalResult minimize_ground(const FourierHamiltonian& h, int truncation, const VariationalConfig& config = {});

/// Next state above `found` (mutually orthonormal modes); every in-window
/// replica of a found mode is penalized so that it cannot be re-discovered.
VariationalResult minimize_excited(const FourierHamiltonian& h, int truncation, const VariationalConfig& config,
                                   const std::vector<FloquetMode>& found);

}  // namespace floquet::variational
