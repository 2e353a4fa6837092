#include "floquet/oracle.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/FFT>

#include "floquet/error.hpp"

namespace floquet::oracle {
namespace {

constexpr double two_pi = 2.0 * std::numbers::pi;

// One Newton-Schulz step towards the nearest unitary. Rounding in the
// eigenvectors and in the running product is otherwise biased and adds up
// linearly over thousands of steps.
void polar_correct(Matrix& u) {
  const Matrix id = Matrix::Identity(u.rows(), u.cols());
  u = (0.5 * u * (3.0 * id - u.adjoint() * u)).eval();
}

// exp(-i H dt) for Hermitian H, unitary to rounding.
Matrix unitary_step(const Matrix& hamiltonian, double dt) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(hamiltonian);
  if (solver.info() != Eigen::Success) throw ConvergenceError("instantaneous Hamiltonian diagonalization failed");
  Vector phases(hamiltonian.rows());
  for (Eigen::Index i = 0; i < phases.size(); ++i) phases(i) = std::polar(1.0, -solver.eigenvalues()(i) * dt);
  Matrix u = solver.eigenvectors() * phases.asDiagonal() * solver.eigenvectors().adjoint();
  polar_correct(u);
  return u;
}

Matrix step_at(const FourierHamiltonian& h, int k, double dt) { return unitary_step(h.eval((k + 0.5) * dt), dt); }

Matrix monodromy(const FourierHamiltonian& h, int steps) {
  const double dt = h.period() / steps;
  Matrix u = Matrix::Identity(h.dim(), h.dim());
  for (int k = 0; k < steps; ++k) {
    u = step_at(h, k, dt) * u;
    polar_correct(u);
  }
  return u;
}

double unitarity_error(const Matrix& u) {
  return (u.adjoint() * u - Matrix::Identity(u.rows(), u.cols())).norm();
}

void check_unitarity(const Matrix& u, double tol) {
  const double err = unitarity_error(u);
  if (err > tol) {
    std::ostringstream msg;
    msg << "propagator unitarity drift " << err << " exceeds " << tol;
    throw ConvergenceError(msg.str());
  }
}

// theta in [0, 2 pi) with mu = exp(-i theta).
double eigenphase(Complex mu) { return fold(-std::arg(mu), two_pi); }

// Difference a - b brought into (-period/2, period/2].
double wrapped_difference(double a, double b, double period) {
  double d = fold(a - b, period);
  if (d > 0.5 * period) d -= period;
  return d;
}

double simpson_weight(int k, int intervals) {
  if (k == 0 || k == intervals) return 1.0;
  return k % 2 ? 4.0 : 2.0;
}

// Samples of Phi(t_n) = exp(i eps t_n) psi(t_n), n = 0..N-1, as one Fourier
// mode centred on its own weight.
OracleMode fourier_mode(const std::vector<Vector>& periodic_samples, double quasi_energy, int truncation,
                        double tail_tol) {
  const int n = static_cast<int>(periodic_samples.size());
  const int d = static_cast<int>(periodic_samples.front().size());

  Eigen::FFT<double> fft;
  std::vector<std::vector<Complex>> spectra(d);
  std::vector<Complex> series(n);
  for (int a = 0; a < d; ++a) {
    for (int s = 0; s < n; ++s) series[s] = periodic_samples[s](a);
    fft.fwd(spectra[a], series);
  }
  // Harmonic m lives at FFT bin m mod N; m ranges over (-N/2, N/2].
  auto harmonic_index = [n](int bin) { return bin > n / 2 ? bin - n : bin; };
  auto coefficient = [&](int a, int m) { return spectra[a][((m % n) + n) % n] / static_cast<double>(n); };

  double total = 0.0;
  double weighted = 0.0;
  for (int bin = 0; bin < n; ++bin) {
    double w = 0.0;
    for (int a = 0; a < d; ++a) w += std::norm(spectra[a][bin]);
    w /= static_cast<double>(n) * n;
    total += w;
    weighted += harmonic_index(bin) * w;
  }
  const int centre = static_cast<int>(std::lround(weighted / total));

  FloquetMode mode = FloquetMode::zero(d, truncation);
  double kept = 0.0;
  for (int m = -truncation; m <= truncation; ++m) {
    for (int a = 0; a < d; ++a) {
      const Complex c = coefficient(a, m + centre);
      mode.coeffs()(static_cast<Eigen::Index>(m + truncation) * d + a) = c;
      kept += std::norm(c);
    }
  }

  OracleMode out;
  out.tail_weight = std::max(0.0, (total - kept) / total);
  out.truncation_warning = out.tail_weight > tail_tol;
  out.quasi_energy = quasi_energy;
  // The window holds harmonics centre - M .. centre + M, i.e. the true mode
  // shifted down by `centre`, whose branch is eps - centre * omega.
  out.replica = -centre;
  out.mode = mode.normalized();
  return out;
}

struct GridRun {
  Matrix propagator;
  std::vector<Matrix> samples;  // psi_k = U(t_k) V for k = 0..steps (fine run only)
  Matrix energy;                // (1/T) int psi^dagger H psi dt, Simpson
};

// Propagates the columns of `initial` through one period, accumulating the
// time-averaged energy matrix.
GridRun propagate_columns(const FourierHamiltonian& h, const Matrix& initial, int steps, bool keep_samples) {
  const double dt = h.period() / steps;
  GridRun run;
  Matrix psi = initial;
  Matrix u = Matrix::Identity(h.dim(), h.dim());
  run.energy = Matrix::Zero(initial.cols(), initial.cols());
  if (keep_samples) run.samples.reserve(steps + 1);
  for (int k = 0; k <= steps; ++k) {
    run.energy += simpson_weight(k, steps) * (psi.adjoint() * h.eval(k * dt) * psi);
    if (keep_samples) run.samples.push_back(psi);
    if (k == steps) break;
    const Matrix step = step_at(h, k, dt);
    psi = step * psi;
    u = step * u;
    polar_correct(u);
  }
  run.energy /= 3.0 * steps;
  run.propagator = u;
  return run;
}

}  // namespace

void PropagationConfig::check() const {
  if (steps_per_period < 64 || steps_per_period % 2) throw ConfigError("steps_per_period must be even and >= 64");
  if (!(unitarity_tol > 0.0) || !(tail_tol > 0.0)) throw ConfigError("propagation tolerances must be positive");
}

MonodromyResult propagate_period(const FourierHamiltonian& h, const PropagationConfig& config) {
  config.check();
  const double period = h.period();
  const int fine_steps = config.richardson ? 2 * config.steps_per_period : config.steps_per_period;

  MonodromyResult result;
  result.propagator = monodromy(h, fine_steps);
  result.unitarity_error = unitarity_error(result.propagator);
  check_unitarity(result.propagator, config.unitarity_tol);

  // U is normal, so its complex Schur form is diagonal and the Schur vectors
  // are an orthonormal eigenbasis even for (near-)degenerate eigenphases.
  Eigen::ComplexSchur<Matrix> schur(result.propagator);
  if (schur.info() != Eigen::Success) throw ConvergenceError("Schur decomposition of U(T) failed");
  result.eigenvectors = schur.matrixU();
  const int d = h.dim();
  result.eigenphases.resize(d);
  result.quasi_energies.resize(d);
  for (int j = 0; j < d; ++j) {
    result.eigenphases(j) = eigenphase(schur.matrixT()(j, j));
    result.quasi_energies(j) = result.eigenphases(j) / period;
  }

  if (config.richardson) {
    const Matrix coarse = monodromy(h, config.steps_per_period);
    check_unitarity(coarse, config.unitarity_tol);
    for (int j = 0; j < d; ++j) {
      const Vector v = result.eigenvectors.col(j);
      const double coarse_eps = eigenphase(v.dot(coarse * v)) / period;
      const double fine_eps = result.quasi_energies(j);
      result.quasi_energies(j) = fold(fine_eps + wrapped_difference(fine_eps, coarse_eps, h.omega()) / 3.0, h.omega());
    }
  }
  return result;
}

Trajectory propagate_state(const FourierHamiltonian& h, const Vector& initial, int steps) {
  if (steps < 2 || steps % 2) throw ConfigError("trajectory needs an even number of steps");
  Trajectory trajectory;
  trajectory.dt = h.period() / steps;
  trajectory.states.reserve(steps + 1);
  Vector psi = initial;
  for (int k = 0; k <= steps; ++k) {
    trajectory.states.push_back(psi);
    if (k < steps) psi = step_at(h, k, trajectory.dt) * psi;
  }
  return trajectory;
}

OracleMode mode_from_propagation(const FourierHamiltonian& h, const Vector& initial, int truncation,
                                 const PropagationConfig& config) {
  config.check();
  const int steps = config.steps_per_period;
  const Trajectory trajectory = propagate_state(h, initial.normalized(), steps);
  const Complex overlap = trajectory.states.front().dot(trajectory.states.back());
  const double quasi_energy = fold(eigenphase(overlap) / h.period(), h.omega());

  std::vector<Vector> periodic;
  periodic.reserve(steps);
  for (int k = 0; k < steps; ++k) {
    periodic.push_back(std::polar(1.0, quasi_energy * k * trajectory.dt) * trajectory.states[k]);
  }
  return fourier_mode(periodic, quasi_energy, truncation, config.tail_tol);
}

double time_averaged_energy(const FourierHamiltonian& h, const Trajectory& trajectory, double periodicity_tol) {
  const int steps = static_cast<int>(trajectory.states.size()) - 1;
  if (steps < 2 || steps % 2) throw ConfigError("Simpson average needs an even number of intervals");
  double sum = 0.0;
  double first = 0.0;
  double last = 0.0;
  for (int k = 0; k <= steps; ++k) {
    const Vector& psi = trajectory.states[k];
    const double e = psi.dot(h.eval(k * trajectory.dt) * psi).real();
    if (k == 0) first = e;
    if (k == steps) last = e;
    sum += simpson_weight(k, steps) * e;
  }
  if (std::abs(last - first) > periodicity_tol * (1.0 + std::abs(first))) {
    std::ostringstream msg;
    msg << "energy expectation is not periodic over the trajectory (" << first << " vs " << last << ")";
    throw ConfigError(msg.str());
  }
  return sum / (3.0 * steps);
}

double time_averaged_energy(const FourierHamiltonian& h, const FloquetMode& mode, int samples) {
  if (samples < 2 || samples % 2) throw ConfigError("Simpson average needs an even number of intervals");
  const double dt = h.period() / samples;
  double sum = 0.0;
  for (int k = 0; k <= samples; ++k) {
    const Vector phi = mode.at_time(k * dt, h.omega());
    sum += simpson_weight(k, samples) * phi.dot(h.eval(k * dt) * phi).real();
  }
  return sum / (3.0 * samples);
}

Spectrum oracle_spectrum(const FourierHamiltonian& h, int truncation, const PropagationConfig& config,
                         double tol_deg) {
  config.check();
  const double omega = h.omega();
  const double period = h.period();
  if (tol_deg < 0.0) tol_deg = 1e-8 * omega;
  const int d = h.dim();

  const MonodromyResult mono = propagate_period(h, config);
  const int fine_steps = config.richardson ? 2 * config.steps_per_period : config.steps_per_period;
  const GridRun fine = propagate_columns(h, mono.eigenvectors, fine_steps, true);
  Matrix energy = fine.energy;
  if (config.richardson) {
    const GridRun coarse = propagate_columns(h, mono.eigenvectors, config.steps_per_period, false);
    energy = fine.energy + (fine.energy - coarse.energy) / 3.0;
  }

  std::vector<double> eps(mono.quasi_energies.data(), mono.quasi_energies.data() + d);
  Spectrum spectrum;
  spectrum.meta.dim = d;
  spectrum.meta.omega = omega;
  spectrum.meta.truncation = truncation;
  spectrum.meta.tol_deg = tol_deg;
  spectrum.meta.solver = "monodromy propagation (midpoint exponential, " + std::to_string(fine_steps) +
                         " steps" + (config.richardson ? ", Richardson)" : ")");
  spectrum.meta.model_hash = model_hash(h);

  const auto groups = cluster_circular(eps, omega, tol_deg);
  for (std::size_t g = 0; g < groups.size(); ++g) {
    const auto& members = groups[g];
    const int k = static_cast<int>(members.size());
    Matrix block(k, k);
    for (int i = 0; i < k; ++i) {
      for (int j = 0; j < k; ++j) block(i, j) = energy(members[i], members[j]);
    }
    block = 0.5 * (block + block.adjoint());
    // Within a degenerate eigenphase group U(T) cannot pick a basis; the
    // time-averaged energy matrix does.
    Eigen::SelfAdjointEigenSolver<Matrix> solver(block);
    if (solver.info() != Eigen::Success) throw ConvergenceError("time-averaged energy block diagonalization failed");

    for (int a = 0; a < k; ++a) {
      Vector rotation = Vector::Zero(d);
      for (int i = 0; i < k; ++i) rotation(members[i]) = solver.eigenvectors()(i, a);
      const double quasi_energy = eps[members.front()];

      std::vector<Vector> periodic;
      periodic.reserve(fine_steps);
      const double dt = period / fine_steps;
      for (int s = 0; s < fine_steps; ++s) {
        periodic.push_back(std::polar(1.0, quasi_energy * s * dt) * (fine.samples[s] * rotation));
      }
      OracleMode om = fourier_mode(periodic, quasi_energy, truncation, config.tail_tol);

      EigenTriplet triplet;
      triplet.mode = std::move(om.mode);
      triplet.quasi_energy = quasi_energy;
      triplet.replica = om.replica;
      triplet.avg_energy = solver.eigenvalues()(a);
      triplet.residual = std::sqrt(om.tail_weight);
      triplet.group = static_cast<int>(g);
      spectrum.meta.max_residual = std::max(spectrum.meta.max_residual, triplet.residual);
      spectrum.triplets.push_back(std::move(triplet));
    }
    for (int i = 1; i < k; ++i) {
      if (solver.eigenvalues()(i) - solver.eigenvalues()(i - 1) <= tol_deg) spectrum.meta.avg_energy_degenerate = true;
    }
  }
  sambe::order_spectrum(spectrum);
  return spectrum;
}

}  // namespace floquet::oracle
