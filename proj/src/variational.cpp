#include "floquet/variational.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <unsupported/Eigen/Polynomials>

#include "floquet/error.hpp"

namespace floquet::variational {

namespace {

using Poly = std::vector<double>;  // ascending powers

void add_scaled(Poly& out, const Poly& p, double s) {
  if (out.size() < p.size()) out.resize(p.size(), 0.0);
  for (std::size_t i = 0; i < p.size(); ++i) out[i] += s * p[i];
}

Poly multiply(const Poly& a, const Poly& b) {
  Poly out(a.size() + b.size() - 1, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
  return out;
}

double evaluate(const Poly& p, double x) {
  double v = 0.0;
  for (auto it = p.rbegin(); it != p.rend(); ++it) v = v * x + *it;
  return v;
}

double re_dot(const Vector& a, const Vector& b) { return a.dot(b).real(); }

// Operator-norm scale of the drive, used to make the deflation weight
// dominate any average-energy difference.
double energy_scale(const FourierHamiltonian& h) {
  double s = 0.0;
  for (const auto& [m, hm] : h.harmonics()) {
    if (m >= 0) s += (m == 0 ? 1.0 : 2.0) * hm.norm();
  }
  return s;
}

}  // namespace

void VariationalConfig::check() const {
  if (!(mu_res > 0.0) || !(mu_norm > 0.0) || !(mu_growth > 1.0) || !(mu_max >= mu_res) || mu_orth < 0.0)
    throw ConfigError("variational: penalty weights must be positive (growth > 1)");
  if (max_iterations < 1 || max_outer < 1) throw ConfigError("variational: iteration limits must be positive");
  if (!(residual_tol > 0.0) || !(gradient_tol > 0.0)) throw ConfigError("variational: tolerances must be positive");
  if (restarts < 0) throw ConfigError("variational: restarts must be >= 0");
  if (!(init_width > 0.0)) throw ConfigError("variational: init_width must be positive");
}

Lagrangian::Lagrangian(const FourierHamiltonian& h, int truncation, double mu_res, double mu_norm, double mu_orth,
                       std::vector<Vector> deflation)
    : sambe_(sambe::build_sambe(h, truncation)),
      energy_(sambe::build_average_energy(h, truncation)),
      mu_res_(mu_res),
      mu_norm_(mu_norm),
      mu_orth_(mu_orth) {
  deflation_.resize(sambe_.rows(), static_cast<Eigen::Index>(deflation.size()));
  for (std::size_t j = 0; j < deflation.size(); ++j) deflation_.col(static_cast<Eigen::Index>(j)) = deflation[j];
}

Vector Lagrangian::residual(const Vector& phi) const {
  const Vector u = sambe_ * phi;
  return u - re_dot(phi, u) * phi;
}

double Lagrangian::value(const Vector& phi) const {
  const Vector u = sambe_ * phi;
  const double eps = re_dot(phi, u);
  const Vector r = u - eps * phi;
  const double n = phi.squaredNorm() - 1.0;
  double f = re_dot(phi, energy_ * phi) + mu_res_ * r.squaredNorm() + mu_norm_ * n * n + multipliers_.norm * n;
  if (multipliers_.residual.size() == r.size()) f += re_dot(multipliers_.residual, r);
  if (deflation_.cols() > 0) f += mu_orth_ * (deflation_.adjoint() * phi).squaredNorm();
  return f;
}

double Lagrangian::value_and_gradient(const Vector& phi, Vector& gradient) const {
  const Vector kphi = energy_ * phi;
  const Vector u = sambe_ * phi;
  const double eps = re_dot(phi, u);
  const Vector r = u - eps * phi;
  const double n = phi.squaredNorm() - 1.0;

  double f = re_dot(phi, kphi) + mu_res_ * r.squaredNorm() + mu_norm_ * n * n + multipliers_.norm * n;
  gradient = 2.0 * kphi;

  // d||r||^2 = 2 Re<(S - eps) r, dphi> - 4 Re(r^dagger phi) Re<S phi, dphi>
  Vector sr = sambe_ * r - eps * r;
  gradient += mu_res_ * (2.0 * sr - 4.0 * re_dot(r, phi) * u);

  if (multipliers_.residual.size() == r.size()) {
    const Vector& y = multipliers_.residual;
    f += re_dot(y, r);
    gradient += sambe_ * y - eps * y - 2.0 * re_dot(y, phi) * u;
  }
  gradient += (4.0 * mu_norm_ * n + 2.0 * multipliers_.norm) * phi;

  if (deflation_.cols() > 0) {
    const Vector a = deflation_.adjoint() * phi;
    f += mu_orth_ * a.squaredNorm();
    gradient += 2.0 * mu_orth_ * (deflation_ * a);
  }
  return f;
}

double Lagrangian::line_minimum(const Vector& phi, const Vector& direction) const {
  const double pnorm = direction.norm();
  if (!(pnorm > 0.0)) return 0.0;
  const Vector p = direction / pnorm;

  const Vector u = sambe_ * phi;
  const Vector q = sambe_ * p;
  const Vector kphi = energy_ * phi;
  const Vector kp = energy_ * p;

  const double s0 = re_dot(phi, u), s1 = 2.0 * re_dot(p, u), s2 = re_dot(p, q);
  const Poly energy{re_dot(phi, kphi), 2.0 * re_dot(p, kphi), re_dot(p, kp)};
  const Poly norm{phi.squaredNorm() - 1.0, 2.0 * re_dot(p, phi), p.squaredNorm()};

  // r(alpha) = u + alpha q - eps(alpha) (phi + alpha p), cubic in alpha.
  const Vector r[4] = {u - s0 * phi, q - s0 * p - s1 * phi, -s1 * p - s2 * phi, -s2 * p};

  Poly f = energy;
  Poly rr(7, 0.0);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) rr[i + j] += re_dot(r[i], r[j]);
  add_scaled(f, rr, mu_res_);
  if (multipliers_.residual.size() == u.size()) {
    Poly yr(4);
    for (int i = 0; i < 4; ++i) yr[i] = re_dot(multipliers_.residual, r[i]);
    add_scaled(f, yr, 1.0);
  }
  add_scaled(f, multiply(norm, norm), mu_norm_);
  add_scaled(f, norm, multipliers_.norm);
  if (deflation_.cols() > 0) {
    const Vector a = deflation_.adjoint() * phi;
    const Vector b = deflation_.adjoint() * p;
    add_scaled(f, Poly{a.squaredNorm(), 2.0 * a.dot(b).real(), b.squaredNorm()}, mu_orth_);
  }

  Poly df(f.size() - 1);
  for (std::size_t i = 1; i < f.size(); ++i) df[i - 1] = static_cast<double>(i) * f[i];
  double scale = 0.0;
  for (double c : df) scale = std::max(scale, std::abs(c));
  while (!df.empty() && std::abs(df.back()) <= 1e-14 * scale) df.pop_back();
  if (df.size() < 2) return 0.0;

  Eigen::VectorXd coeffs(static_cast<Eigen::Index>(df.size()));
  for (std::size_t i = 0; i < df.size(); ++i) coeffs[static_cast<Eigen::Index>(i)] = df[i];
  Eigen::PolynomialSolver<double, Eigen::Dynamic> solver(coeffs);

  const double f0 = f.front();
  double best_alpha = 0.0;
  double best_f = f0;
  for (const auto& root : solver.roots()) {
    if (std::abs(root.imag()) > 1e-6 * (1.0 + std::abs(root.real()))) continue;
    const double alpha = root.real();
    if (!(alpha > 0.0)) continue;
    const double fa = evaluate(f, alpha);
    if (fa < best_f) {
      best_f = fa;
      best_alpha = alpha;
    }
  }
  return best_alpha / pnorm;
}

double objective(const FloquetMode& mode, const FourierHamiltonian& h, const VariationalConfig& config) {
  return Lagrangian(h, mode.truncation(), config.mu_res, config.mu_norm).value(mode.coeffs());
}

Vector objective_gradient(const FloquetMode& mode, const FourierHamiltonian& h, const VariationalConfig& config) {
  Vector g;
  Lagrangian(h, mode.truncation(), config.mu_res, config.mu_norm).value_and_gradient(mode.coeffs(), g);
  return g;
}

namespace {

double normalized_residual(const Lagrangian& lag, const Vector& phi) {
  const double n = phi.norm();
  if (!(n > 0.0)) return std::numeric_limits<double>::infinity();
  return lag.residual(phi / n).norm();
}

struct Run {
  Vector phi;
  std::vector<IterationRecord> trace;
  bool converged = false;
};

// Polak-Ribiere+ conjugate gradients with exact line search on the current
// Lagrangian; returns the number of iterations used.
int inner_minimize(const Lagrangian& lag, Vector& phi, double tol, int budget) {
  Vector g;
  lag.value_and_gradient(phi, g);
  Vector d = -g;
  const int restart_every = static_cast<int>(std::min<Eigen::Index>(2 * phi.size(), 200));
  int it = 0;
  int since_restart = 0;
  while (it < budget && g.norm() > tol) {
    if (re_dot(g, d) >= 0.0 || since_restart >= restart_every) {
      d = -g;
      since_restart = 0;
    }
    double alpha = lag.line_minimum(phi, d);
    if (alpha == 0.0 && since_restart != 0) {
      d = -g;
      since_restart = 0;
      alpha = lag.line_minimum(phi, d);
    }
    ++it;
    if (alpha == 0.0) break;
    phi += alpha * d;
    Vector g_new;
    lag.value_and_gradient(phi, g_new);
    const double beta = std::max(0.0, re_dot(g_new, g_new - g) / g.squaredNorm());
    d = -g_new + beta * d;
    g = std::move(g_new);
    ++since_restart;
  }
  return it;
}

Run augmented_lagrangian(Lagrangian& lag, Vector phi, const VariationalConfig& cfg) {
  Run run;
  lag.multipliers() = {Vector::Zero(phi.size()), 0.0};
  double mu_res = cfg.mu_res;
  double mu_norm = cfg.mu_norm;
  lag.set_weights(mu_res, mu_norm);

  int used = 0;
  double previous = std::numeric_limits<double>::infinity();
  for (int outer = 0; outer < cfg.max_outer; ++outer) {
    const Vector r0 = lag.residual(phi);
    const double violation0 = std::max(r0.norm(), std::abs(phi.squaredNorm() - 1.0));
    const double tol = std::max(cfg.gradient_tol, 1e-2 * std::min(1.0, violation0));
    used += inner_minimize(lag, phi, tol, cfg.max_iterations - used);

    const Vector r = lag.residual(phi);
    const double n = phi.squaredNorm() - 1.0;
    const double violation = std::max(r.norm(), std::abs(n));
    const double res = normalized_residual(lag, phi);
    run.trace.push_back({outer, used, lag.value(phi), res, n, mu_res});
    if (res <= cfg.residual_tol) {
      run.converged = true;
      break;
    }
    if (used >= cfg.max_iterations) break;

    lag.multipliers().residual += 2.0 * mu_res * r;
    lag.multipliers().norm += 2.0 * mu_norm * n;
    if (violation > 0.25 * previous) {
      mu_res = std::min(mu_res * cfg.mu_growth, cfg.mu_max);
      mu_norm = std::min(mu_norm * cfg.mu_growth, cfg.mu_max);
      lag.set_weights(mu_res, mu_norm);
    }
    previous = violation;
  }
  run.phi = std::move(phi);
  return run;
}

Vector random_start(int dim, int truncation, double width, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector v(static_cast<Eigen::Index>(dim) * (2 * truncation + 1));
  for (int m = -truncation; m <= truncation; ++m) {
    const double envelope = std::exp(-0.5 * m * m / (width * width));
    for (int a = 0; a < dim; ++a) {
      const double re = normal(rng);
      const double im = normal(rng);
      v[static_cast<Eigen::Index>(m + truncation) * dim + a] = envelope * Complex(re, im);
    }
  }
  return v;
}

VariationalResult finish(const Run& run, const Lagrangian& lag, const FourierHamiltonian& h, int truncation,
                         const VariationalConfig& cfg) {
  VariationalResult out;
  out.mode = FloquetMode(h.dim(), truncation, run.phi).normalized();
  const Vector& psi = out.mode.coeffs();
  const double lambda = sambe::quasi_energy_functional(out.mode, h);
  out.quasi_energy = fold(lambda, h.omega());
  out.replica = static_cast<int>(std::lround((lambda - out.quasi_energy) / h.omega()));
  out.avg_energy = sambe::average_energy_functional(out.mode, h);
  out.residual = lag.residual(psi).norm();
  out.converged = run.converged && out.residual <= cfg.residual_tol;
  out.trace = run.trace;
  return out;
}

// Converged and clear of the cutoff beats converged beats unconverged; then lowest Ebar.
bool better(const VariationalResult& a, const VariationalResult& b) {
  auto rank = [](const VariationalResult& r) {
    if (!r.converged) return 2;
    return r.mode.edge_weight() <= 1e-6 ? 0 : 1;
  };
  const int ra = rank(a), rb = rank(b);
  if (ra != rb) return ra < rb;
  if (ra == 2) return a.residual < b.residual;
  return a.avg_energy < b.avg_energy - 1e-12;
}

VariationalResult minimize(const FourierHamiltonian& h, int truncation, const VariationalConfig& cfg,
                           const std::vector<FloquetMode>& found) {
  cfg.check();
  if (truncation < h.max_harmonic())
    throw TruncationError("variational: cutoff below the largest harmonic of the Hamiltonian");
  if (found.size() >= static_cast<std::size_t>(h.dim()))
    throw ConfigError("variational: all " + std::to_string(h.dim()) + " states already found");

  // Every replica of a found state that fits the window is deflated.
  std::vector<Vector> deflation;
  for (const auto& f : found) {
    const FloquetMode base = f.with_truncation(truncation).normalized();
    for (int k = -2 * truncation; k <= 2 * truncation; ++k) {
      const FloquetMode s = base.shifted(k);
      if (s.norm_squared() >= 1.0 - 1e-6) deflation.push_back(s.coeffs());
    }
  }
  const double mu_orth = cfg.mu_orth * (1.0 + energy_scale(h));
  Lagrangian lag(h, truncation, cfg.mu_res, cfg.mu_norm, mu_orth, deflation);

  // Deterministic start: next static eigenvector, stripped of found components.
  Eigen::SelfAdjointEigenSolver<Matrix> es(h.harmonic(0));
  Vector start = FloquetMode::from_static(es.eigenvectors().col(static_cast<Eigen::Index>(found.size())), truncation)
                     .coeffs();
  for (const auto& v : deflation) start -= v * v.dot(start);
  if (start.norm() < 1e-8) start = random_start(h.dim(), truncation, cfg.init_width, cfg.seed);
  start.normalize();

  VariationalResult best;
  bool have = false;
  for (int attempt = -1; attempt < cfg.restarts; ++attempt) {
    Vector phi = start;
    if (attempt >= 0) {
      phi = random_start(h.dim(), truncation, cfg.init_width, cfg.seed + static_cast<std::uint64_t>(attempt));
      for (const auto& v : deflation) phi -= v * v.dot(phi);
      phi.normalize();
    }
    const Run run = augmented_lagrangian(lag, std::move(phi), cfg);
    VariationalResult r = finish(run, lag, h, truncation, cfg);
    r.seed = cfg.seed;
    r.restart = attempt;
    if (!have || better(r, best)) {
      best = std::move(r);
      have = true;
    }
  }
  return best;
}

}  // namespace

VariationalResult minimize_ground(const FourierHamiltonian& h, int truncation, const VariationalConfig& config) {
  return minimize(h, truncation, config, {});
}

VariationalResult minimize_excited(const FourierHamiltonian& h, int truncation, const VariationalConfig& config,
                                   const std::vector<FloquetMode>& found) {
  return minimize(h, truncation, config, found);
}

}  // namespace floquet::variational
