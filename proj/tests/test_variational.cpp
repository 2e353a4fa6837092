#include <doctest.h>

#include <chrono>
#include <cmath>

#include "floquet/error.hpp"
#include "floquet/variational.hpp"
#include "support/random.hpp"
#include "support/rotating_frame.hpp"

using namespace floquet;
using namespace floquet::variational;

namespace {

FourierHamiltonian static_model(double e0, double e1, double omega) {
  return builtin_model({"static", {{"e0", e0}, {"e1", e1}, {"omega", omega}}});
}

double overlap(const FloquetMode& a, const FloquetMode& b) { return std::abs(inner(a, b)); }

// |<<a|shift_k b>>| maximized over the replica shift.
double best_overlap(const FloquetMode& a, const FloquetMode& b) {
  double best = 0.0;
  for (int k = -a.truncation(); k <= a.truncation(); ++k) best = std::max(best, overlap(a, b.shifted(k)));
  return best;
}

}  // namespace

TEST_CASE("objective at an exact ground triplet is its average energy") {
  const auto h = static_model(0.0, 1.0, 0.7);
  const auto s = sambe::solve_at(h, 4, 1e-8);
  CHECK(std::abs(objective(s.ground().mode, h, {}) - 0.0) < 1e-14);
  CHECK(std::abs(objective(s.triplets[1].mode, h, {}) - 1.0) < 1e-14);
}

TEST_CASE("doubling a normalized eigenmode: 4 Ebar + 36 lambda^2 mu_res + 9 mu_norm") {
  VariationalConfig cfg;
  cfg.mu_res = 0.3;
  cfg.mu_norm = 2.0;
  for (const auto& name : builtin_names()) {
    CAPTURE(name);
    const auto h = builtin_model({name, {}});
    const auto s = sambe::solve_at(h, 10, 1e-8 * h.omega());
    for (const auto& t : s.triplets) {
      FloquetMode twice = t.mode;
      twice.coeffs() *= 2.0;
      const double lambda = t.branch(h.omega());
      const double expected = 4 * t.avg_energy + 36 * lambda * lambda * cfg.mu_res + 9 * cfg.mu_norm;
      CHECK(std::abs(objective(twice, h, cfg) - expected) < 1e-8 * (1 + std::abs(expected)));
    }
  }
}

TEST_CASE("objective at random normalized modes stays above the ground energy") {
  // The residual penalty must dominate: the objective dips O(1/mu_res) below
  // Ebar_0 near the ground state, so the strict bound needs a stiff penalty.
  VariationalConfig cfg;
  cfg.mu_res = 1e8;
  const auto h = builtin_model({"two_level_circular", {}});
  const double e0 = sambe::solve(h).ground().avg_energy;
  support::Engine rng(41);
  for (int trial = 0; trial < 500; ++trial) {
    const auto m = trial % 2 == 0 ? support::random_mode(rng, 2, 6) : support::localized_mode(rng, 2, 6, 0.7);
    CHECK(objective(m, h, cfg) >= e0 - 1e-9);
  }
}

TEST_CASE("objective at feasible points equals their average energy and is bounded by Ebar_0") {
  // Feasible points are normalized eigenmodes of the truncated Floquet matrix.
  support::Engine rng(43);
  for (const auto& name : builtin_names()) {
    CAPTURE(name);
    const auto h = builtin_model({name, {}});
    const auto s = sambe::solve(h);
    const int M = s.meta.truncation;
    for (const auto& t : s.triplets) {
      for (int k = -M / 2; k <= M / 2; ++k) {
        const double f = objective(t.mode.shifted(k), h, {});
        CHECK(f >= s.ground().avg_energy - 1e-9);
        CHECK(std::abs(f - t.avg_energy) < 1e-8);
      }
    }
  }
}

TEST_CASE("analytic gradient matches central differences") {
  support::Engine rng(47);
  VariationalConfig cfg;
  cfg.mu_res = 1.7;
  cfg.mu_norm = 0.6;
  const double step = 1e-6;
  for (const auto& name : builtin_names()) {
    CAPTURE(name);
    const auto h = builtin_model({name, {}});
    for (int trial = 0; trial < 20; ++trial) {
      const auto m = support::localized_mode(rng, h.dim(), 3, 1.5);
      const Vector g = objective_gradient(m, h, cfg);
      for (Eigen::Index i = 0; i < m.size(); ++i) {
        for (int part = 0; part < 2; ++part) {
          const Complex dir = part == 0 ? Complex(1.0, 0.0) : Complex(0.0, 1.0);
          FloquetMode up = m;
          FloquetMode down = m;
          up.coeffs()[i] += step * dir;
          down.coeffs()[i] -= step * dir;
          const double fd = (objective(up, h, cfg) - objective(down, h, cfg)) / (2 * step);
          // df = Re(conj(g) dphi)
          const double analytic = part == 0 ? g[i].real() : g[i].imag();
          CHECK(std::abs(fd - analytic) <= 1e-5 * std::max(1.0, std::abs(analytic)));
        }
      }
    }
  }
}

TEST_CASE("Lagrangian gradient with multipliers and deflation") {
  support::Engine rng(53);
  const auto h = builtin_model({"two_level_linear", {}});
  const int M = 3;
  Lagrangian lag(h, M, 2.0, 1.0, 5.0, {support::random_mode(rng, 2, M).coeffs()});
  lag.multipliers().residual = support::random_vector(rng, 2 * (2 * M + 1));
  lag.multipliers().norm = 0.4;
  const Vector phi = support::random_mode(rng, 2, M).coeffs();
  Vector g;
  const double f = lag.value_and_gradient(phi, g);
  CHECK(f == doctest::Approx(lag.value(phi)).epsilon(1e-14));
  const Vector p = support::random_vector(rng, phi.size());
  const double step = 1e-6;
  const double fd = (lag.value(phi + step * p) - lag.value(phi - step * p)) / (2 * step);
  CHECK(std::abs(fd - g.dot(p).real()) < 1e-6 * std::max(1.0, std::abs(fd)));

  // Exact line search: no sampled alpha does better.
  const Vector dir = -g;
  const double alpha = lag.line_minimum(phi, dir);
  CHECK(alpha > 0.0);
  const double best = lag.value(phi + alpha * dir);
  for (double a = 0.0; a <= 4 * alpha; a += alpha / 50) CHECK(lag.value(phi + a * dir) >= best - 1e-12);
}

TEST_CASE("ground states by minimization") {
  SUBCASE("static") {
    const auto r = minimize_ground(static_model(0.0, 1.0, 0.7), 4);
    CHECK(r.converged);
    CHECK(std::abs(r.quasi_energy) < 1e-8);
    CHECK(std::abs(r.avg_energy) < 1e-8);
  }
  SUBCASE("circular") {
    const support::RotatingFrame rf;
    const auto r = minimize_ground(builtin_model({"two_level_circular", {}}), 8);
    CHECK(r.converged);
    CHECK(std::abs(r.avg_energy - rf.avg_energy(+1)) < 1e-6);
    CHECK(std::abs(r.quasi_energy - rf.quasi_energy(+1)) < 1e-6);
    CHECK(best_overlap(r.mode, rf.mode(+1, 8)) > 1 - 1e-5);
    CHECK(r.residual <= 1e-8);
  }
  SUBCASE("degenerate pair lands on the resolved state, not a mixture") {
    const auto r = minimize_ground(static_model(0.0, 1.0, 0.5), 4);
    CHECK(r.converged);
    CHECK(std::abs(r.avg_energy) < 1e-8);
  }
}

TEST_CASE("excited states by deflation") {
  SUBCASE("static") {
    const auto h = static_model(0.0, 1.0, 0.7);
    const auto g = minimize_ground(h, 4);
    const auto e = minimize_excited(h, 4, {}, {g.mode});
    CHECK(e.converged);
    CHECK(std::abs(e.quasi_energy - 0.3) < 1e-8);
    CHECK(std::abs(e.avg_energy - 1.0) < 1e-8);
  }
  SUBCASE("degenerate pair") {
    const auto h = static_model(0.0, 1.0, 0.5);
    const auto g = minimize_ground(h, 4);
    const auto e = minimize_excited(h, 4, {}, {g.mode});
    CHECK(e.converged);
    CHECK(std::abs(e.avg_energy - 1.0) < 1e-8);
    CHECK(std::abs(fold(e.quasi_energy + 1e-12, 0.5)) < 1e-8);
  }
  SUBCASE("circular") {
    const support::RotatingFrame rf;
    const auto h = builtin_model({"two_level_circular", {}});
    const auto g = minimize_ground(h, 8);
    const auto e = minimize_excited(h, 8, {}, {g.mode});
    CHECK(e.converged);
    CHECK(std::abs(e.avg_energy - rf.avg_energy(-1)) < 1e-6);
  }
}

TEST_CASE("minimization agrees with diagonalization on every built-in") {
  for (const auto& name : builtin_names()) {
    CAPTURE(name);
    const auto h = builtin_model({name, {}});
    const auto s = sambe::solve(h);
    const auto r = minimize_ground(h, s.meta.truncation);
    CHECK(r.converged);
    CHECK(std::abs(r.avg_energy - s.ground().avg_energy) <= 1e-6);
    CHECK(best_overlap(r.mode, s.ground().mode) >= 1 - 1e-5);
  }
}

TEST_CASE("an iteration budget of one reports non-convergence with a trace") {
  VariationalConfig cfg;
  cfg.max_iterations = 1;
  cfg.restarts = 1;
  const auto r = minimize_ground(builtin_model({"two_level_circular", {}}), 8, cfg);
  CHECK_FALSE(r.converged);
  CHECK_FALSE(r.trace.empty());
  CHECK(r.residual > 1e-8);
}

TEST_CASE("seeded runs are reproducible") {
  VariationalConfig cfg;
  cfg.seed = 99;
  const auto h = builtin_model({"two_level_linear", {}});
  const auto a = minimize_ground(h, 8, cfg);
  const auto b = minimize_ground(h, 8, cfg);
  CHECK(a.mode.coeffs() == b.mode.coeffs());
  CHECK(a.restart == b.restart);
  CHECK(a.trace.size() == b.trace.size());
}

TEST_CASE("invalid schedules are rejected") {
  VariationalConfig cfg;
  cfg.mu_res = 0.0;
  CHECK_THROWS_AS(cfg.check(), ConfigError);
  cfg = {};
  cfg.max_iterations = 0;
  CHECK_THROWS_AS(cfg.check(), ConfigError);
  cfg = {};
  cfg.mu_growth = 1.0;
  CHECK_THROWS_AS(minimize_ground(builtin_model({"static", {}}), 2, cfg), ConfigError);
}
