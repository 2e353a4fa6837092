#include "floquet/sambe.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "floquet/error.hpp"

namespace floquet {

double fold(double x, double period) {
  double r = std::fmod(x, period);
  if (r < 0.0) r += period;
  if (r >= period) r -= period;
  return r;
}

double circular_distance(double a, double b, double period) {
  const double d = fold(a - b, period);
  return std::min(d, period - d);
}

std::vector<std::vector<int>> cluster_circular(const std::vector<double>& points, double period, double tol) {
  const int n = static_cast<int>(points.size());
  std::vector<std::vector<int>> clusters;
  if (n == 0) return clusters;

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> folded(n);
  for (int i = 0; i < n; ++i) folded[i] = fold(points[i], period);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return folded[a] < folded[b]; });

  // gap_before[k]: distance from the previous sorted point (circularly) to point k.
  std::vector<double> gap_before(n);
  for (int k = 0; k < n; ++k) {
    gap_before[k] = k == 0 ? folded[order[0]] + period - folded[order[n - 1]] : folded[order[k]] - folded[order[k - 1]];
  }
  int start = -1;
  for (int k = 0; k < n; ++k) {
    if (gap_before[k] > tol) {
      start = k;
      break;
    }
  }
  if (start < 0) {
    clusters.emplace_back(order.begin(), order.end());
    return clusters;
  }
  for (int step = 0; step < n; ++step) {
    const int k = (start + step) % n;
    if (step == 0 || gap_before[k] > tol) clusters.emplace_back();
    clusters.back().push_back(order[k]);
  }
  std::stable_sort(clusters.begin(), clusters.end(), [&](const auto& a, const auto& b) {
    return folded[a.front()] < folded[b.front()];
  });
  return clusters;
}

namespace sambe {
namespace {

void require_cutoff(const FourierHamiltonian& h, int truncation) {
  if (truncation < h.max_harmonic()) {
    throw TruncationError("harmonic cutoff M=" + std::to_string(truncation) +
                          " is below the largest drive harmonic " + std::to_string(h.max_harmonic()));
  }
}

Matrix build_blocks(const FourierHamiltonian& h, int truncation, bool with_diagonal) {
  require_cutoff(h, truncation);
  const int d = h.dim();
  const int nb = 2 * truncation + 1;
  Matrix s = Matrix::Zero(static_cast<Eigen::Index>(nb) * d, static_cast<Eigen::Index>(nb) * d);
  for (int a = 0; a < nb; ++a) {
    const int m = a - truncation;
    for (const auto& [k, hk] : h.harmonics()) {
      const int b = a - k;  // m - m' = k
      if (b < 0 || b >= nb) continue;
      s.block(static_cast<Eigen::Index>(a) * d, static_cast<Eigen::Index>(b) * d, d, d) = hk;
    }
    if (with_diagonal) {
      for (int i = 0; i < d; ++i) {
        const Eigen::Index r = static_cast<Eigen::Index>(a) * d + i;
        s(r, r) += m * h.omega();
      }
    }
  }
  return s;
}

Vector apply_blocks(const FourierHamiltonian& h, const FloquetMode& mode, bool with_diagonal) {
  if (mode.dim() != h.dim()) throw ConfigError("mode and Hamiltonian dimensions differ");
  const int d = h.dim();
  const int cutoff = mode.truncation();
  const Vector& phi = mode.coeffs();
  Vector out = Vector::Zero(phi.size());
  for (int m = -cutoff; m <= cutoff; ++m) {
    auto target = out.segment(static_cast<Eigen::Index>(m + cutoff) * d, d);
    for (const auto& [k, hk] : h.harmonics()) {
      const int source = m - k;
      if (std::abs(source) > cutoff) continue;
      target.noalias() += hk * phi.segment(static_cast<Eigen::Index>(source + cutoff) * d, d);
    }
    if (with_diagonal) target += (m * h.omega()) * phi.segment(static_cast<Eigen::Index>(m + cutoff) * d, d);
  }
  return out;
}

void require_normalized(const FloquetMode& mode) {
  const double n = mode.norm_squared();
  if (std::abs(n - 1.0) > 1e-8) {
    std::ostringstream msg;
    msg << "functional requires a normalized mode (norm^2 = " << n << ")";
    throw ConfigError(msg.str());
  }
}

struct Level {
  int begin = 0;
  int end = 0;  // exclusive
  double value = 0.0;
  double mean_square_index = 0.0;
  double centroid = 0.0;
  int size() const { return end - begin; }
};

// Strict "a is a better replica level than b" with tolerant ties.
bool better_level(const Level& a, const Level& b) {
  constexpr double tie = 1e-9;
  if (std::abs(a.mean_square_index - b.mean_square_index) > tie) return a.mean_square_index < b.mean_square_index;
  if (std::abs(std::abs(a.centroid) - std::abs(b.centroid)) > tie) return std::abs(a.centroid) < std::abs(b.centroid);
  return a.value < b.value;
}

int argmax_coefficient(const Vector& v) {
  Eigen::Index index = 0;
  v.cwiseAbs().maxCoeff(&index);
  return static_cast<int>(index);
}

// Unit-modulus rotation making the largest coefficient real and positive.
void fix_phase(Vector& v) {
  const Complex c = v(argmax_coefficient(v));
  if (std::abs(c) > 0.0) v *= std::conj(c) / std::abs(c);
}

}  // namespace

Matrix build_sambe(const FourierHamiltonian& h, int truncation) { return build_blocks(h, truncation, true); }

Matrix build_average_energy(const FourierHamiltonian& h, int truncation) {
  return build_blocks(h, truncation, false);
}

Vector apply_floquet(const FourierHamiltonian& h, const FloquetMode& mode) { return apply_blocks(h, mode, true); }

Vector apply_average_energy(const FourierHamiltonian& h, const FloquetMode& mode) {
  return apply_blocks(h, mode, false);
}

RawSpectrum diagonalize(const Matrix& s) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(s);
  if (solver.info() != Eigen::Success) {
    std::ostringstream msg;
    msg << "Hermitian eigensolver did not converge (n=" << s.rows() << ", max|S_ij|=" << s.cwiseAbs().maxCoeff()
        << ", ||S-S^dagger||=" << (s - s.adjoint()).norm() << ")";
    throw ConvergenceError(msg.str());
  }
  RawSpectrum raw;
  raw.values = solver.eigenvalues();
  raw.vectors = solver.eigenvectors();
  raw.matrix_norm = raw.values.size() ? raw.values.cwiseAbs().maxCoeff() : 0.0;

  const Matrix residual = s * raw.vectors - raw.vectors * raw.values.cast<Complex>().asDiagonal();
  raw.max_residual = residual.size() ? residual.colwise().norm().maxCoeff() : 0.0;
  const double bound = 1e-10 * std::max(raw.matrix_norm, 1.0);
  if (raw.max_residual > bound) {
    std::ostringstream msg;
    msg << "eigenpair residual " << raw.max_residual << " exceeds " << bound << " (||S||=" << raw.matrix_norm << ")";
    throw ConvergenceError(msg.str());
  }
  return raw;
}

std::vector<Representative> select_representatives(const RawSpectrum& raw, const FourierHamiltonian& h,
                                                   int truncation, double tol_deg) {
  const int d = h.dim();
  const double omega = h.omega();
  const int n = static_cast<int>(raw.values.size());
  if (n != (2 * truncation + 1) * d) throw ConfigError("raw spectrum size does not match (2M+1)d");

  std::vector<double> centroid(n), mean_square(n);
  for (int j = 0; j < n; ++j) {
    double c = 0.0;
    double q = 0.0;
    for (int m = -truncation; m <= truncation; ++m) {
      const double w = raw.vectors.col(j).segment(static_cast<Eigen::Index>(m + truncation) * d, d).squaredNorm();
      c += m * w;
      q += static_cast<double>(m) * m * w;
    }
    centroid[j] = c;
    mean_square[j] = q;
  }

  std::vector<Level> levels;
  for (int j = 0; j < n;) {
    Level level;
    level.begin = j;
    int k = j + 1;
    while (k < n && raw.values(k) - raw.values(k - 1) <= tol_deg) ++k;
    level.end = k;
    for (int i = j; i < k; ++i) {
      level.value += raw.values(i);
      level.centroid += centroid[i];
      level.mean_square_index += mean_square[i];
    }
    level.value /= level.size();
    level.centroid /= level.size();
    level.mean_square_index /= level.size();
    levels.push_back(level);
    j = k;
  }

  std::vector<double> level_points;
  for (const auto& level : levels) level_points.push_back(level.value);
  const auto families = cluster_circular(level_points, omega, tol_deg);

  struct Family {
    int level = -1;
    int degeneracy = 0;
  };
  std::vector<Family> chosen;
  for (const auto& family : families) {
    Family best;
    for (int index : family) best.degeneracy = std::max(best.degeneracy, levels[index].size());
    for (int index : family) {
      if (levels[index].size() != best.degeneracy) continue;
      if (best.level < 0 || better_level(levels[index], levels[best.level])) best.level = index;
    }
    chosen.push_back(best);
  }
  std::stable_sort(chosen.begin(), chosen.end(),
                   [&](const Family& a, const Family& b) { return better_level(levels[a.level], levels[b.level]); });

  std::vector<int> columns;
  for (const auto& family : chosen) {
    if (static_cast<int>(columns.size()) >= d) break;
    const Level& level = levels[family.level];
    const double rms = std::sqrt(level.mean_square_index);
    if (static_cast<int>(columns.size()) + level.size() > d || rms > 0.5 * truncation + 0.5) {
      std::ostringstream msg;
      msg << "could not isolate " << d << " replica families at M=" << truncation
          << " (family at eps=" << fold(level.value, omega) << " has rms harmonic index " << rms
          << "); increase the harmonic cutoff";
      throw TruncationError(msg.str());
    }
    for (int j = level.begin; j < level.end; ++j) columns.push_back(j);
  }
  if (static_cast<int>(columns.size()) != d) {
    throw TruncationError("found " + std::to_string(columns.size()) + " of " + std::to_string(d) +
                          " replica families at M=" + std::to_string(truncation) + "; increase the harmonic cutoff");
  }

  std::vector<Representative> reps;
  for (int j : columns) {
    Representative rep;
    rep.mode = FloquetMode(d, truncation, raw.vectors.col(j)).normalized();
    rep.branch = raw.values(j);
    rep.quasi_energy = fold(rep.branch, omega);
    rep.raw_index = j;
    reps.push_back(std::move(rep));
  }
  std::stable_sort(reps.begin(), reps.end(), [](const Representative& a, const Representative& b) {
    if (a.quasi_energy != b.quasi_energy) return a.quasi_energy < b.quasi_energy;
    return a.raw_index < b.raw_index;
  });
  return reps;
}

std::vector<DegenerateGroup> group_degeneracies(const std::vector<Representative>& reps, double omega,
                                                double tol_deg) {
  std::vector<double> points;
  for (const auto& rep : reps) points.push_back(rep.quasi_energy);
  std::vector<DegenerateGroup> groups;
  for (const auto& cluster : cluster_circular(points, omega, tol_deg)) {
    DegenerateGroup group;
    group.members = cluster;
    group.quasi_energy = reps[cluster.front()].quasi_energy;
    const double reference = reps[cluster.front()].branch;
    for (int member : cluster) {
      group.shifts.push_back(static_cast<int>(std::lround((reference - reps[member].branch) / omega)));
    }
    groups.push_back(std::move(group));
  }
  return groups;
}

namespace {

std::vector<FloquetMode> aligned_members(const DegenerateGroup& group, const std::vector<Representative>& reps) {
  std::vector<FloquetMode> modes;
  for (std::size_t i = 0; i < group.members.size(); ++i) {
    const int shift = i < group.shifts.size() ? group.shifts[i] : 0;
    const FloquetMode& mode = reps.at(group.members[i]).mode;
    modes.push_back(shift == 0 ? mode : mode.shifted(shift));
  }
  return modes;
}

}  // namespace

Matrix average_energy_block(const DegenerateGroup& group, const std::vector<Representative>& reps,
                            const FourierHamiltonian& h) {
  const auto modes = aligned_members(group, reps);
  const int k = static_cast<int>(modes.size());
  Matrix block(k, k);
  for (int j = 0; j < k; ++j) {
    const Vector kphi = apply_average_energy(h, modes[j]);
    for (int i = 0; i < k; ++i) block(i, j) = modes[i].coeffs().dot(kphi);
  }
  return 0.5 * (block + block.adjoint());
}

Spectrum resolve_degeneracies(std::vector<DegenerateGroup> groups, const std::vector<Representative>& reps,
                              const FourierHamiltonian& h, int truncation, double tol_deg) {
  const double omega = h.omega();
  Spectrum spectrum;
  spectrum.meta.dim = h.dim();
  spectrum.meta.omega = omega;
  spectrum.meta.truncation = truncation;
  spectrum.meta.tol_deg = tol_deg;
  spectrum.meta.solver = "dense Hermitian eigendecomposition (Eigen SelfAdjointEigenSolver)";
  spectrum.meta.model_hash = model_hash(h);

  for (std::size_t g = 0; g < groups.size(); ++g) {
    auto& group = groups[g];
    if (group.block.size() == 0) group.block = average_energy_block(group, reps, h);
    const auto modes = aligned_members(group, reps);
    const int k = static_cast<int>(modes.size());

    Eigen::SelfAdjointEigenSolver<Matrix> solver(group.block);
    if (solver.info() != Eigen::Success) throw ConvergenceError("average-energy block diagonalization failed");
    const Eigen::VectorXd& ebar = solver.eigenvalues();
    for (int a = 1; a < k; ++a) {
      if (ebar(a) - ebar(a - 1) <= tol_deg) spectrum.meta.avg_energy_degenerate = true;
    }

    for (int a = 0; a < k; ++a) {
      Vector coeffs = Vector::Zero(modes.front().size());
      for (int i = 0; i < k; ++i) coeffs += solver.eigenvectors()(i, a) * modes[i].coeffs();
      fix_phase(coeffs);
      FloquetMode mode = FloquetMode(h.dim(), truncation, std::move(coeffs)).normalized();

      const Vector sphi = apply_floquet(h, mode);
      const double lambda = mode.coeffs().dot(sphi).real();
      EigenTriplet triplet;
      triplet.quasi_energy = fold(lambda, omega);
      triplet.replica = static_cast<int>(std::lround((lambda - triplet.quasi_energy) / omega));
      triplet.avg_energy = mode.coeffs().dot(apply_average_energy(h, mode)).real();
      triplet.residual = (sphi - lambda * mode.coeffs()).norm();
      triplet.group = static_cast<int>(g);
      triplet.mode = std::move(mode);
      spectrum.meta.max_residual = std::max(spectrum.meta.max_residual, triplet.residual);
      spectrum.triplets.push_back(std::move(triplet));
    }
  }

  order_spectrum(spectrum);
  return spectrum;
}

void order_spectrum(Spectrum& spectrum) {
  const double tol = spectrum.meta.tol_deg;
  auto& t = spectrum.triplets;
  const int n = static_cast<int>(t.size());
  std::vector<int> tie_key(n);
  for (int i = 0; i < n; ++i) tie_key[i] = argmax_coefficient(t[i].mode.coeffs());

  // Ebar first; runs of Ebar within tol by quasi-energy, then by the index of
  // the largest coefficient.
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return t[a].avg_energy < t[b].avg_energy; });
  for (int i = 0; i < n;) {
    int j = i + 1;
    while (j < n && t[order[j]].avg_energy - t[order[j - 1]].avg_energy <= tol) ++j;
    if (j - i > 1) {
      std::stable_sort(order.begin() + i, order.begin() + j,
                       [&](int a, int b) { return t[a].quasi_energy < t[b].quasi_energy; });
      for (int p = i; p < j;) {
        int q = p + 1;
        while (q < j && t[order[q]].quasi_energy - t[order[q - 1]].quasi_energy <= tol) ++q;
        std::stable_sort(order.begin() + p, order.begin() + q,
                         [&](int a, int b) { return tie_key[a] < tie_key[b]; });
        p = q;
      }
    }
    i = j;
  }
  std::vector<EigenTriplet> sorted;
  sorted.reserve(n);
  for (int index : order) sorted.push_back(std::move(t[index]));
  t = std::move(sorted);
}

double quasi_energy_functional(const FloquetMode& mode, const FourierHamiltonian& h) {
  require_normalized(mode);
  return mode.coeffs().dot(apply_floquet(h, mode)).real();
}

double average_energy_functional(const FloquetMode& mode, const FourierHamiltonian& h) {
  require_normalized(mode);
  return mode.coeffs().dot(apply_average_energy(h, mode)).real();
}

Spectrum solve_at(const FourierHamiltonian& h, int truncation, double tol_deg) {
  const RawSpectrum raw = diagonalize(build_sambe(h, truncation));
  const auto reps = select_representatives(raw, h, truncation, tol_deg);
  auto groups = group_degeneracies(reps, h.omega(), tol_deg);
  Spectrum spectrum = resolve_degeneracies(std::move(groups), reps, h, truncation, tol_deg);
  spectrum.meta.max_residual = std::max(spectrum.meta.max_residual, raw.max_residual);
  return spectrum;
}

double quasi_energy_shift(const Spectrum& a, const Spectrum& b) {
  const double omega = a.meta.omega;
  double worst = 0.0;
  for (const auto& ta : a.triplets) {
    double nearest = omega;
    for (const auto& tb : b.triplets) {
      nearest = std::min(nearest, circular_distance(ta.quasi_energy, tb.quasi_energy, omega));
    }
    worst = std::max(worst, nearest);
  }
  return worst;
}

Spectrum solve(const FourierHamiltonian& h, const SolveOptions& options) {
  const double tol_deg = options.tol_deg.value_or(1e-8 * h.omega());
  if (!(tol_deg >= 0.0)) throw ConfigError("degeneracy tolerance must be non-negative");
  if (options.truncation) return solve_at(h, *options.truncation, tol_deg);

  int cutoff = std::max({options.initial_truncation, h.max_harmonic(), 1});
  std::optional<Spectrum> previous;
  std::string last_failure;
  while (true) {
    std::optional<Spectrum> current;
    try {
      current = solve_at(h, cutoff, tol_deg);
    } catch (const TruncationError& e) {
      last_failure = e.what();
    }
    if (previous && current) {
      const double change = quasi_energy_shift(*previous, *current);
      if (change < options.convergence_tol) {
        current->meta.truncation_change = change;
        return *current;
      }
      last_failure = "quasi-energies still moved by " + std::to_string(change);
    }
    previous = std::move(current);
    if (2 * cutoff > options.max_truncation) break;
    cutoff *= 2;
  }
  throw ConvergenceError("harmonic cutoff did not converge up to M=" + std::to_string(cutoff) + ": " + last_failure);
}

}  // namespace sambe
}  // namespace floquet
