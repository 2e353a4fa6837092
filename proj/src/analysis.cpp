#include "floquet/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <numeric>
#include <thread>
#include <tuple>

#include "floquet/error.hpp"

namespace floquet::analysis {

TruncatedSpectrum order_and_truncate(const Spectrum& spectrum, const Keep& keep) {
  if (keep.count.has_value() == keep.threshold.has_value())
    throw ConfigError("truncate: give exactly one of a state count or an average-energy threshold");
  if (keep.count && *keep.count <= 0) throw ConfigError("truncate: keep must be positive");

  std::vector<EigenTriplet> ordered = spectrum.triplets;
  Spectrum copy{ordered, spectrum.meta};
  sambe::order_spectrum(copy);
  ordered = std::move(copy.triplets);

  std::size_t n = ordered.size();
  if (keep.count) {
    n = std::min(n, static_cast<std::size_t>(*keep.count));
  } else {
    n = 0;
    while (n < ordered.size() && ordered[n].avg_energy <= *keep.threshold) ++n;
  }

  TruncatedSpectrum out;
  out.rule = keep;
  out.meta = spectrum.meta;
  out.kept.assign(ordered.begin(), ordered.begin() + static_cast<std::ptrdiff_t>(n));
  out.discarded = static_cast<int>(ordered.size() - n);
  out.lowest_discarded = n < ordered.size() ? ordered[n].avg_energy : std::numeric_limits<double>::quiet_NaN();
  return out;
}

double captured_weight(const TruncatedSpectrum& truncated, const Vector& psi) {
  double w = 0.0;
  for (const auto& t : truncated.kept) {
    if (t.mode.dim() != psi.size()) throw ConfigError("captured_weight: state dimension mismatch");
    w += std::norm(t.mode.at_time(0.0, truncated.meta.omega).dot(psi));
  }
  return w;
}

double aligned_overlap(const EigenTriplet& a, const EigenTriplet& b, double omega) {
  const int k = static_cast<int>(std::lround((a.branch(omega) - b.branch(omega)) / omega));
  return std::min(1.0, std::abs(inner(a.mode, b.mode.shifted(k))));
}

namespace {

void check_compatible(const Spectrum& a, const Spectrum& b) {
  if (a.meta.dim != b.meta.dim || a.triplets.size() != b.triplets.size())
    throw ConfigError("overlap: spectra have different dimensions");
  if (std::abs(a.meta.omega - b.meta.omega) > 1e-12 * std::max(1.0, a.meta.omega))
    throw ConfigError("overlap: spectra have different drive frequencies");
}

}  // namespace

Eigen::MatrixXd overlap_matrix(const Spectrum& a, const Spectrum& b) {
  check_compatible(a, b);
  const auto n = static_cast<Eigen::Index>(a.triplets.size());
  Eigen::MatrixXd o(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) o(i, j) = aligned_overlap(a.triplets[i], b.triplets[j], a.meta.omega);
  return o;
}

double label_distance(const EigenTriplet& a, const EigenTriplet& b, double omega) {
  const double de = circular_distance(a.quasi_energy, b.quasi_energy, omega) / omega;
  const double db = (a.avg_energy - b.avg_energy) / omega;
  return std::hypot(de, db);
}

namespace {

// Globally greedy assignment: repeatedly take the closest unassigned pair.
template <class Distance>
std::vector<int> greedy_pairing(const Spectrum& a, const Spectrum& b, Distance distance) {
  const int n = static_cast<int>(a.triplets.size());
  std::vector<std::tuple<double, int, int>> candidates;
  candidates.reserve(static_cast<std::size_t>(n) * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) candidates.emplace_back(distance(a.triplets[i], b.triplets[j]), i, j);
  std::sort(candidates.begin(), candidates.end());

  std::vector<int> partner(n, -1);
  std::vector<char> used(n, 0);
  int assigned = 0;
  for (const auto& [d, i, j] : candidates) {
    if (partner[i] >= 0 || used[j]) continue;
    partner[i] = j;
    used[j] = 1;
    if (++assigned == n) break;
  }
  return partner;
}

}  // namespace

std::vector<int> pair_by_label(const Spectrum& a, const Spectrum& b) {
  check_compatible(a, b);
  const double omega = a.meta.omega;
  return greedy_pairing(a, b, [omega](const auto& x, const auto& y) { return label_distance(x, y, omega); });
}

std::vector<int> pair_by_quasi_energy(const Spectrum& a, const Spectrum& b) {
  check_compatible(a, b);
  auto order = [](const Spectrum& s) {
    std::vector<int> idx(s.triplets.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(),
                     [&](int x, int y) { return s.triplets[x].quasi_energy < s.triplets[y].quasi_energy; });
    return idx;
  };
  const auto oa = order(a), ob = order(b);
  std::vector<int> partner(a.triplets.size());
  for (std::size_t r = 0; r < oa.size(); ++r) partner[oa[r]] = ob[r];
  return partner;
}

double TrackingReport::min_overlap(Pairing p) const {
  double v = 1.0;
  for (const auto& r : rows) v = std::min(v, p == Pairing::label ? r.overlap_label : r.overlap_qorder);
  return v;
}

double TrackingReport::max_overlap(Pairing p) const {
  double v = 0.0;
  for (const auto& r : rows) v = std::max(v, p == Pairing::label ? r.overlap_label : r.overlap_qorder);
  return v;
}

TrackingReport perturb_and_track(const FourierHamiltonian& h, const FourierHamiltonian& v, double strength,
                                 const sambe::SolveOptions& options, const std::string& description) {
  if (v.dim() != h.dim() || std::abs(v.omega() - h.omega()) > 1e-12 * h.omega())
    throw ConfigError("perturb: perturbation must share dimension and omega with the model");
  if (!(strength >= 0.0) || strength > 1e-3 * h.omega())
    throw ConfigError("perturb: strength must lie in [0, 1e-3 omega]");

  const Spectrum base = sambe::solve(h, options);
  const int m = base.meta.truncation;
  const Spectrum moved = sambe::solve_at(h.plus(v.scaled(strength)), m, base.meta.tol_deg);
  if (moved.meta.truncation != m) throw TruncationError("perturb: the two solves used different cutoffs");

  const auto by_q = pair_by_quasi_energy(base, moved);
  const auto by_label = pair_by_label(base, moved);
  const double omega = h.omega();

  TrackingReport report;
  report.perturbation = description;
  report.strength = strength;
  report.truncation = m;
  for (std::size_t i = 0; i < base.triplets.size(); ++i) {
    const auto& t0 = base.triplets[i];
    const auto& tl = moved.triplets[by_label[i]];
    TrackingRow row;
    row.state = static_cast<int>(i);
    row.eps0 = t0.quasi_energy;
    row.ebar0 = t0.avg_energy;
    row.eps = tl.quasi_energy;
    row.ebar = tl.avg_energy;
    row.partner_qorder = by_q[i];
    row.partner_label = by_label[i];
    row.overlap_qorder = aligned_overlap(t0, moved.triplets[by_q[i]], omega);
    row.overlap_label = aligned_overlap(t0, tl, omega);
    report.rows.push_back(row);
  }
  return report;
}

Fixture degenerate_pair_fixture() {
  const double omega = 0.5;
  FourierHamiltonian h = builtin_model({"static", {{"e0", 0.0}, {"e1", 1.0}, {"omega", omega}}});
  HamiltonianData vd{2, omega, {}};
  vd.harmonics[0] = Matrix::Zero(2, 2);
  vd.harmonics[0](0, 0) = 1.0;
  return {std::move(h), FourierHamiltonian(vd), 1e-6 * omega, "degenerate_pair"};
}

std::vector<std::string> fixture_names() { return {"degenerate_pair"}; }

Fixture fixture(const std::string& name) {
  if (name == "degenerate_pair") return degenerate_pair_fixture();
  throw ConfigError("unknown fixture '" + name + "'");
}

std::vector<double> linspace(double from, double to, int count) {
  if (count < 1) throw ConfigError("sweep: count must be >= 1");
  std::vector<double> out(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) out[i] = count == 1 ? from : from + (to - from) * i / (count - 1);
  return out;
}

std::vector<SweepPoint> sweep(const std::function<FourierHamiltonian(double)>& make, const std::vector<double>& values,
                              const sambe::SolveOptions& options) {
  std::vector<SweepPoint> points(values.size());
  auto run = [&](std::size_t i) {
    SweepPoint p;
    p.lambda = values[i];
    try {
      p.spectrum = sambe::solve(make(values[i]), options);
    } catch (const std::exception& e) {
      p.error = e.what();
    }
    return p;
  };

  const std::size_t width = std::max(1u, std::thread::hardware_concurrency());
  for (std::size_t start = 0; start < values.size(); start += width) {
    std::vector<std::future<SweepPoint>> batch;
    for (std::size_t i = start; i < std::min(values.size(), start + width); ++i)
      batch.push_back(std::async(std::launch::async, run, i));
    for (std::size_t k = 0; k < batch.size(); ++k) points[start + k] = batch[k].get();
  }

  const SweepPoint* previous = nullptr;
  for (auto& p : points) {
    if (!p.spectrum) continue;
    const std::size_t n = p.spectrum->triplets.size();
    p.identity.resize(n);
    // A changed state count (a swept site number) starts a fresh labelling.
    if (!previous || previous->spectrum->triplets.size() != n) {
      std::iota(p.identity.begin(), p.identity.end(), 0);
    } else {
      // omega may be the swept parameter, so compare eps as a fraction of its own zone.
      const double wa = previous->spectrum->meta.omega, wb = p.spectrum->meta.omega;
      const auto partner = greedy_pairing(*previous->spectrum, *p.spectrum, [&](const auto& x, const auto& y) {
        const double de = circular_distance(x.quasi_energy / wa, y.quasi_energy / wb, 1.0);
        return std::hypot(de, 2.0 * (x.avg_energy - y.avg_energy) / (wa + wb));
      });
      for (std::size_t i = 0; i < n; ++i) p.identity[partner[i]] = previous->identity[i];
    }
    previous = &p;
  }
  return points;
}

RitzFunctional::RitzFunctional(const Spectrum& spectrum, int max_shift)
    : truncation_(spectrum.meta.truncation), max_shift_(max_shift < 0 ? spectrum.meta.truncation / 2 : max_shift) {
  const auto count = static_cast<Eigen::Index>(spectrum.triplets.size()) * (2 * max_shift_ + 1);
  const auto size = static_cast<Eigen::Index>(spectrum.meta.dim) * (2 * truncation_ + 1);
  basis_.resize(size, count);
  energies_.resize(count);
  Eigen::Index col = 0;
  for (const auto& t : spectrum.triplets) {
    const FloquetMode base = t.mode.with_truncation(truncation_);
    for (int k = -max_shift_; k <= max_shift_; ++k, ++col) {
      basis_.col(col) = base.shifted(k).coeffs();
      energies_[col] = t.avg_energy;
    }
  }
}

RitzFunctional::Value RitzFunctional::operator()(const FloquetMode& mode) const {
  const FloquetMode trial = mode.with_truncation(truncation_).normalized();
  const Eigen::VectorXd w = (basis_.adjoint() * trial.coeffs()).cwiseAbs2();
  Value v;
  v.captured = w.sum();
  if (!(v.captured > 0.0)) throw ConfigError("Ritz functional: trial has no weight on the physical replicas");
  v.energy = w.dot(energies_) / v.captured;
  return v;
}

MixtureEnergies mixture_energies(const Spectrum& spectrum, const FourierHamiltonian& h, const Matrix& weights) {
  if (weights.rows() != static_cast<Eigen::Index>(spectrum.triplets.size()) || weights.cols() % 2 == 0)
    throw ConfigError("mixture: weights need one row per state and an odd number of replica columns");
  const int reach = static_cast<int>(weights.cols() / 2);
  const int m = spectrum.meta.truncation;

  FloquetMode mix = FloquetMode::zero(h.dim(), m);
  double total = 0.0, resolved = 0.0;
  for (Eigen::Index n = 0; n < weights.rows(); ++n) {
    const auto& t = spectrum.triplets[n];
    for (int k = -reach; k <= reach; ++k) {
      const Complex c = weights(n, k + reach);
      mix.coeffs() += c * t.mode.with_truncation(m).shifted(k).coeffs();
      total += std::norm(c);
      resolved += std::norm(c) * t.avg_energy;
    }
  }
  if (!(total > 0.0)) throw ConfigError("mixture: weights must not all vanish");
  return {sambe::average_energy_functional(mix.normalized(), h), resolved / total};
}

double phase_commutator_norm(const Spectrum& spectrum, const FourierHamiltonian& h) {
  const auto n = static_cast<Eigen::Index>(spectrum.triplets.size());
  Matrix g = Matrix::Zero(n, n);
  std::vector<Vector> k_modes;
  for (const auto& t : spectrum.triplets) k_modes.push_back(sambe::apply_average_energy(h, t.mode));
  for (Eigen::Index a = 0; a < n; ++a) {
    for (Eigen::Index b = 0; b < n; ++b) {
      if (spectrum.triplets[a].group != spectrum.triplets[b].group) continue;
      g(a, b) = spectrum.triplets[a].mode.coeffs().dot(k_modes[b]);
    }
  }
  Vector phase(n);
  for (Eigen::Index a = 0; a < n; ++a)
    phase[a] = std::exp(Complex(0.0, -spectrum.triplets[a].quasi_energy * h.period()));
  const Matrix d = phase.asDiagonal();
  return (g * d - d * g).norm();
}

double instantaneous_ground_average(const FourierHamiltonian& h, int intervals) {
  if (intervals < 2 || intervals % 2 != 0) throw ConfigError("Simpson rule needs an even number of intervals");
  const double period = h.period();
  double sum = 0.0;
  for (int k = 0; k <= intervals; ++k) {
    const double t = period * k / intervals;
    const double e = Eigen::SelfAdjointEigenSolver<Matrix>(h.eval(t), Eigen::EigenvaluesOnly).eigenvalues()[0];
    const double w = (k == 0 || k == intervals) ? 1.0 : (k % 2 == 1 ? 4.0 : 2.0);
    sum += w * e;
  }
  return sum / (3.0 * intervals);
}

}  // namespace floquet::analysis
