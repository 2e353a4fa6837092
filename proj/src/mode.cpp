#include "floquet/mode.hpp"

#include <cmath>

#include "floquet/error.hpp"

namespace floquet {

FloquetMode::FloquetMode(int dim, int truncation, Vector coeffs)
    : dim_(dim), truncation_(truncation), coeffs_(std::move(coeffs)) {
  if (dim < 1 || truncation < 0) throw ConfigError("FloquetMode needs dim >= 1 and truncation >= 0");
  if (coeffs_.size() != static_cast<Eigen::Index>(2 * truncation + 1) * dim) {
    throw ConfigError("FloquetMode coefficient vector has the wrong length");
  }
}

FloquetMode FloquetMode::zero(int dim, int truncation) {
  return FloquetMode(dim, truncation, Vector::Zero(static_cast<Eigen::Index>(2 * truncation + 1) * dim));
}

FloquetMode FloquetMode::from_static(const Vector& state, int truncation) {
  FloquetMode mode = zero(static_cast<int>(state.size()), truncation);
  mode.coeffs_.segment(static_cast<Eigen::Index>(truncation) * state.size(), state.size()) = state;
  return mode;
}

Vector FloquetMode::block(int m) const {
  if (std::abs(m) > truncation_) return Vector::Zero(dim_);
  return coeffs_.segment(static_cast<Eigen::Index>(m + truncation_) * dim_, dim_);
}

double FloquetMode::norm_squared() const { return coeffs_.squaredNorm(); }

double FloquetMode::centroid() const {
  double weighted = 0.0;
  double total = 0.0;
  for (int m = -truncation_; m <= truncation_; ++m) {
    const double w = coeffs_.segment(static_cast<Eigen::Index>(m + truncation_) * dim_, dim_).squaredNorm();
    weighted += m * w;
    total += w;
  }
  return total > 0.0 ? weighted / total : 0.0;
}

double FloquetMode::edge_weight() const {
  const double total = norm_squared();
  if (total == 0.0) return 0.0;
  double edge = coeffs_.head(dim_).squaredNorm();
  if (truncation_ > 0) edge += coeffs_.tail(dim_).squaredNorm();
  return edge / total;
}

FloquetMode FloquetMode::normalized() const {
  const double n = std::sqrt(norm_squared());
  if (n == 0.0) throw ConfigError("cannot normalize a zero Floquet mode");
  return FloquetMode(dim_, truncation_, coeffs_ / n);
}

FloquetMode FloquetMode::shifted(int k) const {
  FloquetMode out = zero(dim_, truncation_);
  for (int m = -truncation_; m <= truncation_; ++m) {
    const int source = m - k;
    if (std::abs(source) > truncation_) continue;
    out.coeffs_.segment(static_cast<Eigen::Index>(m + truncation_) * dim_, dim_) =
        coeffs_.segment(static_cast<Eigen::Index>(source + truncation_) * dim_, dim_);
  }
  return out;
}

FloquetMode FloquetMode::with_truncation(int truncation) const {
  FloquetMode out = zero(dim_, truncation);
  const int common = std::min(truncation, truncation_);
  for (int m = -common; m <= common; ++m) {
    out.coeffs_.segment(static_cast<Eigen::Index>(m + truncation) * dim_, dim_) =
        coeffs_.segment(static_cast<Eigen::Index>(m + truncation_) * dim_, dim_);
  }
  return out;
}

Vector FloquetMode::at_time(double t, double omega) const {
  Vector out = Vector::Zero(dim_);
  for (int m = -truncation_; m <= truncation_; ++m) {
    out += std::polar(1.0, m * omega * t) *
           coeffs_.segment(static_cast<Eigen::Index>(m + truncation_) * dim_, dim_);
  }
  return out;
}

Complex inner(const FloquetMode& a, const FloquetMode& b) {
  if (a.dim() != b.dim()) throw ConfigError("Floquet inner product of modes with different dimensions");
  if (a.truncation() == b.truncation()) return a.coeffs().dot(b.coeffs());
  const int common = std::min(a.truncation(), b.truncation());
  return a.with_truncation(common).coeffs().dot(b.with_truncation(common).coeffs());
}

}  // namespace floquet
