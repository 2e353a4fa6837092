#pragma once

// Hand-rolled generators for the property tests. Each takes an explicit
// engine so that failures reproduce from the printed seed.

#include <cmath>
#include <cstdint>
#include <random>

#include "floquet/mode.hpp"

namespace support {

using Engine = std::mt19937_64;

inline floquet::Complex gaussian(Engine& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  const double re = n(rng);
  return {re, n(rng)};
}

inline floquet::Vector random_vector(Engine& rng, Eigen::Index n) {
  floquet::Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = gaussian(rng);
  return v;
}

/// Normalized mode with every harmonic populated.
inline floquet::FloquetMode random_mode(Engine& rng, int dim, int truncation) {
  floquet::FloquetMode m(dim, truncation, random_vector(rng, static_cast<Eigen::Index>(2 * truncation + 1) * dim));
  return m.normalized();
}

/// Normalized mode whose weight falls off as exp(-(m / width)^2) around `centre`.
inline floquet::FloquetMode localized_mode(Engine& rng, int dim, int truncation, double width, int centre = 0) {
  floquet::FloquetMode m = floquet::FloquetMode::zero(dim, truncation);
  for (int k = -truncation; k <= truncation; ++k) {
    const double env = std::exp(-0.5 * std::pow((k - centre) / width, 2));
    m.coeffs().segment(static_cast<Eigen::Index>(k + truncation) * dim, dim) = env * random_vector(rng, dim);
  }
  return m.normalized();
}

/// Haar-ish random unitary from the QR of a complex Gaussian matrix.
inline floquet::Matrix random_unitary(Engine& rng, int n) {
  floquet::Matrix a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = gaussian(rng);
  Eigen::HouseholderQR<floquet::Matrix> qr(a);
  floquet::Matrix q = qr.householderQ();
  return q;
}

}  // namespace support
