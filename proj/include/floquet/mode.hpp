#pragma once

#include "floquet/model.hpp"

namespace floquet {

/// A T-periodic state stored by its Fourier coefficients.
///
/// Sign convention, used everywhere in this library:
///
///     Phi(t) = sum_{m=-M..M} phi^(m) exp(+i m omega t)
///
/// With H(t) = sum_k H_k exp(+i k omega t) the Floquet operator H - i d/dt
/// then has blocks (m, m') = H_{m-m'} + m omega delta_{mm'}, and shifting the
/// coefficients up by one harmonic (shifted(1)) raises the quasi-energy by
/// exactly omega.
///
/// Coefficients are stored block-major: entry (m + M) * dim + a holds
/// component a of phi^(m).
class FloquetMode {
 public:
  FloquetMode() = default;
  FloquetMode(int dim, int truncation, Vector coeffs);

  static FloquetMode zero(int dim, int truncation);
  /// A static state placed in the m = 0 block.
  static FloquetMode from_static(const Vector& state, int truncation);

  int dim() const { return dim_; }
  int truncation() const { return truncation_; }
  int blocks() const { return 2 * truncation_ + 1; }
  Eigen::Index size() const { return coeffs_.size(); }

  const Vector& coeffs() const { return coeffs_; }
  Vector& coeffs() { return coeffs_; }

  /// phi^(m) for |m| <= M.
  Vector block(int m) const;

  /// Floquet-space norm squared, sum_m <phi^(m)|phi^(m)> = (1/T) int |Phi(t)|^2 dt.
  double norm_squared() const;
  /// Fourier-weight centroid sum_m m |phi^(m)|^2 / norm_squared.
  double centroid() const;
  /// Weight in the outermost |m| = M blocks, relative to the total.
  double edge_weight() const;

  FloquetMode normalized() const;
  /// Replica shift: phi'^(m) = phi^(m-k), i.e. Phi'(t) = exp(i k omega t) Phi(t).
  /// Weight pushed beyond |m| = M is dropped.
  FloquetMode shifted(int k) const;
  /// Same state with cutoff M' (zero-padded or cropped).
  FloquetMode with_truncation(int truncation) const;

  /// Phi(t) in the instantaneous Hilbert space.
  Vector at_time(double t, double omega) const;

 private:
  int dim_ = 0;
  int truncation_ = 0;
  Vector coeffs_;
};

/// Floquet inner product <<a|b>> = (1/T) int <a(t)|b(t)> dt.
/// Modes with different cutoffs are compared on the common harmonic range.
Complex inner(const FloquetMode& a, const FloquetMode& b);

}  // namespace floquet
