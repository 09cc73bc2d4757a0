#pragma once

#include <memory>
#include <vector>

#include "fredholm/grid.hpp"

namespace fredholm {

/// Sine integral Si(z) = integral_0^z sin(t)/t dt, adaptive Gauss-Kronrod
/// quadrature, absolute error <= 1e-13. Odd: Si(-z) = -Si(z) exactly.
double sine_integral(double z);

/// Symmetric Toeplitz matrix R with R_mi = integral sinc(x - i) H(m - x) dx,
/// where H is the unit rectangle. Entries depend only on the lag d = m - i:
///   R(d) = (1/pi) [Si(pi (d + 1/2)) - Si(pi (d - 1/2))].
/// Links impulse samples I of a band-limited image to the sensor-recorded
/// image via sensed = R * I * R.
class SamplingMatrix {
 public:
  static SamplingMatrix build(int size);

  /// Assembles a matrix from a precomputed lag profile (cache loads, tests).
  static SamplingMatrix from_lag_profile(std::vector<double> lags);

  int size() const { return static_cast<int>(lags_.size()); }
  double lag(int d) const { return lags_[d < 0 ? -d : d]; }
  double entry(int m, int i) const { return lag(m - i); }
  const std::vector<double>& lag_profile() const { return lags_; }

  /// Dense N x N copy for inspection or export.
  ScalarField to_field() const;

  /// Reciprocal condition estimate of the factorization.
  double rcond() const;

  ScalarField apply_both_sides(const ScalarField& image) const;  // R * I * R
  ScalarField solve_both_sides(const ScalarField& image) const;  // R^-1 I R^-1

  /// Left/right application for rectangular images.
  static ScalarField apply(const SamplingMatrix& rows,
                           const ScalarField& image,
                           const SamplingMatrix& cols);
  static ScalarField solve(const SamplingMatrix& rows,
                           const ScalarField& image,
                           const SamplingMatrix& cols);

 private:
  explicit SamplingMatrix(std::vector<double> lags);

  std::vector<double> lags_;
  struct Impl;
  std::shared_ptr<const Impl> impl_;  // dense matrix + factorization
};

/// Image a physical sensor records given impulse samples of a band-limited
/// image: sensed = R_rows * I * R_cols. Warns when the border-energy check
/// fails (border values should be around 0).
ScalarField sensor_sample(const ScalarField& ideal, const SamplingMatrix& r);
ScalarField sensor_sample(const ScalarField& ideal,
                          const SamplingMatrix& r_rows,
                          const SamplingMatrix& r_cols);

/// Recovers impulse samples from a sensor image: I = R^-1 sensed R^-1,
/// computed with factorized solves. Throws when the matrix condition
/// estimate exceeds 1e12.
ScalarField correct_sampling(const ScalarField& sensed,
                             const SamplingMatrix& r);
ScalarField correct_sampling(const ScalarField& sensed,
                             const SamplingMatrix& r_rows,
                             const SamplingMatrix& r_cols);

}  // namespace fredholm
