#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "fredholm/distortion.hpp"
#include "fredholm/grid.hpp"
#include "fredholm/psf.hpp"

namespace fredholm {

/// Expanded pinhole distortion baseline:
///   x_d = (1 + k1 x + k2 y + k3 x^2 + k4 y^2) x
///   y_d = (1 + k5 x + k6 y + k7 x^2 + k8 y^2) y
struct PinholeParams {
  std::array<double, 8> k{};

  bool operator==(const PinholeParams&) const = default;
};

std::pair<double, double> pinhole_warp(const PinholeParams& params, double x,
                                       double y);

enum class FitModel { fredholm, pinhole };

struct FitOptions {
  FitModel model = FitModel::fredholm;
  int starts = 8;           // origin plus starts-1 uniform draws in the box
  double bounds = 1e-4;     // absolute box half-width per component
  double fd_step = 1e-2;    // central-difference step, scaled units
  double tol_v = 1e-10;     // stop when the relative V decrease drops below
  double tol_step = 1e-12;  // or the scaled step norm drops below
  int max_iterations = 100; // per start
  std::uint64_t seed = 7;
  double param_scale = 1e6; // internal variables are params * param_scale
  int downsample = 1;       // model renders full-res, then block-downsamples
};

struct FitReport {
  FitModel model = FitModel::fredholm;
  ThetaVector theta;        // set when model == fredholm
  PinholeParams pinhole;    // set when model == pinhole
  double value = 0.0;       // V at the optimum
  double value_per_source_flux = 0.0;  // V / (mean source flux)^2
  double value_per_total_flux = 0.0;   // V / (total flux)^2
  double lambda_hat = 0.0;
  std::optional<double> chi2;  // defined only when lambda_hat > 0
  int starts = 0;
  std::vector<double> start_values;  // V at each start point
  int iterations = 0;       // iterations spent on the winning start
  bool converged = false;
  ScalarField residue;      // observed - reconstruction
};

/// Reconstruction I'(params) on the observation grid: Fredholm renders the
/// warped-kernel image, pinhole renders every source at its warped position
/// with the undeformed reference PSF; either is block-downsampled when
/// downsample > 1.
ScalarField render_model(const PointSourceScene& scene, const ReferencePsf& psf,
                         FitModel model, std::span<const double> params,
                         int downsample = 1);

/// V = sum over pixels (observed - reconstructed)^2.
double value_function(const ScalarField& observed,
                      const PointSourceScene& scene, const ReferencePsf& psf,
                      const ThetaVector& theta, int downsample = 1);
double value_function(const ScalarField& observed,
                      const PointSourceScene& scene, const ReferencePsf& psf,
                      const PinholeParams& params, int downsample = 1);

/// lambda_hat = sum(observed - reconstructed) / (M N).
double estimate_lambda(const ScalarField& observed,
                       const ScalarField& reconstructed);

/// chi^2 = sum (observed - reconstructed - lambda_hat)^2 / (M N lambda_hat).
/// Throws std::domain_error when lambda_hat <= 0.
double chi_squared(const ScalarField& observed,
                   const ScalarField& reconstructed, double lambda_hat);

/// Multi-start bounded least-squares minimization of V. Each start runs a
/// damped Gauss-Newton (Levenberg-Marquardt) loop on scaled parameters with a
/// central finite-difference Jacobian and box-projected steps; the best final
/// V wins. The observation is assumed corrected for the sensor sampling
/// effect, with source positions and fluxes known. Starts that hit a
/// non-finite V are discarded with a warning; throws when every start fails.
FitReport fit(const ScalarField& observed, const PointSourceScene& scene,
              const ReferencePsf& psf, const FitOptions& options);

}  // namespace fredholm
