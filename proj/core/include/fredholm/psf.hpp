#pragma once

#include <variant>

#include "fredholm/grid.hpp"

namespace fredholm {

/// Analytic circular Gaussian reference PSF, unit integral.
struct GaussianPsf {
  double sigma = 1.0;
};

/// Tabulated reference PSF on a fine grid of pitch 1/upsample_factor coarse
/// pixels. Values are density samples (photons per unit pixel area); the
/// anchor records the field position the table was extracted at.
struct TabulatedPsf {
  ScalarField table;        // fine grid, (factor*W) x (factor*H)
  int upsample_factor = 1;  // fine samples per coarse pixel
  double anchor_x = 0.0;
  double anchor_y = 0.0;
};

using ReferencePsf = std::variant<GaussianPsf, TabulatedPsf>;

/// p(u, v) = 1 / (2 pi sigma^2) exp(-(u^2 + v^2) / (2 sigma^2)).
double gaussian_psf_eval(double sigma, double u, double v);

/// Photon count a unit-square pixel centred at (pu, pv) collects from a
/// Gaussian spot of the given total flux centred at (cx, cy):
///   flux * prod_axes 1/2 [erf((t + 1/2 - c)/(sigma sqrt 2))
///                         - erf((t - 1/2 - c)/(sigma sqrt 2))].
/// Independent closed form for the sensor-sampling pipeline.
double pixel_integrated_gaussian(double sigma, double pu, double pv, double cx,
                                 double cy, double flux);

/// Odd `window`-sided crop around the source nearest to (cx, cy) (an even
/// request is widened by one), background floor subtracted (median of the
/// crop perimeter) and flux-normalized to sum 1. Throws when the crop leaves
/// the image or a neighbouring peak is detected inside the window.
ScalarField extract_reference_psf(const ScalarField& image, double cx,
                                  double cy, int window);

/// Whittaker-Shannon interpolation of the table onto a factor-times finer
/// grid, computed by zero-padding the discrete spectrum. Original samples are
/// reproduced at coarse positions; sum * pitch^2 is preserved, i.e.
/// sum(fine) = factor^2 * sum(coarse) up to rounding.
ScalarField upsample_psf_frequency(const ScalarField& psf, int factor);

/// Bilinear lookup of the fine table at displacement (du, dv) from the table
/// centre, in coarse-pixel units. Returns 0 outside the table support.
double tabulated_psf_eval(const TabulatedPsf& psf, double du, double dv);

/// Density of the reference PSF at displacement (du, dv) from its centre.
double psf_eval(const ReferencePsf& psf, double du, double dv);

/// Radius beyond which the PSF is treated as 0 (8 sigma for Gaussians, the
/// table half-extent for tables).
double psf_support_radius(const ReferencePsf& psf);

}  // namespace fredholm
