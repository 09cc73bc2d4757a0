#pragma once

#include <cstdint>
#include <utility>
#include <variant>

#include "fredholm/distortion.hpp"
#include "fredholm/grid.hpp"
#include "fredholm/psf.hpp"

namespace fredholm {

struct NoDistortion {};

/// f = cf * x * log(1 + scale (u^2 + v^2)), g = cg * y * log(1 + scale (u^2
/// + v^2)). Non-polynomial test distortion; scale >= 0.
struct LogarithmicDistortion {
  double cf = 1.0;
  double cg = 1.0;
  double scale = 0.0;
};

using DistortionSpec =
    std::variant<NoDistortion, DistortionPolynomial, LogarithmicDistortion>;

/// (f, g) displacement the spec adds to the reference-PSF arguments.
std::pair<double, double> distortion_shift(const DistortionSpec& spec,
                                           double u, double v, double x,
                                           double y);

/// Additive Poisson background: P(n) = lambda^n / n! exp(-lambda) per pixel.
/// Identical seed + lambda always produce the identical noise field.
struct NoiseSpec {
  double lambda = 0.0;
  std::uint64_t seed = 0;
};

/// Renders the distorted observation
///   I(u, v) = sum_s flux_s p(u - x_s + f(u,v,x_s,y_s), v - y_s + g(...))
/// at every pixel centre. Each source's kernel is normalized to unit sum
/// over its support window, enforcing the model's flux-conservation
/// constraint under warping. Pixels with all sources beyond the PSF support
/// cutoff are exactly 0. Deterministic for any thread budget.
ScalarField render_fredholm(const PointSourceScene& scene,
                            const ReferencePsf& psf,
                            const DistortionSpec& distortion);

/// Same imaging sum over a rasterized extended object (one impulse per
/// nonzero object pixel). Experimental; not exercised by the main pipeline.
ScalarField render_extended(const ScalarField& object, const ReferencePsf& psf,
                            const DistortionSpec& distortion);

/// Adds a Poisson(lambda) draw to every pixel. The generator is a
/// std::mt19937_64 engine with per-row substreams derived from the seed via
/// splitmix64, feeding an exact Knuth product sampler; streams are portable
/// across platforms. lambda = 0 returns the input unchanged. Throws on
/// negative input pixels.
ScalarField add_poisson_noise(const ScalarField& image, const NoiseSpec& noise);

/// render_fredholm at full resolution followed by block_downsample; flux is
/// conserved exactly. Canvas must be divisible by factor.
ScalarField render_downsampled_scene(const PointSourceScene& scene,
                                     const ReferencePsf& psf,
                                     const DistortionSpec& distortion,
                                     int factor);

}  // namespace fredholm
