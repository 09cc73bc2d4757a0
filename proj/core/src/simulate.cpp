#include "fredholm/simulate.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numbers>
#include <optional>
#include <random>
#include <stdexcept>
#include <vector>

#include "fredholm/log.hpp"
#include "fredholm/parallel.hpp"

namespace fredholm {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double canonical(std::mt19937_64& engine) {
  return static_cast<double>(engine() >> 11) * 0x1.0p-53;
}

// Knuth product sampler, exact for moderate lambda; larger rates are split
// into independent chunks (sums of Poissons are Poisson).
std::int64_t poisson_draw(std::mt19937_64& engine, double lambda) {
  std::int64_t total = 0;
  while (lambda > 0.0) {
    const double chunk = std::min(lambda, 60.0);
    lambda -= chunk;
    const double limit = std::exp(-chunk);
    double product = canonical(engine);
    std::int64_t count = 0;
    while (product > limit) {
      ++count;
      product *= canonical(engine);
    }
    total += count;
  }
  return total;
}

// Bound on |f|, |g| over the canvas for one source, from a coarse sample
// grid. Inflated so the render window never clips kernel support.
double warp_margin(const DistortionSpec& spec, const ScalarField& canvas,
                   double x, double y) {
  if (std::holds_alternative<NoDistortion>(spec)) return 0.0;
  const double umax = 0.5 * (canvas.width - 1);
  const double vmax = 0.5 * (canvas.height - 1);
  double peak = 0.0;
  constexpr int kGrid = 9;
  for (int a = 0; a < kGrid; ++a) {
    for (int b = 0; b < kGrid; ++b) {
      const double u = -umax + 2.0 * umax * a / (kGrid - 1);
      const double v = -vmax + 2.0 * vmax * b / (kGrid - 1);
      const auto [f, g] = distortion_shift(spec, u, v, x, y);
      peak = std::max({peak, std::abs(f), std::abs(g)});
    }
  }
  const double diag = std::hypot(canvas.width, canvas.height);
  return std::min(1.5 * peak + 2.0, diag);
}

// Per-source evaluator for the fixed 12-parameter basis:
//   f = u (t1 x + t5 x^2 + t3 x u) + v (t2 x + t6 x^2 + t4 x v).
// Collapsing the object-plane factors per source makes the shift a handful
// of flops per pixel, which dominates the estimator's inner loop.
struct ThetaShift {
  double fu, fv, fuu, fvv;
  double gu, gv, guu, gvv;

  ThetaShift(const ThetaVector& theta, double x) {
    const double x2 = x * x;
    const auto& t = theta.theta;
    fu = t[0] * x + t[4] * x2;
    fv = t[1] * x + t[5] * x2;
    fuu = t[2] * x;
    fvv = t[3] * x;
    gu = t[6] * x + t[10] * x2;
    gv = t[7] * x + t[11] * x2;
    guu = t[8] * x;
    gvv = t[9] * x;
  }

  std::pair<double, double> operator()(double u, double v) const {
    return {u * (fu + fuu * u) + v * (fv + fvv * v),
            u * (gu + guu * u) + v * (gv + gvv * v)};
  }
};

// Renders one source's kernel into a window buffer, normalizes the window
// sum to the source flux, and adds it to the canvas. The normalization
// enforces the imaging model's flux-conservation constraint (the kernel
// integrates to 1 for every source position): warps deform the kernel, and
// without it the rendered flux would drift at first order in the warp
// gradients.
template <typename ShiftFn, typename PsfEval>
void accumulate_source(ScalarField& out, const PointSource& src,
                       const ShiftFn& shift, double support, double margin,
                       bool radial_cutoff, const PsfEval& eval) {
  const double reach = support + margin;
  const int col_lo = std::max(
      0, static_cast<int>(std::ceil(src.x - reach + 0.5 * (out.width - 1))));
  const int col_hi = std::min(
      out.width - 1,
      static_cast<int>(std::floor(src.x + reach + 0.5 * (out.width - 1))));
  const int row_lo = std::max(
      0, static_cast<int>(std::ceil(src.y - reach + 0.5 * (out.height - 1))));
  const int row_hi = std::min(
      out.height - 1,
      static_cast<int>(std::floor(src.y + reach + 0.5 * (out.height - 1))));
  if (col_lo > col_hi || row_lo > row_hi) return;

  const int win_w = col_hi - col_lo + 1;
  const int win_h = row_hi - row_lo + 1;
  std::vector<double> window(static_cast<std::size_t>(win_w) * win_h, 0.0);
  const double support_sq = support * support;
  parallel_for(0, win_h, [&](int wrow) {
    const int row = row_lo + wrow;
    const double v = out.v_of_row(row);
    double* line = window.data() + static_cast<std::size_t>(wrow) * win_w;
    for (int col = col_lo; col <= col_hi; ++col) {
      const double u = out.u_of_col(col);
      const auto [f, g] = shift(u, v);
      const double du = u - src.x + f;
      const double dv = v - src.y + g;
      if (radial_cutoff && du * du + dv * dv > support_sq) continue;
      line[col - col_lo] = eval(du, dv);
    }
  });
  double total = 0.0;
  for (double value : window) total += value;  // fixed order
  if (!(total > 0.0)) return;
  const double scale = src.flux / total;
  parallel_for(0, win_h, [&](int wrow) {
    const int row = row_lo + wrow;
    const double* line = window.data() + static_cast<std::size_t>(wrow) * win_w;
    for (int col = col_lo; col <= col_hi; ++col) {
      out.at(row, col) += scale * line[col - col_lo];
    }
  });
}

template <typename PsfEval>
void accumulate_with_distortion(ScalarField& out, const PointSource& src,
                                const DistortionSpec& spec,
                                const std::optional<ThetaVector>& theta,
                                double support, double margin,
                                bool radial_cutoff, const PsfEval& eval) {
  if (std::holds_alternative<NoDistortion>(spec)) {
    accumulate_source(
        out, src, [](double, double) { return std::pair{0.0, 0.0}; }, support,
        margin, radial_cutoff, eval);
  } else if (theta) {
    accumulate_source(out, src, ThetaShift(*theta, src.x), support, margin,
                      radial_cutoff, eval);
  } else {
    accumulate_source(
        out, src,
        [&](double u, double v) {
          return distortion_shift(spec, u, v, src.x, src.y);
        },
        support, margin, radial_cutoff, eval);
  }
}

ScalarField render_sources(int width, int height,
                           const std::vector<PointSource>& sources,
                           const ReferencePsf& psf,
                           const DistortionSpec& distortion) {
  ScalarField out(width, height);
  const double support = psf_support_radius(psf);
  // Polynomials in the fixed basis get the collapsed per-source evaluator.
  std::optional<ThetaVector> theta;
  if (const auto* poly = std::get_if<DistortionPolynomial>(&distortion)) {
    theta = polynomial_to_theta(*poly);
  }
  // Sources accumulate in index order so the result is identical for any
  // thread budget; rows within one source window are independent.
  if (const auto* gaussian = std::get_if<GaussianPsf>(&psf)) {
    const double s2 = gaussian->sigma * gaussian->sigma;
    const double norm = 1.0 / (2.0 * std::numbers::pi * s2);
    const auto eval = [s2, norm](double du, double dv) {
      return norm * std::exp(-(du * du + dv * dv) / (2.0 * s2));
    };
    for (const PointSource& src : sources) {
      const double margin = warp_margin(distortion, out, src.x, src.y);
      accumulate_with_distortion(out, src, distortion, theta, support, margin,
                                 true, eval);
    }
  } else {
    const TabulatedPsf& table = std::get<TabulatedPsf>(psf);
    const auto eval = [&table](double du, double dv) {
      return tabulated_psf_eval(table, du, dv);
    };
    for (const PointSource& src : sources) {
      const double margin = warp_margin(distortion, out, src.x, src.y);
      accumulate_with_distortion(out, src, distortion, theta, support, margin,
                                 false, eval);
    }
  }
  return out;
}

}  // namespace

std::pair<double, double> distortion_shift(const DistortionSpec& spec,
                                           double u, double v, double x,
                                           double y) {
  if (std::holds_alternative<NoDistortion>(spec)) return {0.0, 0.0};
  if (const auto* poly = std::get_if<DistortionPolynomial>(&spec)) {
    return {eval_f(*poly, u, v, x, y), eval_g(*poly, u, v, x, y)};
  }
  const auto& log_spec = std::get<LogarithmicDistortion>(spec);
  const double radial = std::log1p(log_spec.scale * (u * u + v * v));
  return {log_spec.cf * x * radial, log_spec.cg * y * radial};
}

ScalarField render_fredholm(const PointSourceScene& scene,
                            const ReferencePsf& psf,
                            const DistortionSpec& distortion) {
  if (scene.canvas_width < 1 || scene.canvas_height < 1) {
    throw std::invalid_argument("scene canvas must be at least 1x1");
  }
  const double support = psf_support_radius(psf);
  int clipped = 0;
  for (const PointSource& src : scene.sources) {
    if (std::abs(src.x) + support > 0.5 * (scene.canvas_width - 1) ||
        std::abs(src.y) + support > 0.5 * (scene.canvas_height - 1)) {
      ++clipped;
    }
  }
  static std::atomic<bool> warned{false};
  if (clipped > 0 && !warned.exchange(true)) {
    log::warn("render_fredholm: " + std::to_string(clipped) +
              " source(s) have kernel support reaching the canvas border; "
              "the image will not be border-quiet (reported once)");
  }
  return render_sources(scene.canvas_width, scene.canvas_height, scene.sources,
                        psf, distortion);
}

ScalarField render_extended(const ScalarField& object, const ReferencePsf& psf,
                            const DistortionSpec& distortion) {
  std::vector<PointSource> sources;
  sources.reserve(object.size());
  for (int row = 0; row < object.height; ++row) {
    for (int col = 0; col < object.width; ++col) {
      const double flux = object.at(row, col);
      if (flux == 0.0) continue;
      sources.push_back({object.u_of_col(col), object.v_of_row(row), flux});
    }
  }
  return render_sources(object.width, object.height, sources, psf, distortion);
}

ScalarField add_poisson_noise(const ScalarField& image,
                              const NoiseSpec& noise) {
  if (!(noise.lambda >= 0.0)) {
    throw std::invalid_argument("noise lambda must be >= 0");
  }
  for (double v : image.data) {
    if (v < 0.0) {
      throw std::invalid_argument(
          "add_poisson_noise requires non-negative pixels");
    }
  }
  if (noise.lambda == 0.0) return image;

  ScalarField out = image;
  const std::uint64_t base = splitmix64(noise.seed);
  parallel_for(0, image.height, [&](int row) {
    std::mt19937_64 engine(splitmix64(base + static_cast<std::uint64_t>(row)));
    for (int col = 0; col < image.width; ++col) {
      out.at(row, col) +=
          static_cast<double>(poisson_draw(engine, noise.lambda));
    }
  });
  return out;
}

ScalarField render_downsampled_scene(const PointSourceScene& scene,
                                     const ReferencePsf& psf,
                                     const DistortionSpec& distortion,
                                     int factor) {
  if (factor < 1) throw std::invalid_argument("downsample factor must be >= 1");
  if (scene.canvas_width % factor != 0 || scene.canvas_height % factor != 0) {
    throw std::invalid_argument("canvas not divisible by downsample factor");
  }
  ScalarField full = render_fredholm(scene, psf, distortion);
  if (factor == 1) return full;
  return block_downsample(full, factor);
}

}  // namespace fredholm
