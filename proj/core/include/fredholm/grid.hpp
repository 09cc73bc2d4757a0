#pragma once

#include <cstddef>
#include <limits>
#include <vector>

namespace fredholm {

/// 2D real-valued grid stored row-major, top row first, pixel pitch 1.
///
/// Coordinates follow a centre-origin convention: pixel (row, col) sits at
/// (u, v) = (col - (width-1)/2, row - (height-1)/2), so the central pixel of
/// an odd-sized grid is exactly (0, 0) and even-sized grids place the origin
/// midway between the four central pixels.
struct ScalarField {
  int width = 0;
  int height = 0;
  std::vector<double> data;  // size width * height

  ScalarField() = default;
  ScalarField(int w, int h, double fill = 0.0);

  double& at(int row, int col) {
    return data[static_cast<std::size_t>(row) * width + col];
  }
  double at(int row, int col) const {
    return data[static_cast<std::size_t>(row) * width + col];
  }

  double u_of_col(int col) const { return col - 0.5 * (width - 1); }
  double v_of_row(int row) const { return row - 0.5 * (height - 1); }
  int col_of_u(double u) const;  // nearest pixel column
  int row_of_v(double v) const;  // nearest pixel row

  bool in_bounds(int row, int col) const {
    return row >= 0 && row < height && col >= 0 && col < width;
  }

  std::size_t size() const { return data.size(); }
  double sum() const;      // fixed left-to-right, top-to-bottom order
  double max_abs() const;
  bool all_finite() const;

  bool operator==(const ScalarField&) const = default;
};

/// Normalized sinc: sin(pi t) / (pi t) with sinc(0) = 1. Exact 0/1 at
/// integer arguments so sample reproduction is exact.
double sinc(double t);

/// Sums factor x factor blocks into one output pixel (photon-count
/// conserving). Dimensions must be divisible by factor.
ScalarField block_downsample(const ScalarField& field, int factor);

/// Window radius that always covers the whole field.
inline constexpr int kFullWindow = std::numeric_limits<int>::max();

/// Whittaker-Shannon evaluation of the band-limited image whose impulse
/// samples are `field`, at real coordinates (u, v):
///   sum_{m,n in window} I_mn sinc(u - u_n) sinc(v - v_m).
/// The window keeps samples within `truncation_radius` of (u, v) per axis;
/// out-of-range coordinates extrapolate with the same series.
double shannon_eval(const ScalarField& field, double u, double v,
                    int truncation_radius = 32);

struct PointSource {
  double x = 0.0;
  double y = 0.0;
  double flux = 0.0;
};

struct PointSourceScene {
  std::vector<PointSource> sources;
  int canvas_width = 0;
  int canvas_height = 0;
};

/// Throws std::invalid_argument unless every source lies strictly inside the
/// canvas coordinate bounds with flux >= 0.
void validate_scene(const PointSourceScene& scene);

/// Evenly spaced nx x ny source grid centred on the origin.
PointSourceScene make_grid_scene(int canvas_width, int canvas_height, int nx,
                                 int ny, double spacing, double flux);

/// Fraction of total |value| carried by the outer `ring`-pixel border.
/// Returns 0 for an all-zero field.
double border_energy_fraction(const ScalarField& field, int ring);

}  // namespace fredholm
