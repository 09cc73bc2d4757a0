#include "fredholm/grid.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace fredholm {

ScalarField::ScalarField(int w, int h, double fill)
    : width(w), height(h) {
  if (w < 0 || h < 0) throw std::invalid_argument("negative field dimensions");
  data.assign(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), fill);
}

int ScalarField::col_of_u(double u) const {
  return static_cast<int>(std::lround(u + 0.5 * (width - 1)));
}

int ScalarField::row_of_v(double v) const {
  return static_cast<int>(std::lround(v + 0.5 * (height - 1)));
}

double ScalarField::sum() const {
  double total = 0.0;
  for (double v : data) total += v;
  return total;
}

double ScalarField::max_abs() const {
  double peak = 0.0;
  for (double v : data) peak = std::max(peak, std::abs(v));
  return peak;
}

bool ScalarField::all_finite() const {
  return std::all_of(data.begin(), data.end(),
                     [](double v) { return std::isfinite(v); });
}

double sinc(double t) {
  if (t == std::nearbyint(t)) return t == 0.0 ? 1.0 : 0.0;
  const double pt = std::numbers::pi * t;
  return std::sin(pt) / pt;
}

ScalarField block_downsample(const ScalarField& field, int factor) {
  if (factor < 1) throw std::invalid_argument("downsample factor must be >= 1");
  if (field.width % factor != 0 || field.height % factor != 0) {
    throw std::invalid_argument(
        "field dimensions " + std::to_string(field.width) + "x" +
        std::to_string(field.height) + " not divisible by factor " +
        std::to_string(factor));
  }
  if (factor == 1) return field;
  ScalarField out(field.width / factor, field.height / factor);
  for (int row = 0; row < out.height; ++row) {
    for (int col = 0; col < out.width; ++col) {
      double block = 0.0;
      for (int r = row * factor; r < (row + 1) * factor; ++r) {
        for (int c = col * factor; c < (col + 1) * factor; ++c) {
          block += field.at(r, c);
        }
      }
      out.at(row, col) = block;
    }
  }
  return out;
}

double shannon_eval(const ScalarField& field, double u, double v,
                    int truncation_radius) {
  if (truncation_radius < 1) {
    throw std::invalid_argument("truncation_radius must be >= 1");
  }
  // Column/row ranges covering |u - u_n| <= radius, clamped to the field.
  const double c_center = u + 0.5 * (field.width - 1);
  const double r_center = v + 0.5 * (field.height - 1);
  const double radius = static_cast<double>(truncation_radius);
  const auto clamp_lo = [](double x, int n) {
    if (x < 0) return 0;
    if (x > n - 1) return n - 1;
    return static_cast<int>(std::ceil(x));
  };
  const auto clamp_hi = [](double x, int n) {
    if (x < 0) return 0;
    if (x > n - 1) return n - 1;
    return static_cast<int>(std::floor(x));
  };
  const int c0 = clamp_lo(c_center - radius, field.width);
  const int c1 = clamp_hi(c_center + radius, field.width);
  const int r0 = clamp_lo(r_center - radius, field.height);
  const int r1 = clamp_hi(r_center + radius, field.height);
  if (c0 > c1 || r0 > r1) return 0.0;

  std::vector<double> su(static_cast<std::size_t>(c1 - c0 + 1));
  for (int c = c0; c <= c1; ++c) su[c - c0] = sinc(u - field.u_of_col(c));
  double total = 0.0;
  for (int r = r0; r <= r1; ++r) {
    const double sv = sinc(v - field.v_of_row(r));
    if (sv == 0.0) continue;
    double row_sum = 0.0;
    for (int c = c0; c <= c1; ++c) row_sum += field.at(r, c) * su[c - c0];
    total += sv * row_sum;
  }
  return total;
}

void validate_scene(const PointSourceScene& scene) {
  if (scene.canvas_width < 1 || scene.canvas_height < 1) {
    throw std::invalid_argument("scene canvas must be at least 1x1");
  }
  const double ubound = 0.5 * (scene.canvas_width - 1);
  const double vbound = 0.5 * (scene.canvas_height - 1);
  for (std::size_t s = 0; s < scene.sources.size(); ++s) {
    const PointSource& src = scene.sources[s];
    if (!(src.flux >= 0.0)) {
      throw std::invalid_argument("source " + std::to_string(s) +
                                  " has negative flux");
    }
    if (!(std::abs(src.x) < ubound) || !(std::abs(src.y) < vbound)) {
      throw std::invalid_argument("source " + std::to_string(s) + " at (" +
                                  std::to_string(src.x) + ", " +
                                  std::to_string(src.y) +
                                  ") lies outside the canvas bounds");
    }
  }
}

PointSourceScene make_grid_scene(int canvas_width, int canvas_height, int nx,
                                 int ny, double spacing, double flux) {
  PointSourceScene scene;
  scene.canvas_width = canvas_width;
  scene.canvas_height = canvas_height;
  scene.sources.reserve(static_cast<std::size_t>(nx) * ny);
  for (int iy = 0; iy < ny; ++iy) {
    for (int ix = 0; ix < nx; ++ix) {
      PointSource src;
      src.x = (ix - 0.5 * (nx - 1)) * spacing;
      src.y = (iy - 0.5 * (ny - 1)) * spacing;
      src.flux = flux;
      scene.sources.push_back(src);
    }
  }
  validate_scene(scene);
  return scene;
}

double border_energy_fraction(const ScalarField& field, int ring) {
  if (ring < 1) return 0.0;
  double total = 0.0;
  double border = 0.0;
  for (int row = 0; row < field.height; ++row) {
    const bool row_edge = row < ring || row >= field.height - ring;
    for (int col = 0; col < field.width; ++col) {
      const double mag = std::abs(field.at(row, col));
      total += mag;
      if (row_edge || col < ring || col >= field.width - ring) border += mag;
    }
  }
  return total > 0.0 ? border / total : 0.0;
}

}  // namespace fredholm
