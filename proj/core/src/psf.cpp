#include "fredholm/psf.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include <fftw3.h>

#include "fredholm/log.hpp"

namespace fredholm {
namespace {

std::mutex& fftw_mutex() {
  static std::mutex m;
  return m;
}

struct FftwBuffer {
  fftw_complex* data = nullptr;
  explicit FftwBuffer(std::size_t n) {
    data = fftw_alloc_complex(n);
    if (!data) throw std::bad_alloc();
  }
  ~FftwBuffer() { fftw_free(data); }
  FftwBuffer(const FftwBuffer&) = delete;
  FftwBuffer& operator=(const FftwBuffer&) = delete;
};

void run_dft_2d(int h, int w, fftw_complex* in, fftw_complex* out, int sign) {
  fftw_plan plan;
  {
    std::lock_guard lock(fftw_mutex());
    plan = fftw_plan_dft_2d(h, w, in, out, sign, FFTW_ESTIMATE);
  }
  if (!plan) throw std::runtime_error("fftw plan creation failed");
  fftw_execute(plan);
  std::lock_guard lock(fftw_mutex());
  fftw_destroy_plan(plan);
}

// Spectral bin placements when a length-n axis is zero-padded to fine_n.
// The Nyquist bin of an even axis splits into two half-weight copies so the
// interpolant stays real.
struct BinTarget {
  int index;
  double weight;
};

std::vector<std::vector<BinTarget>> axis_bin_map(int n, int fine_n) {
  std::vector<std::vector<BinTarget>> map(static_cast<std::size_t>(n));
  const int half = n / 2;
  for (int k = 0; k < n; ++k) {
    if (n % 2 == 0 && k == half) {
      map[k] = {{half, 0.5}, {fine_n - half, 0.5}};
    } else if (k <= (n - 1) / 2) {
      map[k] = {{k, 1.0}};
    } else {
      map[k] = {{fine_n - (n - k), 1.0}};
    }
  }
  return map;
}

}  // namespace

double gaussian_psf_eval(double sigma, double u, double v) {
  const double s2 = sigma * sigma;
  return std::exp(-(u * u + v * v) / (2.0 * s2)) /
         (2.0 * std::numbers::pi * s2);
}

double pixel_integrated_gaussian(double sigma, double pu, double pv, double cx,
                                 double cy, double flux) {
  const double inv = 1.0 / (sigma * std::numbers::sqrt2);
  const double fx =
      0.5 * (std::erf((pu + 0.5 - cx) * inv) - std::erf((pu - 0.5 - cx) * inv));
  const double fy =
      0.5 * (std::erf((pv + 0.5 - cy) * inv) - std::erf((pv - 0.5 - cy) * inv));
  return flux * fx * fy;
}

ScalarField extract_reference_psf(const ScalarField& image, double cx,
                                  double cy, int window) {
  if (window < 3) throw std::invalid_argument("extraction window must be >= 3");
  if (window % 2 == 0) window += 1;  // keep the peak on a pixel centre
  const int half = window / 2;
  const int row_c = image.row_of_v(cy);
  const int col_c = image.col_of_u(cx);
  if (row_c - half < 0 || row_c + half >= image.height || col_c - half < 0 ||
      col_c + half >= image.width) {
    throw std::invalid_argument(
        "extraction window of " + std::to_string(window) + " px around (" +
        std::to_string(cx) + ", " + std::to_string(cy) +
        ") extends past the image border");
  }

  ScalarField crop(window, window);
  for (int r = 0; r < window; ++r) {
    for (int c = 0; c < window; ++c) {
      crop.at(r, c) = image.at(row_c - half + r, col_c - half + c);
    }
  }

  // Background floor: median of the crop perimeter.
  std::vector<double> perimeter;
  perimeter.reserve(static_cast<std::size_t>(4 * (window - 1)));
  for (int c = 0; c < window; ++c) {
    perimeter.push_back(crop.at(0, c));
    perimeter.push_back(crop.at(window - 1, c));
  }
  for (int r = 1; r + 1 < window; ++r) {
    perimeter.push_back(crop.at(r, 0));
    perimeter.push_back(crop.at(r, window - 1));
  }
  const auto mid = perimeter.begin() + perimeter.size() / 2;
  std::nth_element(perimeter.begin(), mid, perimeter.end());
  const double floor = *mid;
  for (double& v : crop.data) v -= floor;

  // Reject crops contaminated by a neighbouring source: any strict local
  // maximum above a quarter of the peak that sits away from the centre.
  const double peak = *std::max_element(crop.data.begin(), crop.data.end());
  const int exclusion = std::max(2, window / 8);
  std::string offenders;
  for (int r = 1; r + 1 < window; ++r) {
    for (int c = 1; c + 1 < window; ++c) {
      const double v = crop.at(r, c);
      if (v < 0.25 * peak) continue;
      if (std::max(std::abs(r - half), std::abs(c - half)) <= exclusion) {
        continue;
      }
      bool is_max = true;
      for (int dr = -1; dr <= 1 && is_max; ++dr) {
        for (int dc = -1; dc <= 1; ++dc) {
          if (dr == 0 && dc == 0) continue;
          if (crop.at(r + dr, c + dc) >= v) {
            is_max = false;
            break;
          }
        }
      }
      if (is_max) {
        offenders += (offenders.empty() ? "" : ", ");
        offenders += "(" + std::to_string(image.u_of_col(col_c - half + c)) +
                     ", " + std::to_string(image.v_of_row(row_c - half + r)) +
                     ")";
      }
    }
  }
  if (!offenders.empty()) {
    throw std::runtime_error(
        "extraction window contains neighbouring peaks at " + offenders);
  }

  const double total = crop.sum();
  if (!(total > 0.0)) {
    throw std::runtime_error(
        "extraction window holds no positive flux after background "
        "subtraction");
  }
  for (double& v : crop.data) v /= total;
  return crop;
}

ScalarField upsample_psf_frequency(const ScalarField& psf, int factor) {
  if (factor < 1) throw std::invalid_argument("upsample factor must be >= 1");
  if (psf.width < 1 || psf.height < 1) {
    throw std::invalid_argument("cannot upsample an empty table");
  }
  if (factor == 1) return psf;
  const double border = border_energy_fraction(psf, 2);
  if (border > 1e-6) {
    log::warn("upsample_psf_frequency: table border carries " +
              std::to_string(border) +
              " of total |flux|; interpolation assumes a quiet border");
  }

  const int w = psf.width;
  const int h = psf.height;
  const int fw = w * factor;
  const int fh = h * factor;
  const std::size_t coarse_n = static_cast<std::size_t>(w) * h;
  const std::size_t fine_n = static_cast<std::size_t>(fw) * fh;

  FftwBuffer in(coarse_n);
  FftwBuffer spectrum(coarse_n);
  for (std::size_t i = 0; i < coarse_n; ++i) {
    in.data[i][0] = psf.data[i];
    in.data[i][1] = 0.0;
  }
  run_dft_2d(h, w, in.data, spectrum.data, FFTW_FORWARD);

  FftwBuffer fine_spectrum(fine_n);
  std::fill_n(&fine_spectrum.data[0][0], 2 * fine_n, 0.0);
  const auto row_map = axis_bin_map(h, fh);
  const auto col_map = axis_bin_map(w, fw);
  for (int ky = 0; ky < h; ++ky) {
    for (int kx = 0; kx < w; ++kx) {
      const fftw_complex& s = spectrum.data[static_cast<std::size_t>(ky) * w + kx];
      for (const BinTarget& ty : row_map[ky]) {
        for (const BinTarget& tx : col_map[kx]) {
          fftw_complex& dst =
              fine_spectrum.data[static_cast<std::size_t>(ty.index) * fw +
                                 tx.index];
          const double wgt = ty.weight * tx.weight;
          dst[0] += wgt * s[0];
          dst[1] += wgt * s[1];
        }
      }
    }
  }

  FftwBuffer fine(fine_n);
  run_dft_2d(fh, fw, fine_spectrum.data, fine.data, FFTW_BACKWARD);

  // Unnormalized FFTW transforms: dividing by the coarse sample count makes
  // fine samples coincide with the coarse values at shared positions.
  const double norm = 1.0 / static_cast<double>(coarse_n);
  ScalarField out(fw, fh);
  for (std::size_t i = 0; i < fine_n; ++i) {
    out.data[i] = fine.data[i][0] * norm;
  }
  return out;
}

double tabulated_psf_eval(const TabulatedPsf& psf, double du, double dv) {
  const int fw = psf.table.width;
  const int fh = psf.table.height;
  const int factor = psf.upsample_factor;
  const double col = 0.5 * (fw - factor) + du * factor;
  const double row = 0.5 * (fh - factor) + dv * factor;
  if (col < 0.0 || col > fw - 1 || row < 0.0 || row > fh - 1) return 0.0;
  const int c0 = std::min(static_cast<int>(col), fw - 2 < 0 ? 0 : fw - 2);
  const int r0 = std::min(static_cast<int>(row), fh - 2 < 0 ? 0 : fh - 2);
  const int c1 = std::min(c0 + 1, fw - 1);
  const int r1 = std::min(r0 + 1, fh - 1);
  const double fc = col - c0;
  const double fr = row - r0;
  const double top =
      (1.0 - fc) * psf.table.at(r0, c0) + fc * psf.table.at(r0, c1);
  const double bottom =
      (1.0 - fc) * psf.table.at(r1, c0) + fc * psf.table.at(r1, c1);
  return (1.0 - fr) * top + fr * bottom;
}

double psf_eval(const ReferencePsf& psf, double du, double dv) {
  if (const auto* g = std::get_if<GaussianPsf>(&psf)) {
    return gaussian_psf_eval(g->sigma, du, dv);
  }
  return tabulated_psf_eval(std::get<TabulatedPsf>(psf), du, dv);
}

double psf_support_radius(const ReferencePsf& psf) {
  if (const auto* g = std::get_if<GaussianPsf>(&psf)) {
    return 8.0 * g->sigma;
  }
  const TabulatedPsf& t = std::get<TabulatedPsf>(psf);
  const double half_w = 0.5 * (t.table.width - t.upsample_factor) /
                        static_cast<double>(t.upsample_factor);
  const double half_h = 0.5 * (t.table.height - t.upsample_factor) /
                        static_cast<double>(t.upsample_factor);
  return std::min(half_w, half_h);
}

}  // namespace fredholm
