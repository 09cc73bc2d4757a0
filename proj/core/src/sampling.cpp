#include "fredholm/sampling.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "fredholm/log.hpp"
#include "fredholm/parallel.hpp"

namespace fredholm {
namespace {

// 15-point Gauss-Kronrod rule (7-point Gauss embedded), QUADPACK constants.
constexpr double kGkNodes[8] = {
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000};
constexpr double kKronrodWeights[8] = {
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714};
constexpr double kGaussWeights[4] = {
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327};

template <typename F>
void gk15(const F& f, double a, double b, double& kronrod, double& err) {
  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const double fc = f(center);
  double result_k = fc * kKronrodWeights[7];
  double result_g = fc * kGaussWeights[3];
  for (int i = 0; i < 7; ++i) {
    const double dx = half * kGkNodes[i];
    const double fsum = f(center - dx) + f(center + dx);
    result_k += fsum * kKronrodWeights[i];
    if (i % 2 == 1) result_g += fsum * kGaussWeights[i / 2];
  }
  kronrod = result_k * half;
  err = std::abs((result_k - result_g) * half);
}

template <typename F>
double adaptive_quad(const F& f, double a, double b, double tol, int depth) {
  double value = 0.0;
  double err = 0.0;
  gk15(f, a, b, value, err);
  if (err <= tol || depth >= 48) return value;
  const double mid = 0.5 * (a + b);
  return adaptive_quad(f, a, mid, 0.5 * tol, depth + 1) +
         adaptive_quad(f, mid, b, 0.5 * tol, depth + 1);
}

double sin_over_t(double t) { return t == 0.0 ? 1.0 : std::sin(t) / t; }

using RowMat =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Eigen::Map<const RowMat> as_matrix(const ScalarField& field) {
  return Eigen::Map<const RowMat>(field.data.data(), field.height,
                                  field.width);
}

ScalarField to_field_from(const RowMat& m) {
  ScalarField out(static_cast<int>(m.cols()), static_cast<int>(m.rows()));
  Eigen::Map<RowMat>(out.data.data(), m.rows(), m.cols()) = m;
  return out;
}

void check_border_quiet(const ScalarField& image, const char* op) {
  const double fraction = border_energy_fraction(image, 2);
  if (fraction > 1e-6) {
    log::warn(std::string(op) +
              ": image border carries " + std::to_string(fraction) +
              " of total |flux|; values near the border should be around 0");
  }
}

}  // namespace

double sine_integral(double z) {
  if (z == 0.0) return 0.0;
  if (z < 0.0) return -sine_integral(-z);
  return adaptive_quad(sin_over_t, 0.0, z, 1e-14, 0);
}

struct SamplingMatrix::Impl {
  Eigen::MatrixXd dense;
  Eigen::LLT<Eigen::MatrixXd> llt;
  double rcond = 0.0;
};

SamplingMatrix::SamplingMatrix(std::vector<double> lags)
    : lags_(std::move(lags)) {
  const int n = size();
  auto impl = std::make_shared<Impl>();
  impl->dense.resize(n, n);
  for (int m = 0; m < n; ++m) {
    for (int i = 0; i < n; ++i) {
      impl->dense(m, i) = lag(m - i);
    }
  }
  impl->llt.compute(impl->dense);
  impl->rcond =
      impl->llt.info() == Eigen::Success ? impl->llt.rcond() : 0.0;
  impl_ = std::move(impl);
}

SamplingMatrix SamplingMatrix::build(int n) {
  if (n < 1) throw std::invalid_argument("sampling matrix size must be >= 1");
  // R(d) = integral of sinc over [d - 1/2, d + 1/2], the closed reduction of
  // the defining double integral; equals (1/pi)[Si(pi(d+1/2)) - Si(pi(d-1/2))].
  std::vector<double> lags(static_cast<std::size_t>(n));
  parallel_for(0, n, [&](int d) {
    lags[d] = adaptive_quad(static_cast<double (*)(double)>(&sinc), d - 0.5,
                            d + 0.5, 1e-14, 0);
  });
  return SamplingMatrix(std::move(lags));
}

SamplingMatrix SamplingMatrix::from_lag_profile(std::vector<double> lags) {
  if (lags.empty()) {
    throw std::invalid_argument("lag profile must not be empty");
  }
  return SamplingMatrix(std::move(lags));
}

ScalarField SamplingMatrix::to_field() const {
  return to_field_from(impl_->dense);
}

double SamplingMatrix::rcond() const { return impl_->rcond; }

ScalarField SamplingMatrix::apply_both_sides(const ScalarField& image) const {
  return apply(*this, image, *this);
}

ScalarField SamplingMatrix::solve_both_sides(const ScalarField& image) const {
  return solve(*this, image, *this);
}

ScalarField SamplingMatrix::apply(const SamplingMatrix& rows,
                                  const ScalarField& image,
                                  const SamplingMatrix& cols) {
  if (image.height != rows.size() || image.width != cols.size()) {
    throw std::invalid_argument(
        "image dimensions " + std::to_string(image.width) + "x" +
        std::to_string(image.height) + " do not match sampling matrices " +
        std::to_string(cols.size()) + "/" + std::to_string(rows.size()));
  }
  const RowMat result =
      rows.impl_->dense * as_matrix(image) * cols.impl_->dense;
  return to_field_from(result);
}

ScalarField SamplingMatrix::solve(const SamplingMatrix& rows,
                                  const ScalarField& image,
                                  const SamplingMatrix& cols) {
  if (image.height != rows.size() || image.width != cols.size()) {
    throw std::invalid_argument(
        "image dimensions " + std::to_string(image.width) + "x" +
        std::to_string(image.height) + " do not match sampling matrices " +
        std::to_string(cols.size()) + "/" + std::to_string(rows.size()));
  }
  for (const SamplingMatrix* m : {&rows, &cols}) {
    if (m->impl_->rcond < 1e-12) {
      throw std::runtime_error(
          "sampling matrix of size " + std::to_string(m->size()) +
          " is ill-conditioned (rcond estimate " +
          std::to_string(m->impl_->rcond) + "); cannot invert");
    }
  }
  const Eigen::MatrixXd left = rows.impl_->llt.solve(as_matrix(image));
  const RowMat result =
      cols.impl_->llt.solve(left.transpose()).transpose();
  return to_field_from(result);
}

ScalarField sensor_sample(const ScalarField& ideal, const SamplingMatrix& r) {
  return sensor_sample(ideal, r, r);
}

ScalarField sensor_sample(const ScalarField& ideal,
                          const SamplingMatrix& r_rows,
                          const SamplingMatrix& r_cols) {
  if (ideal.height == r_rows.size() && ideal.width == r_cols.size()) {
    check_border_quiet(ideal, "sensor_sample");
  }
  return SamplingMatrix::apply(r_rows, ideal, r_cols);
}

ScalarField correct_sampling(const ScalarField& sensed,
                             const SamplingMatrix& r) {
  return correct_sampling(sensed, r, r);
}

ScalarField correct_sampling(const ScalarField& sensed,
                             const SamplingMatrix& r_rows,
                             const SamplingMatrix& r_cols) {
  if (sensed.height == r_rows.size() && sensed.width == r_cols.size()) {
    check_border_quiet(sensed, "correct_sampling");
  }
  return SamplingMatrix::solve(r_rows, sensed, r_cols);
}

}  // namespace fredholm
