#include "fredholm/distortion.hpp"

#include <cmath>

namespace fredholm {
namespace {

double ipow(double base, int exp) {
  double r = 1.0;
  for (int k = 0; k < exp; ++k) r *= base;
  return r;
}

double eval_terms(const std::vector<MonomialTerm>& terms, double u, double v,
                  double x, double y, double x0, double y0) {
  const double xs = x - x0;
  const double ys = y - y0;
  double total = 0.0;
  for (const MonomialTerm& t : terms) {
    total += t.coefficient * ipow(xs, t.i) * ipow(ys, t.j) * ipow(u, t.m) *
             ipow(v, t.n);
  }
  return total;
}

}  // namespace

double eval_f(const DistortionPolynomial& poly, double u, double v, double x,
              double y) {
  return eval_terms(poly.f_terms, u, v, x, y, poly.x0, poly.y0);
}

double eval_g(const DistortionPolynomial& poly, double u, double v, double x,
              double y) {
  return eval_terms(poly.g_terms, u, v, x, y, poly.x0, poly.y0);
}

DfcReport validate_dfc(const DistortionPolynomial& poly) {
  DfcReport report;
  for (std::size_t idx = 0; idx < poly.f_terms.size(); ++idx) {
    const MonomialTerm& t = poly.f_terms[idx];
    if (t.i + t.j < 1) report.violations.push_back({'f', idx, t});
  }
  for (std::size_t idx = 0; idx < poly.g_terms.size(); ++idx) {
    const MonomialTerm& t = poly.g_terms[idx];
    if (t.i + t.j < 1) report.violations.push_back({'g', idx, t});
  }
  return report;
}

// ux, vx, u^2 x, v^2 x, u x^2, v x^2
const std::array<MonomialTerm, 6> kThetaBasis = {{
    {1, 0, 1, 0, 1.0},
    {1, 0, 0, 1, 1.0},
    {1, 0, 2, 0, 1.0},
    {1, 0, 0, 2, 1.0},
    {2, 0, 1, 0, 1.0},
    {2, 0, 0, 1, 1.0},
}};

DistortionPolynomial theta_to_polynomial(const ThetaVector& theta) {
  DistortionPolynomial poly;
  poly.f_terms.reserve(6);
  poly.g_terms.reserve(6);
  for (int k = 0; k < 6; ++k) {
    MonomialTerm t = kThetaBasis[k];
    t.coefficient = theta.theta[k];
    poly.f_terms.push_back(t);
    t.coefficient = theta.theta[k + 6];
    poly.g_terms.push_back(t);
  }
  return poly;
}

std::optional<ThetaVector> polynomial_to_theta(
    const DistortionPolynomial& poly) {
  if (poly.f_terms.size() != 6 || poly.g_terms.size() != 6) return std::nullopt;
  if (poly.x0 != 0.0 || poly.y0 != 0.0) return std::nullopt;
  ThetaVector theta;
  std::array<bool, 6> seen_f{};
  std::array<bool, 6> seen_g{};
  const auto basis_index = [](const MonomialTerm& t) -> int {
    for (int k = 0; k < 6; ++k) {
      const MonomialTerm& b = kThetaBasis[k];
      if (t.i == b.i && t.j == b.j && t.m == b.m && t.n == b.n) return k;
    }
    return -1;
  };
  for (const MonomialTerm& t : poly.f_terms) {
    const int k = basis_index(t);
    if (k < 0 || seen_f[k]) return std::nullopt;
    seen_f[k] = true;
    theta.theta[k] = t.coefficient;
  }
  for (const MonomialTerm& t : poly.g_terms) {
    const int k = basis_index(t);
    if (k < 0 || seen_g[k]) return std::nullopt;
    seen_g[k] = true;
    theta.theta[k + 6] = t.coefficient;
  }
  return theta;
}

}  // namespace fredholm
