#pragma once

#include <array>
#include <optional>
#include <vector>

namespace fredholm {

/// One term coefficient * x^i y^j u^m v^n of a distortion polynomial.
/// The distortion-free condition requires i + j >= 1 for every term.
struct MonomialTerm {
  int i = 0;  // exponent of x (object plane)
  int j = 0;  // exponent of y
  int m = 0;  // exponent of u (image plane)
  int n = 0;  // exponent of v
  double coefficient = 0.0;

  bool operator==(const MonomialTerm&) const = default;
};

/// Polynomial distortion functions f and g. Object-plane monomials are
/// evaluated in coordinates shifted by the reference point, so f and g vanish
/// as (x, y) approaches (x0, y0) whenever all terms satisfy i + j >= 1.
struct DistortionPolynomial {
  std::vector<MonomialTerm> f_terms;
  std::vector<MonomialTerm> g_terms;
  double x0 = 0.0;
  double y0 = 0.0;

  bool operator==(const DistortionPolynomial&) const = default;
};

double eval_f(const DistortionPolynomial& poly, double u, double v, double x,
              double y);
double eval_g(const DistortionPolynomial& poly, double u, double v, double x,
              double y);

struct DfcViolation {
  char function = 'f';  // 'f' or 'g'
  std::size_t index = 0;
  MonomialTerm term;
};

struct DfcReport {
  std::vector<DfcViolation> violations;
  bool ok() const { return violations.empty(); }
};

/// Accepts iff every term satisfies i + j >= 1; never throws.
DfcReport validate_dfc(const DistortionPolynomial& poly);

/// Fixed 12-parameter basis:
///   f = t1 ux + t2 vx + t3 u^2 x + t4 v^2 x + t5 u x^2 + t6 v x^2
///   g = t7..t12 over the same six monomials.
struct ThetaVector {
  std::array<double, 12> theta{};

  bool operator==(const ThetaVector&) const = default;
};

/// The six (i, j, m, n) monomials of the theta basis, in order.
extern const std::array<MonomialTerm, 6> kThetaBasis;

DistortionPolynomial theta_to_polynomial(const ThetaVector& theta);

/// Inverse of theta_to_polynomial. Returns nullopt unless the polynomial
/// consists of exactly the six basis monomials in each of f and g.
std::optional<ThetaVector> polynomial_to_theta(
    const DistortionPolynomial& poly);

}  // namespace fredholm
