#pragma once

// Multiprecision periods and central L-values used to pin the absolute scale of
// modular symbols and to cross-check root numbers.

#include <boost/multiprecision/mpfr.hpp>

#include <optional>

#include "kurihara/arith.hpp"
#include "kurihara/curve.hpp"

namespace kurihara::curve {

using Real = boost::multiprecision::mpfr_float;

/// Sets the working precision of newly created Real values for its lifetime.
class PrecisionScope {
 public:
  explicit PrecisionScope(unsigned bits);
  ~PrecisionScope();
  PrecisionScope(const PrecisionScope&) = delete;
  PrecisionScope& operator=(const PrecisionScope&) = delete;

 private:
  unsigned saved_digits_;
};

/// Omega^+ = integral of |omega| over E(R) for the given model (twice the least
/// real period when E(R) has two components).
Real real_period(const WeierstrassModel& model, unsigned precision_bits);

/// L(E, 1) from the rapidly convergent series; exactly 0 when w(E) = -1.
Real l_value_numeric(const CurveContext& ctx, unsigned precision_bits);

/// L(E, chi_D, 1) for a fundamental discriminant D coprime to N.
Real twisted_l_value_numeric(const CurveContext& ctx, std::int64_t D, unsigned precision_bits);

/// Numerical Fricke sign read off theta(1/y) = w * y^2 * theta(y) with
/// theta(y) = sum a_n exp(-2 pi n y / sqrt N); returns the raw ratio.
Real theta_symmetry_ratio(const CurveContext& ctx, const Real& y, unsigned precision_bits);

/// Whether D is a fundamental discriminant.
bool is_fundamental_discriminant(std::int64_t D);

/// Continued-fraction recognition of x as n/d with d <= max_den and |x - n/d| <= tol.
std::optional<BigRational> recognize_rational(const Real& x, const Real& tol, const BigInt& max_den);

}  // namespace kurihara::curve
