#include "kurihara/analytic.hpp"

#include <algorithm>
#include <cmath>

namespace kurihara::curve {

namespace {

unsigned digits_for_bits(unsigned bits) { return static_cast<unsigned>(std::ceil(bits * 0.30103)) + 2; }

Real to_real(const BigInt& x) { return Real(x.get_str()); }

Real pi() {
  Real r;
  mpfr_const_pi(r.backend().data(), MPFR_RNDN);
  return r;
}

Real agm(Real a, Real b, const Real& eps) {
  for (int i = 0; i < 10000; ++i) {
    Real an = (a + b) / 2;
    Real bn = sqrt(a * b);
    a = an;
    b = bn;
    if (abs(a - b) <= eps * abs(a)) break;
  }
  return (a + b) / 2;
}

Real signed_cbrt(const Real& x) { return x < 0 ? Real(-cbrt(-x)) : Real(cbrt(x)); }

/// Real roots of 4x^3 + b2 x^2 + 2 b4 x + b6, in decreasing order.
std::vector<Real> two_torsion_abscissae(const WeierstrassModel& m) {
  const Real b2 = to_real(m.b2), b4 = to_real(m.b4), b6 = to_real(m.b6);
  const Real P = -27 * to_real(m.c4);
  const Real Q = -54 * to_real(m.c6);
  std::vector<Real> X;
  if (m.discriminant > 0) {
    const Real mm = 2 * sqrt(-P / 3);
    Real arg = (3 * Q / (2 * P)) * sqrt(-3 / P);
    if (arg > 1) arg = 1;
    if (arg < -1) arg = -1;
    const Real theta = acos(arg) / 3;
    for (int k = 0; k < 3; ++k) X.push_back(mm * cos(theta - 2 * pi() * k / 3));
  } else {
    const Real s = -Q / 2;
    const Real d0 = Q * Q / 4 + P * P * P / 27;
    const Real u3 = s + (s < 0 ? Real(-sqrt(d0)) : Real(sqrt(d0)));
    const Real u = signed_cbrt(u3);
    X.push_back(u - P / (3 * u));
  }
  std::vector<Real> roots;
  for (const Real& x : X) {
    Real e = (x - 3 * b2) / 36;
    // Newton polish on the original cubic.
    for (int it = 0; it < 4; ++it) {
      const Real g = ((4 * e + b2) * e + 2 * b4) * e + b6;
      const Real dg = (12 * e + 2 * b2) * e + 2 * b4;
      if (dg == 0) break;
      const Real next = e - g / dg;
      const Real gn = ((4 * next + b2) * next + 2 * b4) * next + b6;
      if (abs(gn) >= abs(g)) break;
      e = next;
    }
    roots.push_back(e);
  }
  std::sort(roots.begin(), roots.end(), [](const Real& a, const Real& b) { return a > b; });
  return roots;
}

std::size_t series_terms(unsigned bits, const Real& scale) {
  // exp(-2 pi n / scale) < 2^-(bits + 20)
  const Real n = (bits + 20) * log(Real(2)) * scale / (2 * pi());
  return static_cast<std::size_t>(n.convert_to<double>()) + 2;
}

}  // namespace

PrecisionScope::PrecisionScope(unsigned bits) : saved_digits_(Real::default_precision()) {
  Real::default_precision(digits_for_bits(bits));
}

PrecisionScope::~PrecisionScope() { Real::default_precision(saved_digits_); }

Real real_period(const WeierstrassModel& model, unsigned precision_bits) {
  PrecisionScope scope(precision_bits + 32);
  const auto e = two_torsion_abscissae(model);
  const Real eps = pow(Real(2), -static_cast<int>(precision_bits + 16));
  if (model.discriminant > 0) {
    const Real omega1 = pi() / agm(sqrt(e[0] - e[2]), sqrt(e[0] - e[1]), eps);
    return 2 * omega1;
  }
  const Real b2 = to_real(model.b2), b4 = to_real(model.b4);
  const Real a = 3 * e[0] + b2 / 4;
  const Real b = sqrt(3 * e[0] * e[0] + b2 * e[0] / 2 + b4 / 2);
  return 2 * pi() / agm(2 * sqrt(b), sqrt(2 * b + a), eps);
}

Real l_value_numeric(const CurveContext& ctx, unsigned precision_bits) {
  const auto w = ctx.root_number();
  if (!w) throw CurveError("l_value_numeric: root number unknown");
  PrecisionScope scope(precision_bits + 32);
  if (*w == -1) return Real(0);
  const Real sqrtN = sqrt(to_real(ctx.conductor()));
  const std::size_t terms = series_terms(precision_bits, sqrtN);
  const auto an = ctx.an_sequence(terms);
  const Real q = exp(-2 * pi() / sqrtN);
  Real qn = 1;
  Real sum = 0;
  for (std::size_t n = 1; n <= terms; ++n) {
    qn *= q;
    if (an[n] != 0) sum += Real(an[n]) * qn / n;
  }
  return 2 * sum;
}

Real twisted_l_value_numeric(const CurveContext& ctx, std::int64_t D, unsigned precision_bits) {
  const auto w = ctx.root_number();
  if (!w) throw CurveError("twisted_l_value_numeric: root number unknown");
  const std::uint64_t N = ctx.level();
  if (D == 1) return l_value_numeric(ctx, precision_bits);
  if (!is_fundamental_discriminant(D)) throw std::invalid_argument("twist: D is not a fundamental discriminant");
  if (arith::gcd(D, static_cast<std::int64_t>(N)) != 1) throw std::invalid_argument("twist: gcd(D, N) != 1");
  PrecisionScope scope(precision_bits + 32);
  // w(E_D) = w(E) chi_D(-N)
  const int sign = *w * arith::kronecker(D, N) * (D < 0 ? -1 : 1);
  if (sign == -1) return Real(0);
  const std::uint64_t absD = static_cast<std::uint64_t>(D < 0 ? -D : D);
  const Real scale = sqrt(to_real(ctx.conductor())) * absD;
  const std::size_t terms = series_terms(precision_bits, scale);
  const auto an = ctx.an_sequence(terms);
  const Real q = exp(-2 * pi() / scale);
  Real qn = 1;
  Real sum = 0;
  for (std::size_t n = 1; n <= terms; ++n) {
    qn *= q;
    if (an[n] == 0) continue;
    const int chi = arith::kronecker(D, n);
    if (chi != 0) sum += Real(an[n] * chi) * qn / n;
  }
  return 2 * sum;
}

Real theta_symmetry_ratio(const CurveContext& ctx, const Real& y, unsigned precision_bits) {
  PrecisionScope scope(precision_bits + 32);
  const Real sqrtN = sqrt(to_real(ctx.conductor()));
  const Real ymin = y < 1 ? y : Real(1 / y);
  const std::size_t terms = series_terms(precision_bits, Real(sqrtN / ymin));
  const auto an = ctx.an_sequence(terms);
  auto theta = [&](const Real& t) {
    const Real q = exp(-2 * pi() * t / sqrtN);
    Real qn = 1, sum = 0;
    for (std::size_t n = 1; n <= terms; ++n) {
      qn *= q;
      if (an[n] != 0) sum += Real(an[n]) * qn;
    }
    return sum;
  };
  return theta(1 / y) / (y * y * theta(y));
}

bool is_fundamental_discriminant(std::int64_t D) {
  if (D == 1 || D == 0) return false;
  const std::int64_t r = ((D % 4) + 4) % 4;
  auto squarefree = [](std::uint64_t n) {
    for (auto [q, e] : arith::factorize(n)) {
      if (e > 1) return false;
    }
    return true;
  };
  const std::uint64_t a = static_cast<std::uint64_t>(D < 0 ? -D : D);
  if (r == 1) return squarefree(a);
  if (r == 0) {
    const std::int64_t m = D / 4;
    const std::int64_t mr = ((m % 4) + 4) % 4;
    return (mr == 2 || mr == 3) && squarefree(a / 4);
  }
  return false;
}

std::optional<BigRational> recognize_rational(const Real& x, const Real& tol, const BigInt& max_den) {
  BigInt h_prev = 1, h = 0, k_prev = 0, k = 1;
  Real rest = x;
  for (int iter = 0; iter < 400; ++iter) {
    const Real fl = floor(rest);
    BigInt a;
    mpfr_get_z(a.get_mpz_t(), fl.backend().data(), MPFR_RNDN);
    BigInt h_new = a * h_prev + h;
    BigInt k_new = a * k_prev + k;
    h = h_prev;
    k = k_prev;
    h_prev = h_new;
    k_prev = k_new;
    if (k_prev > max_den) return std::nullopt;
    const Real approx = Real(h_prev.get_str()) / Real(k_prev.get_str());
    if (abs(x - approx) <= tol) {
      BigRational r(h_prev, k_prev);
      r.canonicalize();
      return r;
    }
    const Real frac = rest - fl;
    if (frac == 0) return std::nullopt;
    rest = 1 / frac;
  }
  return std::nullopt;
}

}  // namespace kurihara::curve
