#include "kurihara/arith.hpp"

#include <algorithm>
#include <cstdlib>
#include <numeric>
#include <stdexcept>

namespace kurihara::arith {

Residue::Residue(std::uint64_t v, std::uint64_t m) : value(v % m), modulus(m) {
  if (m == 0) throw std::invalid_argument("Residue: modulus must be positive");
}

std::uint64_t pow_mod(std::uint64_t base, std::uint64_t exp, std::uint64_t m) {
  if (m == 1) return 0;
  std::uint64_t result = 1;
  base %= m;
  while (exp > 0) {
    if (exp & 1) result = mul_mod(result, base, m);
    base = mul_mod(base, base, m);
    exp >>= 1;
  }
  return result;
}

std::int64_t gcd(std::int64_t a, std::int64_t b) {
  a = std::llabs(a);
  b = std::llabs(b);
  while (b != 0) {
    std::int64_t t = a % b;
    a = b;
    b = t;
  }
  return a;
}

std::int64_t xgcd(std::int64_t a, std::int64_t b, std::int64_t& s, std::int64_t& t) {
  std::int64_t old_r = a, r = b;
  std::int64_t old_s = 1, cur_s = 0;
  std::int64_t old_t = 0, cur_t = 1;
  while (r != 0) {
    std::int64_t q = old_r / r;
    std::int64_t tmp = old_r - q * r;
    old_r = r;
    r = tmp;
    tmp = old_s - q * cur_s;
    old_s = cur_s;
    cur_s = tmp;
    tmp = old_t - q * cur_t;
    old_t = cur_t;
    cur_t = tmp;
  }
  if (old_r < 0) {
    old_r = -old_r;
    old_s = -old_s;
    old_t = -old_t;
  }
  s = old_s;
  t = old_t;
  return old_r;
}

std::optional<std::uint64_t> inv_mod(std::uint64_t a, std::uint64_t m) {
  if (m == 1) return 0;
  // Signed 128-bit Euclid so that moduli up to 2^64 are safe.
  __int128 old_r = a % m, r = m, old_s = 1, s = 0;
  while (r != 0) {
    __int128 q = old_r / r;
    __int128 tmp = old_r - q * r;
    old_r = r;
    r = tmp;
    tmp = old_s - q * s;
    old_s = s;
    s = tmp;
  }
  if (old_r != 1) return std::nullopt;
  __int128 res = old_s % static_cast<__int128>(m);
  if (res < 0) res += m;
  return static_cast<std::uint64_t>(res);
}

std::uint64_t reduce(const BigInt& a, std::uint64_t m) {
  BigInt r;
  BigInt mm;
  mpz_set_ui(mm.get_mpz_t(), m);
  mpz_fdiv_r(r.get_mpz_t(), a.get_mpz_t(), mm.get_mpz_t());
  return mpz_get_ui(r.get_mpz_t());
}

std::optional<std::uint64_t> reduce(const BigRational& x, std::uint64_t m) {
  auto inv = inv_mod(reduce(BigInt(x.get_den()), m), m);
  if (!inv) return std::nullopt;
  return mul_mod(reduce(BigInt(x.get_num()), m), *inv, m);
}

// ---------------------------------------------------------------------------

namespace {

bool miller_rabin_round(std::uint64_t n, std::uint64_t a, std::uint64_t d, unsigned s) {
  a %= n;
  if (a == 0) return true;
  std::uint64_t x = pow_mod(a, d, n);
  if (x == 1 || x == n - 1) return true;
  for (unsigned i = 1; i < s; ++i) {
    x = mul_mod(x, x, n);
    if (x == n - 1) return true;
  }
  return false;
}

std::uint64_t pollard_brent(std::uint64_t n, std::uint64_t c) {
  auto f = [&](std::uint64_t x) { return (mul_mod(x, x, n) + c) % n; };
  std::uint64_t y = 2, g = 1, q = 1, x = 0, ys = 0;
  std::uint64_t r = 1;
  const std::uint64_t m = 128;
  do {
    x = y;
    for (std::uint64_t i = 0; i < r; ++i) y = f(y);
    std::uint64_t k = 0;
    do {
      ys = y;
      for (std::uint64_t i = 0; i < std::min(m, r - k); ++i) {
        y = f(y);
        q = mul_mod(q, x > y ? x - y : y - x, n);
      }
      g = std::gcd(q, n);
      k += m;
    } while (k < r && g == 1);
    r <<= 1;
  } while (g == 1);
  if (g == n) {
    do {
      ys = f(ys);
      g = std::gcd(x > ys ? x - ys : ys - x, n);
    } while (g == 1);
  }
  return g;
}

void factor_into(std::uint64_t n, std::vector<std::uint64_t>& out) {
  if (n == 1) return;
  if (is_prime(n)) {
    out.push_back(n);
    return;
  }
  for (std::uint64_t c = 1;; ++c) {
    std::uint64_t d = pollard_brent(n, c);
    if (d != n) {
      factor_into(d, out);
      factor_into(n / d, out);
      return;
    }
  }
}

}  // namespace

bool is_prime(std::uint64_t n) {
  if (n < 2) return false;
  for (std::uint64_t q : {2ULL, 3ULL, 5ULL, 7ULL, 11ULL, 13ULL, 17ULL, 19ULL, 23ULL, 29ULL, 31ULL, 37ULL}) {
    if (n % q == 0) return n == q;
  }
  std::uint64_t d = n - 1;
  unsigned s = 0;
  while ((d & 1) == 0) {
    d >>= 1;
    ++s;
  }
  // Witness set valid for all n < 2^64.
  for (std::uint64_t a : {2ULL, 325ULL, 9375ULL, 28178ULL, 450775ULL, 9780504ULL, 1795265022ULL}) {
    if (!miller_rabin_round(n, a, d, s)) return false;
  }
  return true;
}

Factorization factorize(std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("factorize: n must be positive");
  std::vector<std::uint64_t> primes;
  for (std::uint64_t q = 2; q < 1000 && q * q <= n; q += (q == 2 ? 1 : 2)) {
    while (n % q == 0) {
      primes.push_back(q);
      n /= q;
    }
  }
  factor_into(n, primes);
  std::sort(primes.begin(), primes.end());
  Factorization result;
  for (std::uint64_t q : primes) {
    if (!result.empty() && result.back().first == q) {
      ++result.back().second;
    } else {
      result.emplace_back(q, 1);
    }
  }
  return result;
}

std::vector<std::uint64_t> primes_up_to(std::uint64_t bound) {
  std::vector<std::uint64_t> primes;
  if (bound < 2) return primes;
  std::vector<bool> composite(bound + 1, false);
  for (std::uint64_t i = 2; i <= bound; ++i) {
    if (composite[i]) continue;
    primes.push_back(i);
    for (std::uint64_t j = i * i; j <= bound; j += i) composite[j] = true;
  }
  return primes;
}

bool is_primitive_root(std::uint64_t g, std::uint64_t ell) {
  g %= ell;
  if (g == 0) return false;
  for (auto [q, e] : factorize(ell - 1)) {
    if (pow_mod(g, (ell - 1) / q, ell) == 1) return false;
  }
  return true;
}

std::uint64_t primitive_root(std::uint64_t ell) {
  if (ell < 3 || !is_prime(ell)) throw std::invalid_argument("primitive_root: need an odd prime");
  const auto factors = factorize(ell - 1);
  for (std::uint64_t g = 2;; ++g) {
    bool ok = true;
    for (auto [q, e] : factors) {
      if (pow_mod(g, (ell - 1) / q, ell) == 1) {
        ok = false;
        break;
      }
    }
    if (ok) return g;
  }
}

int legendre(std::uint64_t a, std::uint64_t ell) {
  a %= ell;
  if (a == 0) return 0;
  return pow_mod(a, (ell - 1) / 2, ell) == 1 ? 1 : -1;
}

int kronecker(std::int64_t d, std::uint64_t n) {
  if (n == 0) return (d == 1 || d == -1) ? 1 : 0;
  int result = 1;
  while (n % 2 == 0) {
    n /= 2;
    if (d % 2 == 0) return 0;
    std::int64_t r8 = ((d % 8) + 8) % 8;
    if (r8 == 3 || r8 == 5) result = -result;
  }
  // Jacobi symbol (d / n) for odd n.
  std::uint64_t a = reduce(d, n == 0 ? 1 : n);
  std::uint64_t m = n;
  while (a != 0) {
    while (a % 2 == 0) {
      a /= 2;
      std::uint64_t r8 = m % 8;
      if (r8 == 3 || r8 == 5) result = -result;
    }
    std::swap(a, m);
    if (a % 4 == 3 && m % 4 == 3) result = -result;
    a %= m;
  }
  return m == 1 ? result : 0;
}

std::optional<std::uint64_t> sqrt_mod(std::uint64_t a, std::uint64_t ell) {
  a %= ell;
  if (a == 0) return 0;
  if (legendre(a, ell) != 1) return std::nullopt;
  if (ell % 4 == 3) return pow_mod(a, (ell + 1) / 4, ell);
  std::uint64_t q = ell - 1;
  unsigned s = 0;
  while ((q & 1) == 0) {
    q >>= 1;
    ++s;
  }
  std::uint64_t z = 2;
  while (legendre(z, ell) != -1) ++z;
  std::uint64_t c = pow_mod(z, q, ell);
  std::uint64_t r = pow_mod(a, (q + 1) / 2, ell);
  std::uint64_t t = pow_mod(a, q, ell);
  unsigned m = s;
  while (t != 1) {
    unsigned i = 0;
    std::uint64_t tt = t;
    while (tt != 1) {
      tt = mul_mod(tt, tt, ell);
      ++i;
    }
    std::uint64_t b = c;
    for (unsigned j = 0; j + i + 1 < m; ++j) b = mul_mod(b, b, ell);
    r = mul_mod(r, b, ell);
    c = mul_mod(b, b, ell);
    t = mul_mod(t, c, ell);
    m = i;
  }
  return r;
}

// ---------------------------------------------------------------------------

LogTable::LogTable(std::uint64_t ell, std::uint64_t eta) : ell_(ell), eta_(eta % ell), logs_(ell, 0) {
  if (ell < 3 || !is_prime(ell)) throw std::invalid_argument("LogTable: need an odd prime");
  std::uint64_t x = 1;
  for (std::uint64_t i = 0; i + 1 < ell; ++i) {
    if (i > 0 && x == 1) throw std::invalid_argument("LogTable: generator is not primitive");
    logs_[x] = static_cast<std::uint32_t>(i);
    x = mul_mod(x, eta_, ell);
  }
  if (x != 1) throw std::invalid_argument("LogTable: generator is not primitive");
}

LogTable build_log_table(std::uint64_t ell, std::uint64_t eta) { return LogTable(ell, eta); }

// ---------------------------------------------------------------------------

int valuation(const BigInt& x, std::uint64_t p) {
  if (x == 0) return kInfiniteValuation;
  BigInt pp;
  mpz_set_ui(pp.get_mpz_t(), p);
  BigInt rest;
  return static_cast<int>(mpz_remove(rest.get_mpz_t(), x.get_mpz_t(), pp.get_mpz_t()));
}

int valuation(const BigRational& x, std::uint64_t p) {
  if (x == 0) return kInfiniteValuation;
  return valuation(BigInt(x.get_num()), p) - valuation(BigInt(x.get_den()), p);
}

int valuation(std::int64_t x, std::uint64_t p) {
  if (x == 0) return kInfiniteValuation;
  std::uint64_t ax = static_cast<std::uint64_t>(x < 0 ? -x : x);
  int v = 0;
  while (ax % p == 0) {
    ax /= p;
    ++v;
  }
  return v;
}

std::optional<BigRational> rational_reconstruct(const BigInt& value, const BigInt& modulus,
                                                const BigInt& num_bound, const BigInt& den_bound) {
  if (2 * num_bound * den_bound >= modulus) {
    throw std::invalid_argument("rational_reconstruct: bounds too large for modulus");
  }
  BigInt r0 = modulus;
  BigInt r1 = value % modulus;
  if (r1 < 0) r1 += modulus;
  BigInt t0 = 0, t1 = 1;
  while (r1 > num_bound) {
    BigInt q = r0 / r1;
    BigInt tmp = r0 - q * r1;
    r0 = r1;
    r1 = tmp;
    tmp = t0 - q * t1;
    t0 = t1;
    t1 = tmp;
  }
  if (t1 == 0 || abs(t1) > den_bound) return std::nullopt;
  BigInt g;
  mpz_gcd(g.get_mpz_t(), r1.get_mpz_t(), t1.get_mpz_t());
  if (g != 1) return std::nullopt;
  BigRational result(r1, t1);
  result.canonicalize();
  return result;
}

std::optional<BigRational> rational_reconstruct(const Residue& r, std::uint64_t num_bound,
                                                std::uint64_t den_bound) {
  BigInt nb, db, m, v;
  mpz_set_ui(nb.get_mpz_t(), num_bound);
  mpz_set_ui(db.get_mpz_t(), den_bound);
  mpz_set_ui(m.get_mpz_t(), r.modulus);
  mpz_set_ui(v.get_mpz_t(), r.value);
  return rational_reconstruct(v, m, nb, db);
}

BigInt crt(const BigInt& a, const BigInt& m, std::uint64_t b, std::uint64_t q) {
  // x = a + m * ((b - a) * m^{-1} mod q)
  const std::uint64_t a_mod_q = reduce(a, q);
  const std::uint64_t m_mod_q = reduce(m, q);
  const auto inv = inv_mod(m_mod_q, q);
  if (!inv) throw std::invalid_argument("crt: moduli not coprime");
  const std::uint64_t diff = (b % q + q - a_mod_q) % q;
  BigInt k;
  mpz_set_ui(k.get_mpz_t(), mul_mod(diff, *inv, q));
  return a + m * k;
}

std::string to_string(const BigRational& value) {
  BigRational x = value;
  x.canonicalize();
  if (x.get_den() == 1) return x.get_num().get_str();
  return x.get_num().get_str() + "/" + x.get_den().get_str();
}

BigRational parse_rational(const std::string& s) {
  BigRational r;
  if (r.set_str(s, 10) != 0) throw std::invalid_argument("parse_rational: malformed '" + s + "'");
  if (r.get_den() == 0) throw std::invalid_argument("parse_rational: zero denominator");
  r.canonicalize();
  return r;
}

}  // namespace kurihara::arith
