#pragma once

// Exact integer, rational and modular arithmetic shared by every module.

#include <gmpxx.h>

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace kurihara {

using BigInt = mpz_class;
using BigRational = mpq_class;

/// p-adic valuations use this sentinel for the valuation of zero.
inline constexpr int kInfiniteValuation = std::numeric_limits<int>::max();

namespace arith {

/// An element of Z/mZ with 0 <= value < modulus.
struct Residue {
  std::uint64_t value = 0;
  std::uint64_t modulus = 1;

  Residue() = default;
  Residue(std::uint64_t v, std::uint64_t m);
  bool operator==(const Residue&) const = default;
};

// ---------------------------------------------------------------------------
// Word-size modular arithmetic.

inline std::uint64_t mul_mod(std::uint64_t a, std::uint64_t b, std::uint64_t m) {
  return static_cast<std::uint64_t>(static_cast<unsigned __int128>(a) * b % m);
}

std::uint64_t pow_mod(std::uint64_t base, std::uint64_t exp, std::uint64_t m);

/// Inverse of a modulo m, or nullopt when gcd(a, m) != 1.
std::optional<std::uint64_t> inv_mod(std::uint64_t a, std::uint64_t m);

/// Reduces a signed integer into [0, m).
inline std::uint64_t reduce(std::int64_t a, std::uint64_t m) {
  std::int64_t r = a % static_cast<std::int64_t>(m);
  return static_cast<std::uint64_t>(r < 0 ? r + static_cast<std::int64_t>(m) : r);
}

std::uint64_t reduce(const BigInt& a, std::uint64_t m);

/// a/b mod m for a rational with denominator prime to m; nullopt otherwise.
std::optional<std::uint64_t> reduce(const BigRational& x, std::uint64_t m);

std::int64_t gcd(std::int64_t a, std::int64_t b);

/// Extended Euclid: returns g = gcd(a, b) >= 0 and sets s, t with s*a + t*b = g.
std::int64_t xgcd(std::int64_t a, std::int64_t b, std::int64_t& s, std::int64_t& t);

// ---------------------------------------------------------------------------
// Primes and factorization.

/// Deterministic Miller-Rabin for every 64-bit input.
bool is_prime(std::uint64_t n);

using Factorization = std::vector<std::pair<std::uint64_t, unsigned>>;

/// Prime factorization with strictly increasing primes; factorize(1) is empty.
Factorization factorize(std::uint64_t n);

std::vector<std::uint64_t> primes_up_to(std::uint64_t bound);

/// Smallest positive primitive root of an odd prime.
std::uint64_t primitive_root(std::uint64_t ell);

/// Whether g generates (Z/ell)^x.
bool is_primitive_root(std::uint64_t g, std::uint64_t ell);

/// Legendre symbol (a / ell) for an odd prime ell.
int legendre(std::uint64_t a, std::uint64_t ell);

/// Kronecker symbol (D / n) for any integer D and n >= 1.
int kronecker(std::int64_t d, std::uint64_t n);

/// Square root modulo an odd prime (Tonelli-Shanks); nullopt for non-residues.
std::optional<std::uint64_t> sqrt_mod(std::uint64_t a, std::uint64_t ell);

// ---------------------------------------------------------------------------
// Discrete logarithms.

/// Full discrete-log table for (Z/ell)^x with respect to a fixed generator.
class LogTable {
 public:
  /// Builds the table in O(ell) by successive multiplication.
  /// Throws std::invalid_argument when eta is not a primitive root.
  LogTable(std::uint64_t ell, std::uint64_t eta);

  std::uint64_t prime() const { return ell_; }
  std::uint64_t generator() const { return eta_; }

  /// log_eta(a) in [0, ell - 1) for a not divisible by ell.
  std::uint32_t log(std::uint64_t a) const { return logs_[a % ell_]; }

 private:
  std::uint64_t ell_;
  std::uint64_t eta_;
  std::vector<std::uint32_t> logs_;
};

LogTable build_log_table(std::uint64_t ell, std::uint64_t eta);

// ---------------------------------------------------------------------------
// Valuations and reconstruction.

/// Exponent of p in x, or kInfiniteValuation for x = 0.
int valuation(const BigInt& x, std::uint64_t p);
int valuation(const BigRational& x, std::uint64_t p);
int valuation(std::int64_t x, std::uint64_t p);

/// Finds n/d with |n| <= num_bound, 0 < d <= den_bound and n = r*d mod m.
/// Requires 2*num_bound*den_bound < m; returns nullopt when no such pair exists.
std::optional<BigRational> rational_reconstruct(const BigInt& value, const BigInt& modulus,
                                                const BigInt& num_bound, const BigInt& den_bound);
std::optional<BigRational> rational_reconstruct(const Residue& r, std::uint64_t num_bound,
                                                std::uint64_t den_bound);

/// Chinese remaindering of (a mod m) with (b mod q) for coprime moduli.
BigInt crt(const BigInt& a, const BigInt& m, std::uint64_t b, std::uint64_t q);

/// Canonical decimal "n/d" (or "n" when d = 1).
std::string to_string(const BigRational& x);
BigRational parse_rational(const std::string& s);

}  // namespace arith
}  // namespace kurihara
