#pragma once

// Kolyvagin primes for (E, p), their I_ell valuations and discrete log tables,
// and enumeration of squarefree moduli built from them.

#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <vector>

#include "kurihara/arith.hpp"
#include "kurihara/curve.hpp"

namespace kurihara::kolyvagin {

/// ell coprime to Np with p^{k_ell} | ell - 1 and p^{k_ell} | a_ell - ell - 1, k_ell >= 1.
class KolyvaginPrime {
 public:
  KolyvaginPrime(std::uint64_t ell, std::int64_t a_ell, int k_ell, std::uint64_t eta);

  std::uint64_t ell() const { return ell_; }
  std::int64_t a_ell() const { return a_ell_; }
  int k_ell() const { return k_ell_; }
  std::uint64_t eta() const { return eta_; }

  /// Discrete logs base eta, built on first use and shared between copies.
  const arith::LogTable& logs() const;

  /// Same prime with another primitive root (fresh table).
  KolyvaginPrime with_root(std::uint64_t eta) const;

 private:
  struct Lazy {
    std::once_flag once;
    std::unique_ptr<arith::LogTable> table;
  };
  std::uint64_t ell_;
  std::int64_t a_ell_;
  int k_ell_;
  std::uint64_t eta_;
  std::shared_ptr<Lazy> lazy_;
};

/// min(v_p(ell - 1), v_p(a_ell - ell - 1)); the second term is ignored when a_ell = ell + 1.
int k_ell(std::uint64_t ell, std::int64_t a_ell, std::uint64_t p);

/// The Kolyvagin prime at ell if ell lies in P_1 for (E, p).
std::optional<KolyvaginPrime> kolyvagin_prime(const curve::CurveContext& ctx, std::uint64_t p, std::uint64_t ell);

/// All ell <= bound with k_ell >= k, sorted. Only ell = 1 mod p^k are point counted.
std::vector<KolyvaginPrime> sieve(const curve::CurveContext& ctx, std::uint64_t p, int k, std::uint64_t bound,
                                  unsigned workers = 1);

/// A squarefree product of distinct Kolyvagin primes (n = 1 for the empty product).
class Modulus {
 public:
  Modulus() = default;
  /// Primes are sorted; throws std::invalid_argument on repeats or if n overflows 2^62.
  explicit Modulus(std::vector<KolyvaginPrime> primes);

  std::uint64_t n() const { return n_; }
  int nu() const { return static_cast<int>(primes_.size()); }
  const std::vector<KolyvaginPrime>& primes() const { return primes_; }
  std::vector<std::uint64_t> factors() const;

 private:
  std::vector<KolyvaginPrime> primes_;
  std::uint64_t n_ = 1;
};

/// v(I_n) = min over ell | n of k_ell. Throws std::invalid_argument for n = 1.
int i_valuation(const Modulus& m);

/// Colexicographic stream of nu-subsets of a prime pool.
class ModulusStream {
 public:
  ModulusStream(std::vector<KolyvaginPrime> pool, int nu, std::size_t budget);
  std::optional<Modulus> next();

 private:
  std::vector<KolyvaginPrime> pool_;
  std::vector<std::size_t> idx_;
  std::size_t remaining_;
  bool done_ = false;
  bool started_ = false;
};

std::vector<Modulus> enumerate_moduli(const std::vector<KolyvaginPrime>& primes, int nu, std::size_t budget);

}  // namespace kurihara::kolyvagin
