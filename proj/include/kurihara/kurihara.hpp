#pragma once

// Kurihara numbers: the sums over (Z/n)^x of [a/n]^+ times products of
// discrete logs, reduced mod p^k, and scans over many moduli n.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "kurihara/arith.hpp"
#include "kurihara/kolyvagin.hpp"
#include "kurihara/modsym.hpp"

namespace kurihara::kn {

enum class Normalization { PNormalized, Pinned };

struct KuriharaNumber {
  std::uint64_t n = 1;
  std::vector<std::uint64_t> factors;
  int k_used = 1;
  std::uint64_t value = 0;  // residue mod p^k_used
  /// v_p(value) when nonzero, else k_used (read as ">= k_used").
  int valuation = 0;
  Normalization tag = Normalization::PNormalized;

  int nu() const { return static_cast<int>(factors.size()); }
  bool nonzero() const { return valuation < k_used; }
  /// "2" or ">=3".
  std::string valuation_string() const;
};

/// delta~_n mod p^k_used. Requires 1 <= k_used <= v(I_n) (any k_used for n = 1).
/// `workers` threads split the sum; the result does not depend on it.
KuriharaNumber delta(const modsym::EigenSymbol& es, const kolyvagin::Modulus& m, int k_used, unsigned workers = 1);

struct Delta1 {
  BigRational value;                 // p-normalized [0]^+
  std::optional<BigRational> pinned; // L(E,1)/Omega^+ when the scale is pinned
  int valuation = kInfiniteValuation;
};

Delta1 delta_1(const modsym::EigenSymbol& es);

/// Coefficients of the Mazur-Tate element of Q(zeta_n) in the truncation
/// Z/p^k[x_ell]/(x_ell^2); coefficient index = bitmask of the prime subset.
struct MazurTateTruncation {
  std::uint64_t n = 1;
  int k_used = 1;
  std::vector<std::uint64_t> coefficients;
  std::uint64_t top() const { return coefficients.back(); }
};

MazurTateTruncation mazur_tate_truncation(const modsym::EigenSymbol& es, const kolyvagin::Modulus& m, int k_used);

enum class SignStatus { Consistent, Violation };
std::string to_string(SignStatus s);

/// Violation iff (-1)^nu(n) != w and the value is nonzero.
SignStatus functional_sign_check(int w, const kolyvagin::Modulus& m, const KuriharaNumber& kn);

/// Recomputes delta~_n with other primitive roots (one per prime of n) and
/// compares valuations.
bool unit_invariance_audit(const modsym::EigenSymbol& es, const kolyvagin::Modulus& m, int k_used,
                           const std::vector<std::uint64_t>& alternate_roots);

// ---------------------------------------------------------------------------

struct ScanOptions {
  std::uint64_t p = 5;
  int k = 1;
  std::uint64_t bound = 0;  // sieve bound, for the record
  int nu_max = 3;
  std::size_t budget = 50;         // moduli per nu
  std::vector<std::size_t> budgets; // per-nu override, last entry repeats
  std::size_t audit_samples = 5;   // per wrong-parity nu
  std::size_t saturation = 3;      // distinct n attaining the minimum
  unsigned workers = 1;
  std::function<void(const std::string&)> progress;

  std::size_t budget_for(int nu) const {
    if (budgets.empty()) return budget;
    return budgets[std::min(static_cast<std::size_t>(nu), budgets.size() - 1)];
  }
};

/// Per-nu summary. min_valuation is exact when `witnessed`, otherwise a lower
/// bound (">= min_valuation").
struct PartialRecord {
  int nu = 0;
  bool audit = false;  // wrong parity: audit sample only
  std::size_t computed = 0;
  bool witnessed = false;
  int min_valuation = 0;
  std::size_t attained = 0;
  bool saturated = false;
  std::optional<std::uint64_t> witness;  // first n attaining the minimum
};

struct DeltaCollection {
  std::uint64_t p = 5;
  int k = 1;
  std::uint64_t bound = 0;
  std::vector<std::size_t> budgets;  // effective budget per nu
  int nu_max = 0;
  int root_number = 1;
  std::uint64_t curve_hash = 0;
  Delta1 delta1;
  std::vector<KuriharaNumber> entries;  // right parity, then audits, in (nu, colex) order
  std::vector<bool> is_audit;
  std::vector<PartialRecord> partials;  // one per nu = 0..nu_max
  std::optional<int> ord_estimate;      // least nu with a nonzero entry
  std::optional<int> mod_p_ord;         // least nu with an entry of valuation 0
  std::optional<int> partial_infinity;  // min over right-parity witnessed nu
  bool parity_audit_pass = true;
  bool precision_limited = false;
  std::size_t sieved_primes = 0;

  const PartialRecord& partial(int nu) const { return partials.at(static_cast<std::size_t>(nu)); }
};

/// Computes delta~_n for nu <= nu_max over the colex-ordered moduli of the
/// pool (budget per nu), auditing the wrong parity. k_used = min(k, v(I_n)).
DeltaCollection scan(const modsym::EigenSymbol& es, const std::vector<kolyvagin::KolyvaginPrime>& pool,
                     const ScanOptions& opt);

}  // namespace kurihara::kn
