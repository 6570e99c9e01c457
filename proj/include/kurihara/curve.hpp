#pragma once

// Elliptic curves over Q: invariants, point counts, Tate's algorithm and the
// local/analytic data the Kurihara pipeline needs.

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "kurihara/arith.hpp"

namespace kurihara::curve {

class CurveError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// y^2 + a1 xy + a3 y = x^3 + a2 x^2 + a4 x + a6 with its standard invariants.
class WeierstrassModel {
 public:
  /// Throws CurveError when the discriminant vanishes.
  explicit WeierstrassModel(const std::array<BigInt, 5>& ainvs);
  static WeierstrassModel from_ints(std::int64_t a1, std::int64_t a2, std::int64_t a3, std::int64_t a4,
                                    std::int64_t a6);

  const std::array<BigInt, 5>& ainvs() const { return a_; }
  const BigInt& a1() const { return a_[0]; }
  const BigInt& a2() const { return a_[1]; }
  const BigInt& a3() const { return a_[2]; }
  const BigInt& a4() const { return a_[3]; }
  const BigInt& a6() const { return a_[4]; }

  BigInt b2, b4, b6, b8, c4, c6, discriminant;
  BigRational j_invariant;

  /// Model after x = u^2 x' + r, y = u^3 y' + s u^2 x' + t (u = 1 here).
  WeierstrassModel transformed(const BigInt& r, const BigInt& s, const BigInt& t) const;

  /// "[a1,a2,a3,a4,a6]" with decimal entries.
  std::string ainvs_string() const;
  /// FNV-1a hash of ainvs_string(); identifies the curve in cache and export files.
  std::uint64_t hash() const;

  bool operator==(const WeierstrassModel& other) const { return a_ == other.a_; }

 private:
  std::array<BigInt, 5> a_;
};

WeierstrassModel derive_invariants(const std::array<BigInt, 5>& ainvs);

enum class Reduction { Good, SplitMultiplicative, NonSplitMultiplicative, Additive };

std::string to_string(Reduction r);

struct LocalData {
  std::uint64_t prime = 0;
  std::string kodaira = "I0";
  std::uint64_t tamagawa = 1;
  int disc_valuation = 0;  // v_q of the minimal discriminant
  int conductor_exponent = 0;
  Reduction reduction = Reduction::Good;
  /// The model was not minimal at this prime.
  bool input_nonminimal = false;
};

/// Full Tate loop at q, minimizing locally when necessary.
LocalData tate_local_data(const WeierstrassModel& model, const BigInt& q);
LocalData tate_local_data(const WeierstrassModel& model, std::uint64_t q);

/// Prime divisors of the discriminant.
std::vector<BigInt> bad_primes(const WeierstrassModel& model);

std::vector<LocalData> all_local_data(const WeierstrassModel& model);

/// Throws CurveError when the model is not minimal at some bad prime.
void require_global_minimal(const std::vector<LocalData>& local);

BigInt conductor(const WeierstrassModel& model);

// ---------------------------------------------------------------------------
// Point counting.

/// a_ell = ell + 1 - #E(F_ell) for a prime of good reduction.
/// Uses a quadratic-character sum for ell >= 5 and projective enumeration below.
std::int64_t ap_good(const WeierstrassModel& model, std::uint64_t ell);

/// #E(F_ell) by exhaustive projective enumeration of the full model (oracle).
std::uint64_t count_points_exhaustive(const WeierstrassModel& model, std::uint64_t ell);

// ---------------------------------------------------------------------------
// Persistent a_ell cache: 16-byte header (magic "KURAP\0", version u16, curve hash u64)
// followed by little-endian (ell: u64, a_ell: i64) records.

class ApCache {
 public:
  static constexpr std::uint16_t kVersion = 1;

  ApCache() = default;
  explicit ApCache(std::uint64_t curve_hash) : curve_hash_(curve_hash) {}

  std::optional<std::int64_t> get(std::uint64_t ell) const;
  void put(std::uint64_t ell, std::int64_t a);
  std::size_t size() const;
  std::map<std::uint64_t, std::int64_t> snapshot() const;

  /// Loads a cache file; returns false (leaving the cache empty) on a missing,
  /// truncated or foreign file so that the caller rebuilds instead of reusing it.
  bool load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

 private:
  std::uint64_t curve_hash_ = 0;
  mutable std::mutex mu_;
  std::map<std::uint64_t, std::int64_t> values_;
};

// ---------------------------------------------------------------------------

/// Curve plus its global data: conductor, local data, a_ell values, root number.
class CurveContext {
 public:
  /// Computes local data at every bad prime; throws CurveError for a non-minimal model.
  explicit CurveContext(WeierstrassModel model, std::string label = {});

  const WeierstrassModel& model() const { return model_; }
  const std::string& label() const { return label_; }
  const BigInt& conductor() const { return conductor_; }
  /// Conductor as a machine word; throws when it does not fit.
  std::uint64_t level() const;
  const std::vector<LocalData>& local_data() const { return local_; }
  const LocalData* local_at(std::uint64_t q) const;
  bool is_bad(std::uint64_t q) const { return local_at(q) != nullptr; }

  /// a_ell for any prime, cached; bad primes follow the reduction type.
  std::int64_t ap(std::uint64_t ell) const;
  /// Fills the cache for all listed primes using `workers` threads.
  void compute_aps(const std::vector<std::uint64_t>& primes, unsigned workers = 1) const;

  /// a_1..a_bound (index 0 unused).
  std::vector<std::int64_t> an_sequence(std::size_t bound) const;

  std::optional<int> root_number() const { return root_number_; }
  void set_root_number(int w) { root_number_ = w; }

  ApCache& ap_cache() const { return cache_; }

 private:
  WeierstrassModel model_;
  std::string label_;
  BigInt conductor_;
  std::vector<LocalData> local_;
  std::optional<int> root_number_;
  mutable ApCache cache_;
};

std::vector<std::int64_t> a_n_sequence(const CurveContext& ctx, std::size_t bound);

// ---------------------------------------------------------------------------
// Local and residual criteria.

enum class TorsionStatus { Trivial, NonTrivial, Indeterminate };
std::string to_string(TorsionStatus s);

struct LocalTorsionReport {
  TorsionStatus status = TorsionStatus::Indeterminate;
  std::string reason;
  std::optional<int> t;  // length of E(Q_p)[p^infty] when known
};

/// Decides whether E(Q_p)[p] vanishes (p >= 5).
LocalTorsionReport local_torsion(const CurveContext& ctx, std::uint64_t p);

enum class ManinStatus { Yes, AssertRequired };
std::string to_string(ManinStatus s);
ManinStatus manin_constant_ok(const CurveContext& ctx, std::uint64_t p);

enum class ResidualImage { Surjective, ReducibleSuspected, Inconclusive };
std::string to_string(ResidualImage r);

/// Sampling test on characteristic polynomials x^2 - a_ell x + ell mod p.
ResidualImage rho_surjectivity_probable(const CurveContext& ctx, std::uint64_t p, std::size_t sample_count);

// ---------------------------------------------------------------------------
// Local group structure.

struct SylowStructure {
  int e1 = 0;
  int e2 = 0;
  std::size_t samples = 0;
  /// dim_F_p of E(F_ell) (x) Z/p.
  int rank() const { return (e1 > 0) + (e2 > 0); }
};

/// p-Sylow subgroup of E(F_ell) as Z/p^e1 x Z/p^e2, by random sampling (error < 2^-40).
SylowStructure sylow_structure(const CurveContext& ctx, std::uint64_t ell, std::uint64_t p, std::mt19937_64& rng);

/// Same structure from full enumeration of E(F_ell) (test oracle, small ell only).
SylowStructure sylow_structure_exhaustive(const WeierstrassModel& model, std::uint64_t ell, std::uint64_t p);

}  // namespace kurihara::curve
