#pragma once

// Plus-part modular symbols for Gamma_0(N): Manin symbols modulo the S, T and eta
// relations, the transpose Hecke action, the dual eigenvector attached to an
// elliptic curve and exact evaluation of [a/m]^+.

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "kurihara/arith.hpp"
#include "kurihara/curve.hpp"

namespace kurihara::modsym {

class ModsymError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// P^1(Z/N)

struct P1Element {
  std::uint64_t c = 0;
  std::uint64_t d = 0;
  std::size_t index = 0;
};

/// Enumeration of P^1(Z/N) through the CRT decomposition over prime powers.
/// Locally at q^e the canonical form is (c:1), or (1:d) with q | d.
class P1List {
 public:
  explicit P1List(std::uint64_t N);

  std::uint64_t level() const { return N_; }
  std::size_t size() const { return size_; }

  /// Index of (c:d); nullopt when gcd(c, d, N) != 1.
  std::optional<std::size_t> try_index(std::int64_t c, std::int64_t d) const;
  std::size_t index(std::int64_t c, std::int64_t d) const;

  /// Canonical representative with 0 <= c, d < N.
  P1Element element(std::size_t i) const;

 private:
  struct Local {
    std::uint64_t q, qe, stride;
    std::vector<std::uint32_t> inv;  // inverse mod q^e, 0 on non-units
  };
  std::uint64_t N_;
  std::size_t size_;
  std::vector<Local> locals_;
};

std::vector<P1Element> enumerate_p1(std::uint64_t N);

// ---------------------------------------------------------------------------
// Heilbronn matrices [[a, b], [c, d]] acting on the right of Manin symbols.

using Mat2 = std::array<std::int64_t, 4>;

/// Cremona's set for T_q with q prime to the level.
std::vector<Mat2> heilbronn_cremona(std::uint64_t q);
/// Merel's set {ad - bc = n, a > b >= 0, d > c >= 0}; valid for every n.
std::vector<Mat2> heilbronn_merel(std::uint64_t n);

// ---------------------------------------------------------------------------

/// Integer relation or Hecke row over generators: (generator, coefficient).
using IntRow = std::vector<std::pair<std::uint32_t, std::int64_t>>;

/// The plus quotient of Manin symbols. Two-term relations (S and eta) are
/// solved exactly by signed orbits; each surviving orbit is a generator. The
/// three-term relations are kept as integer rows over generators.
class SymbolSpace {
 public:
  explicit SymbolSpace(std::uint64_t N);

  std::uint64_t level() const { return p1_.level(); }
  const P1List& p1() const { return p1_; }
  std::size_t num_generators() const { return reps_.size(); }

  /// Generator of Manin symbol i and the sign with x_i = sign * x_gen (sign 0 if x_i = 0).
  std::pair<std::uint32_t, int> generator_of(std::size_t i) const { return {gen_[i], sign_[i]}; }
  /// Manin symbol index representing a generator.
  std::size_t representative(std::uint32_t g) const { return reps_[g]; }

  const std::vector<IntRow>& relations() const { return relations_; }

  /// Heilbronn set used for T_q (Cremona when q is prime to N, else Merel).
  std::vector<Mat2> heilbronn(std::uint64_t q) const;

  /// Row of the functional x_g -> phi(x_g T_q) - a * phi(x_g), for each generator g.
  std::vector<IntRow> hecke_rows(std::uint64_t q, std::int64_t a) const;

  /// Transpose Hecke action on a functional given by its values on generators.
  std::vector<std::uint32_t> hecke_dual(std::uint64_t q, const std::vector<std::uint32_t>& phi,
                                        std::uint32_t prime) const;

  /// Dimension of the plus quotient and of its cuspidal part, over a large prime field.
  std::size_t dimension() const;
  std::size_t cuspidal_dimension() const;
  /// Number of cusp classes modulo Gamma_0(N) and +-1.
  std::size_t boundary_classes() const;

  /// A random functional vanishing on all relations (mod prime), for tests.
  std::vector<std::uint32_t> random_dual(std::uint32_t prime, std::uint64_t seed) const;

  /// Functional given by a boundary class coefficient: x -> coefficient of class `cls` in delta(x).
  std::vector<std::uint32_t> boundary_functional(std::size_t cls, std::uint32_t prime) const;

 private:
  void build_boundary() const;

  P1List p1_;
  std::vector<std::uint32_t> gen_;
  std::vector<std::int8_t> sign_;
  std::vector<std::size_t> reps_;
  std::vector<IntRow> relations_;
  mutable std::optional<std::size_t> dimension_;
  mutable std::vector<std::pair<std::uint32_t, std::uint32_t>> boundary_;  // per generator: (to, from) class
  mutable std::size_t num_classes_ = 0;
};

/// Word primes below 2^31 used for multi-modular elimination, largest first.
std::vector<std::uint32_t> field_primes(std::size_t count);

// ---------------------------------------------------------------------------

/// Primitive integral dual eigenvector on generators, certified over Q.
struct DualEigenvector {
  std::vector<BigInt> phi;
  /// Hecke eigenvalues imposed during the cut and checked exactly.
  std::vector<std::pair<std::uint64_t, std::int64_t>> verified_hecke;
  std::size_t primes_used = 0;
};

/// Intersects kernels of T_q - a_q (q = 2, 3, 5, ... prime to N) until the
/// dual eigenspace is a line, reconstructs it over Q and verifies it exactly.
DualEigenvector extract_eigenline(const SymbolSpace& space, const std::function<std::int64_t(std::uint64_t)>& ap,
                                  std::size_t max_cuts = 25);
DualEigenvector extract_eigenline(const SymbolSpace& space, const curve::CurveContext& ctx, std::size_t max_cuts = 25);

struct KrylovOptions {
  /// Consecutive Hecke operators under which the vector must already be an
  /// eigenvector before the projection stops.
  std::size_t confirmations = 6;
  std::size_t max_primes = 40;
  std::uint64_t seed = 1;
  std::function<void(const std::string&)> progress;
};

/// Variant for large levels without elimination on Hecke rows: a random dual
/// vector is projected onto ker(T_q - a_q) for q = 2, 3, 5, ... in turn, using
/// the minimal polynomial of T_q on its cyclic space (Berlekamp-Massey).
DualEigenvector extract_eigenline_krylov(const SymbolSpace& space,
                                         const std::function<std::int64_t(std::uint64_t)>& ap,
                                         const KrylovOptions& opt = {});

/// Exact check of all relations and the Hecke equations for the listed primes.
bool verify_dual(const SymbolSpace& space, const std::vector<BigInt>& phi,
                 const std::vector<std::pair<std::uint64_t, std::int64_t>>& hecke);

/// Raw pairing of a functional on generators with the path {infinity -> a/m}.
BigInt evaluate_raw(const SymbolSpace& space, const std::vector<BigInt>& phi, std::int64_t a, std::int64_t m);

/// epsilon with phi(W_N x) = epsilon * phi(x); the root number is -epsilon.
int fricke_sign(const SymbolSpace& space, const std::vector<BigInt>& phi);

// ---------------------------------------------------------------------------

/// The normalized eigen-symbol of an elliptic curve at a prime p.
class EigenSymbol {
 public:
  static constexpr int kVersion = 1;

  EigenSymbol(std::shared_ptr<const SymbolSpace> space, DualEigenvector dual, int fricke_eps,
              std::uint64_t curve_hash, std::string ainvs);

  std::uint64_t level() const { return space_->level(); }
  const SymbolSpace& space() const { return *space_; }
  const std::vector<BigInt>& dual_vector() const { return phi_; }
  const std::vector<std::pair<std::uint64_t, std::int64_t>>& verified_hecke() const { return hecke_; }
  int fricke_eps() const { return eps_; }
  int root_number() const { return -eps_; }
  std::uint64_t curve_hash() const { return curve_hash_; }
  const std::string& ainvs() const { return ainvs_; }

  std::uint64_t p() const { return p_; }
  const BigRational& lambda_p() const { return lambda_p_; }
  const std::optional<BigRational>& lambda_pinned() const { return lambda_pinned_; }
  /// Set by normalize().
  void set_normalization(std::uint64_t p, BigRational lambda_p, std::optional<BigRational> pinned);

  /// Exact pairing with {infinity -> a/m} before normalization.
  BigInt raw(std::int64_t a, std::int64_t m) const;
  /// [a/m]^+ with the p-normalized scale.
  BigRational value(std::int64_t a, std::int64_t m) const;
  /// [a/m]^+ with the pinned scale (nullopt when pinning failed).
  std::optional<BigRational> pinned_value(std::int64_t a, std::int64_t m) const;
  /// p-normalized [a/m]^+ reduced mod `modulus` (a power of p).
  /// Throws ModsymError if the value is not p-integral.
  std::uint64_t residue(std::int64_t a, std::int64_t m, std::uint64_t modulus) const;

 private:
  std::shared_ptr<const SymbolSpace> space_;
  std::vector<BigInt> phi_;
  std::vector<std::pair<std::uint64_t, std::int64_t>> hecke_;
  int eps_;
  std::uint64_t curve_hash_;
  std::string ainvs_;
  std::uint64_t p_ = 0;
  BigRational lambda_p_{1};
  std::optional<BigRational> lambda_pinned_;
  // Per Manin symbol values when they fit in a machine word.
  std::vector<std::int64_t> manin_small_;
  bool small_ = false;
  // Normalization as raw / p^shift (lambda_p = p^-shift), when applicable.
  int shift_ = 0;
  std::int64_t p_shift_ = 1;
};

struct NormalizeOptions {
  std::uint64_t probe_bound = 20;
  unsigned precision_bits = 128;
  /// Largest |D| tried for twist pinning on curves with L(E,1) = 0.
  std::int64_t max_twist = 400;
  /// Pin through a quadratic twist even when L(E,1) != 0 (cross-check).
  bool force_twist = false;
};

struct NormalizeReport {
  int probe_min_valuation = 0;  // before scaling
  std::optional<std::int64_t> twist_used;
  bool pinned = false;
  std::string flag;  // "unit-ambiguous absolute scale" on pinning failure
};

/// Stage 1: scale by p^-v so the probe set has minimum valuation 0.
/// Stage 2: pin the absolute scale against L(E,1)/Omega^+ or a quadratic twist.
NormalizeReport normalize(EigenSymbol& es, const curve::CurveContext& ctx, std::uint64_t p, const NormalizeOptions& opt);

/// Generator count above which build_eigensymbol uses the Krylov projection.
inline constexpr std::size_t kKrylovThreshold = 20000;

/// Builds the space, extracts and certifies the eigenvector and computes the Fricke sign.
/// `seed` and `progress` only matter on the Krylov path.
EigenSymbol build_eigensymbol(const curve::CurveContext& ctx, std::size_t max_cuts = 25, std::uint64_t seed = 1,
                              const std::function<void(const std::string&)>& progress = {});

void export_eigensymbol(const EigenSymbol& es, const std::filesystem::path& path);

/// Loads and re-verifies an eigen-symbol: version, curve hash, relations and
/// three Hecke equations against `ctx`. Throws ModsymError on rejection.
EigenSymbol import_eigensymbol(const std::filesystem::path& path, const curve::CurveContext& ctx);

}  // namespace kurihara::modsym
