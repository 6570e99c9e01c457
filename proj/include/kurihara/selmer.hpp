#pragma once

// Structural predictions for Sel(Q, E[p^infty]) and Sha[p^infty] read off from
// the partial invariants of a DeltaCollection, with consistency checks.

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "kurihara/curve.hpp"
#include "kurihara/kurihara.hpp"

namespace kurihara::selmer {

enum class PredictionStatus { Ok, Unsaturated, NoWitness };
std::string to_string(PredictionStatus s);

struct SelmerPrediction {
  std::uint64_t p = 5;
  PredictionStatus status = PredictionStatus::NoWitness;
  std::optional<int> corank;
  /// Nonzero e_i, non-increasing; Sha[p^infty] ~ (+)(Z/p^e_i)^2.
  std::vector<int> exponents;
  std::optional<int> length;
  /// (i, exponent of Fitt_i); nullopt is the zero ideal.
  std::vector<std::pair<int, std::optional<int>>> fitting;
  std::string group;  // empty unless status == Ok
  std::string sha;    // empty unless status == Ok
  std::vector<std::string> flags;
};

SelmerPrediction predict_structure(const kn::DeltaCollection& dc);

/// nu(n) for a witness with delta~_n != 0. Throws std::invalid_argument otherwise.
int rank_upper_bound(const kn::KuriharaNumber& witness);

enum class Parity { Consistent, Inconsistent };
std::string to_string(Parity p);
/// Consistent iff (-1)^ord = w. Throws std::invalid_argument without an ord estimate.
Parity parity_check(const kn::DeltaCollection& dc, int w);

enum class TamagawaStatus { Match, UpperBoundOnly, Mismatch };
std::string to_string(TamagawaStatus s);

struct TamagawaReport {
  TamagawaStatus status = TamagawaStatus::UpperBoundOnly;
  std::optional<int> partial_infinity;
  int tamagawa_valuation = 0;  // sum of v_p(c_ell)
};

TamagawaReport tamagawa_conjecture_check(const kn::DeltaCollection& dc, const std::vector<curve::LocalData>& local);

struct Hypotheses {
  curve::ResidualImage rho = curve::ResidualImage::Inconclusive;
  bool rho_asserted = false;
  curve::ManinStatus manin = curve::ManinStatus::AssertRequired;
  bool manin_asserted = false;
  curve::LocalTorsionReport local_torsion;
  bool tamagawa_prime_to_p = false;

  bool rho_ok() const { return rho == curve::ResidualImage::Surjective || rho_asserted; }
  bool manin_ok() const { return manin == curve::ManinStatus::Yes || manin_asserted; }
  bool all() const {
    return rho_ok() && manin_ok() && local_torsion.status == curve::TorsionStatus::Trivial && tamagawa_prime_to_p;
  }
};

Hypotheses check_hypotheses(const curve::CurveContext& ctx, std::uint64_t p, bool assert_manin,
                            bool assert_surjective, std::size_t rho_samples = 200);

struct SemilocalFactor {
  std::uint64_t ell = 0;
  int e1 = 0, e2 = 0;
  int dimension = 0;  // dim E(F_ell) (x) Z/p
};

struct SemilocalReport {
  bool applicable = false;
  std::vector<std::string> reasons;
  std::optional<std::uint64_t> witness;
  int nu = 0;
  std::vector<SemilocalFactor> factors;
  int selmer_dimension = 0;
  std::string isomorphism;
  std::string rank_formula;
};

/// Semi-local description of Sel(Q, E[p]) from a mod-p witness n with nu(n)
/// equal to the mod-p vanishing order. With a witness the candidate isomorphism
/// is always filled in; `applicable` says whether the hypotheses certify it.
SemilocalReport semilocal_report(const kn::DeltaCollection& dc, const curve::CurveContext& ctx, const Hypotheses& hyp,
                                 std::mt19937_64& rng);

}  // namespace kurihara::selmer
