#include "kurihara/selmer.hpp"

#include <algorithm>
#include <stdexcept>

namespace kurihara::selmer {

std::string to_string(PredictionStatus s) {
  switch (s) {
    case PredictionStatus::Ok: return "ok";
    case PredictionStatus::Unsaturated: return "unsaturated";
    case PredictionStatus::NoWitness: return "no-witness";
  }
  return "?";
}

std::string to_string(Parity p) { return p == Parity::Consistent ? "consistent" : "inconsistent"; }

std::string to_string(TamagawaStatus s) {
  switch (s) {
    case TamagawaStatus::Match: return "match";
    case TamagawaStatus::UpperBoundOnly: return "upper-bound-only";
    case TamagawaStatus::Mismatch: return "mismatch";
  }
  return "?";
}

namespace {

std::string cyclic(std::uint64_t p, int e) {
  std::uint64_t q = 1;
  for (int i = 0; i < e; ++i) q *= p;
  return "(Z/" + std::to_string(q) + ")^2";
}

}  // namespace

SelmerPrediction predict_structure(const kn::DeltaCollection& dc) {
  SelmerPrediction out;
  out.p = dc.p;
  if (!dc.ord_estimate || !dc.partial_infinity) {
    out.flags.push_back("no nonvanishing witness up to nu=" + std::to_string(dc.nu_max));
    return out;
  }
  const int r = *dc.ord_estimate;
  const int inf = *dc.partial_infinity;
  out.corank = r;
  out.status = PredictionStatus::Ok;
  if (!dc.parity_audit_pass) out.flags.push_back("parity audit failed");
  if (dc.precision_limited) out.flags.push_back("precision-limited");

  // d(i) for i = r, r+2, ...: the witnessed minimum, or the limit beyond nu_max.
  auto d = [&](int i) -> std::optional<int> {
    if (i > dc.nu_max) return inf;
    const auto& pr = dc.partial(i);
    if (!pr.witnessed) return std::nullopt;
    return pr.min_valuation;
  };
  for (int i = 0; i < r; ++i) out.fitting.emplace_back(i, std::nullopt);
  int i = r;
  std::optional<int> cur = d(r);
  while (true) {
    out.fitting.emplace_back(i, *cur - inf);
    if (i <= dc.nu_max && !dc.partial(i).saturated) out.flags.push_back("unsaturated at nu=" + std::to_string(i));
    if (*cur <= inf) break;
    const auto next = d(i + 2);
    if (!next) {
      out.status = PredictionStatus::Unsaturated;
      out.flags.push_back("no witness at nu=" + std::to_string(i + 2));
      break;
    }
    const int diff = *cur - *next;
    if (diff < 0 || diff % 2 != 0) {
      out.status = PredictionStatus::Unsaturated;
      out.flags.push_back("odd or negative difference between nu=" + std::to_string(i) + " and nu=" +
                          std::to_string(i + 2));
      break;
    }
    if (diff > 0) out.exponents.push_back(diff / 2);
    i += 2;
    cur = next;
  }
  out.length = *d(r) - inf;
  std::sort(out.exponents.rbegin(), out.exponents.rend());
  if (out.status != PredictionStatus::Ok) {
    out.exponents.clear();
    return out;
  }
  std::string tors;
  for (int e : out.exponents) tors += (tors.empty() ? "" : " + ") + cyclic(dc.p, e);
  const std::string div = r == 0 ? "" : "(Q_" + std::to_string(dc.p) + "/Z_" + std::to_string(dc.p) + ")" +
                                            (r > 1 ? "^" + std::to_string(r) : "");
  out.group = div.empty() && tors.empty() ? "0" : div + (!div.empty() && !tors.empty() ? " + " : "") + tors;
  out.sha = tors.empty() ? "0" : tors;
  return out;
}

int rank_upper_bound(const kn::KuriharaNumber& witness) {
  if (!witness.nonzero()) throw std::invalid_argument("rank_upper_bound: witness vanishes");
  return witness.nu();
}

Parity parity_check(const kn::DeltaCollection& dc, int w) {
  if (!dc.ord_estimate) throw std::invalid_argument("parity_check: no ord estimate");
  return ((*dc.ord_estimate % 2 == 0) ? 1 : -1) == w ? Parity::Consistent : Parity::Inconsistent;
}

TamagawaReport tamagawa_conjecture_check(const kn::DeltaCollection& dc, const std::vector<curve::LocalData>& local) {
  TamagawaReport rep;
  for (const auto& ld : local) rep.tamagawa_valuation += arith::valuation(static_cast<std::int64_t>(ld.tamagawa), dc.p);
  rep.partial_infinity = dc.partial_infinity;
  if (!dc.partial_infinity || *dc.partial_infinity > rep.tamagawa_valuation)
    rep.status = TamagawaStatus::UpperBoundOnly;
  else if (*dc.partial_infinity == rep.tamagawa_valuation)
    rep.status = TamagawaStatus::Match;
  else
    rep.status = TamagawaStatus::Mismatch;
  return rep;
}

Hypotheses check_hypotheses(const curve::CurveContext& ctx, std::uint64_t p, bool assert_manin,
                            bool assert_surjective, std::size_t rho_samples) {
  Hypotheses h;
  h.rho = curve::rho_surjectivity_probable(ctx, p, rho_samples);
  h.rho_asserted = assert_surjective;
  h.manin = curve::manin_constant_ok(ctx, p);
  h.manin_asserted = assert_manin;
  h.local_torsion = curve::local_torsion(ctx, p);
  h.tamagawa_prime_to_p = std::all_of(ctx.local_data().begin(), ctx.local_data().end(),
                                      [&](const curve::LocalData& ld) { return ld.tamagawa % p != 0; });
  return h;
}

SemilocalReport semilocal_report(const kn::DeltaCollection& dc, const curve::CurveContext& ctx, const Hypotheses& hyp,
                                 std::mt19937_64& rng) {
  SemilocalReport rep;
  const std::string ps = std::to_string(dc.p);
  if (!hyp.rho_ok()) rep.reasons.push_back("residual representation not shown surjective");
  if (!hyp.manin_ok()) rep.reasons.push_back("Manin constant condition needs assertion");
  if (hyp.local_torsion.status != curve::TorsionStatus::Trivial)
    rep.reasons.push_back("E(Q_" + ps + ")[" + ps + "] " + curve::to_string(hyp.local_torsion.status));
  if (!hyp.tamagawa_prime_to_p) rep.reasons.push_back(ps + " divides a Tamagawa number");
  if (!dc.mod_p_ord) {
    rep.reasons.push_back("no mod-" + ps + " witness");
    return rep;
  }

  // The candidate description is computed whenever a witness exists; it is
  // certified only when every hypothesis holds.
  const int nu = *dc.mod_p_ord;
  for (std::size_t i = 0; i < dc.entries.size(); ++i) {
    const auto& kn = dc.entries[i];
    if (!dc.is_audit[i] && kn.nu() == nu && kn.valuation == 0) {
      rep.witness = kn.n;
      rep.nu = nu;
      for (std::uint64_t ell : kn.factors) {
        const auto s = curve::sylow_structure(ctx, ell, dc.p, rng);
        rep.factors.push_back({ell, s.e1, s.e2, s.rank()});
        rep.selmer_dimension += s.rank();
      }
      break;
    }
  }
  if (!rep.witness) {
    rep.reasons.push_back("no mod-" + ps + " witness");
    return rep;
  }
  rep.applicable = rep.reasons.empty();
  std::string rhs;
  for (const auto& f : rep.factors) rhs += (rhs.empty() ? "" : " ⊕ ") + ("E(F_" + std::to_string(f.ell) + ")⊗Z/" + ps);
  rep.isomorphism = "Sel(Q, E[" + ps + "]) ≅ " + (rhs.empty() ? "0" : rhs);
  rep.rank_formula = "rk E(Q) = " + std::to_string(nu) + " if Sha[" + ps + "] = 0";
  return rep;
}

}  // namespace kurihara::selmer
