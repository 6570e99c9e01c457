#include "doctest.h"

#include "kurihara/selmer.hpp"

using namespace kurihara;
using namespace kurihara::selmer;
using kn::DeltaCollection;
using kn::PartialRecord;

namespace {

// A collection whose right-parity partials have the given witnessed minima
// (-1: nothing witnessed), for nu = 0..size-1.
DeltaCollection synthetic(int w, const std::vector<int>& mins, int k = 1) {
  DeltaCollection dc;
  dc.p = 5;
  dc.k = k;
  dc.root_number = w;
  dc.nu_max = static_cast<int>(mins.size()) - 1;
  for (int nu = 0; nu <= dc.nu_max; ++nu) {
    PartialRecord pr;
    pr.nu = nu;
    pr.audit = (nu % 2 == 0 ? 1 : -1) != w;
    const int m = mins[static_cast<std::size_t>(nu)];
    pr.witnessed = !pr.audit && m >= 0;
    pr.min_valuation = pr.witnessed ? m : k;
    pr.computed = 10;
    pr.attained = 3;
    pr.saturated = pr.witnessed;
    if (pr.witnessed) {
      if (!dc.ord_estimate) dc.ord_estimate = nu;
      if (!dc.partial_infinity || m < *dc.partial_infinity) dc.partial_infinity = m;
    }
    dc.partials.push_back(pr);
  }
  return dc;
}

}  // namespace

TEST_CASE("structure predictions") {
  {
    const auto s = predict_structure(synthetic(1, {2, -1, 0}));
    CHECK(s.status == PredictionStatus::Ok);
    CHECK(s.corank == 0);
    CHECK(s.exponents == std::vector<int>{1});
    CHECK(s.sha == "(Z/5)^2");
    CHECK(s.length == 2);
    REQUIRE(s.fitting.size() == 2);
    CHECK(s.fitting[0] == std::pair<int, std::optional<int>>{0, 2});
    CHECK(s.fitting[1] == std::pair<int, std::optional<int>>{2, 0});
  }
  {
    const auto s = predict_structure(synthetic(1, {4, -1, 0}));
    CHECK(s.exponents == std::vector<int>{2});
    CHECK(s.sha == "(Z/25)^2");
    CHECK(s.group == "(Z/25)^2");
  }
  {
    // Two steps: 6 -> 2 -> 0 gives exponents 2 and 1.
    const auto s = predict_structure(synthetic(1, {6, -1, 2, -1, 0}));
    CHECK(s.exponents == std::vector<int>{2, 1});
    CHECK(s.sha == "(Z/25)^2 + (Z/5)^2");
  }
  {
    const auto s = predict_structure(synthetic(1, {0, -1, 0}));
    CHECK(s.sha == "0");
    CHECK(s.group == "0");
    CHECK(s.length == 0);
  }
  {
    const auto s = predict_structure(synthetic(1, {-1, -1, 0}));
    CHECK(s.corank == 2);
    CHECK(s.group == "(Q_5/Z_5)^2");
    CHECK(s.sha == "0");
    REQUIRE(s.fitting.size() == 3);
    CHECK_FALSE(s.fitting[0].second);
    CHECK_FALSE(s.fitting[1].second);
    CHECK(s.fitting[2].second == 0);
  }
  {
    const auto s = predict_structure(synthetic(-1, {-1, 2, -1, 0}, 3));
    CHECK(s.corank == 1);
    CHECK(s.group == "(Q_5/Z_5) + (Z/5)^2");
  }
  {
    // Odd difference: no group is emitted.
    const auto s = predict_structure(synthetic(1, {3, -1, 0}));
    CHECK(s.status == PredictionStatus::Unsaturated);
    CHECK(s.group.empty());
    CHECK(s.exponents.empty());
  }
  {
    // Needed index not witnessed.
    const auto s = predict_structure(synthetic(1, {2, -1, -1, -1, 0}));
    CHECK(s.status == PredictionStatus::Unsaturated);
  }
  CHECK(predict_structure(synthetic(1, {-1, -1, -1})).status == PredictionStatus::NoWitness);
}

TEST_CASE("nested budgets refine monotonically") {
  // A larger search can only lower minima; exponents never go negative.
  const auto coarse = predict_structure(synthetic(1, {4, -1, 2}));
  const auto fine = predict_structure(synthetic(1, {4, -1, 0}));
  CHECK(coarse.exponents == std::vector<int>{1});
  CHECK(fine.exponents == std::vector<int>{2});
  for (int e : fine.exponents) CHECK(e > 0);
}

TEST_CASE("rank bound, parity and Tamagawa checks") {
  kn::KuriharaNumber w;
  w.k_used = 1;
  w.value = 2;
  w.valuation = 0;
  w.factors = {41, 61};
  CHECK(rank_upper_bound(w) == 2);
  w.factors = {71, 401, 631};
  CHECK(rank_upper_bound(w) == 3);
  w.factors = {};
  CHECK(rank_upper_bound(w) == 0);
  w.value = 0;
  w.valuation = 1;
  CHECK_THROWS_AS(rank_upper_bound(w), std::invalid_argument);

  CHECK(parity_check(synthetic(1, {-1, -1, 0}), 1) == Parity::Consistent);
  CHECK(parity_check(synthetic(-1, {-1, -1, -1, 0}), -1) == Parity::Consistent);
  auto bad = synthetic(1, {-1, -1, 0});
  bad.ord_estimate = 1;
  CHECK(parity_check(bad, 1) == Parity::Inconsistent);
  CHECK_THROWS_AS(parity_check(synthetic(1, {-1}), 1), std::invalid_argument);

  std::vector<curve::LocalData> local(2);
  local[0].tamagawa = 2;
  local[1].tamagawa = 1;
  CHECK(tamagawa_conjecture_check(synthetic(1, {-1, -1, 0}), local).status == TamagawaStatus::Match);
  local[1].tamagawa = 5;
  CHECK(tamagawa_conjecture_check(synthetic(1, {-1, -1, 0}), local).status == TamagawaStatus::Mismatch);
  CHECK(tamagawa_conjecture_check(synthetic(1, {-1, -1, 2}), local).status == TamagawaStatus::UpperBoundOnly);
}

TEST_CASE("semi-local report") {
  curve::CurveContext ctx(curve::WeierstrassModel::from_ints(0, 1, 1, -2, 0));
  auto es = modsym::build_eigensymbol(ctx);
  ctx.set_root_number(es.root_number());
  modsym::normalize(es, ctx, 5, modsym::NormalizeOptions{});
  kn::ScanOptions opt;
  opt.nu_max = 2;
  opt.budget = 1;
  const auto dc = kn::scan(es, kolyvagin::sieve(ctx, 5, 1, 100), opt);
  const auto hyp = check_hypotheses(ctx, 5, false, false);
  std::mt19937_64 rng(1);
  const auto rep = semilocal_report(dc, ctx, hyp, rng);
  REQUIRE(rep.applicable);
  CHECK(rep.witness == 41u * 61u);
  REQUIRE(rep.factors.size() == 2);
  CHECK(rep.factors[0].ell == 41);
  CHECK(rep.factors[1].ell == 61);
  for (const auto& f : rep.factors) CHECK(f.dimension >= 1);
  CHECK(rep.isomorphism == "Sel(Q, E[5]) ≅ E(F_41)⊗Z/5 ⊕ E(F_61)⊗Z/5");

  Hypotheses weak = hyp;
  weak.local_torsion.status = curve::TorsionStatus::Indeterminate;
  const auto na = semilocal_report(dc, ctx, weak, rng);
  CHECK_FALSE(na.applicable);
  CHECK_FALSE(na.reasons.empty());
}
