#include "doctest.h"

#include <memory>

#include "kurihara/kurihara.hpp"

using namespace kurihara;
using namespace kurihara::kn;
using kolyvagin::KolyvaginPrime;
using kolyvagin::Modulus;

namespace {

struct Curve {
  curve::CurveContext ctx;
  modsym::EigenSymbol es;
  explicit Curve(std::array<long, 5> a)
      : ctx(curve::WeierstrassModel::from_ints(a[0], a[1], a[2], a[3], a[4])), es(modsym::build_eigensymbol(ctx)) {
    ctx.set_root_number(es.root_number());
    modsym::normalize(es, ctx, 5, modsym::NormalizeOptions{});
  }
};

const Curve& c37() {
  static Curve c({0, 0, 1, -1, 0});
  return c;
}
const Curve& c389() {
  static Curve c({0, 1, 1, -2, 0});
  return c;
}
const Curve& c1058() {
  static Curve c({1, -1, 0, -332311, -73733731});
  return c;
}

Modulus modulus(const curve::CurveContext& ctx, std::initializer_list<std::uint64_t> ells) {
  std::vector<KolyvaginPrime> ps;
  for (auto ell : ells) {
    auto q = kolyvagin::kolyvagin_prime(ctx, 5, ell);
    REQUIRE(q);
    ps.push_back(*q);
  }
  return Modulus(ps);
}

std::uint64_t other_root(std::uint64_t ell, std::uint64_t avoid) {
  for (std::uint64_t g = 2;; ++g)
    if (g != avoid && arith::is_primitive_root(g, ell)) return g;
}

}  // namespace

TEST_CASE("delta on 389a1") {
  const auto& c = c389();
  CHECK(delta_1(c.es).value == 0);
  const Modulus m = modulus(c.ctx, {41, 61});
  const auto kn = delta(c.es, m, 1);
  CHECK(kn.nonzero());
  CHECK(kn.valuation == 0);
  CHECK(kn.valuation_string() == "0");
  CHECK(functional_sign_check(1, m, kn) == SignStatus::Consistent);
  CHECK(unit_invariance_audit(c.es, m, 1, {other_root(41, m.primes()[0].eta()), 0}));
  CHECK(unit_invariance_audit(c.es, m, 1, {other_root(41, m.primes()[0].eta()), other_root(61, m.primes()[1].eta())}));
  // Thread count does not change the value.
  CHECK(delta(c.es, m, 1, 3).value == kn.value);
  // Wrong parity: single primes vanish.
  for (std::uint64_t ell : {41, 61}) CHECK_FALSE(delta(c.es, modulus(c.ctx, {ell}), 1).nonzero());
}

TEST_CASE("Mazur-Tate truncation") {
  const auto& c = c389();
  const Modulus m = modulus(c.ctx, {41, 61});
  const auto mt = mazur_tate_truncation(c.es, m, 1);
  REQUIRE(mt.coefficients.size() == 4);
  CHECK(mt.top() == delta(c.es, m, 1).value);
  // Empty subset: plain sum of symbols over units.
  std::uint64_t s = 0;
  for (std::int64_t a = 1; a < 41 * 61; ++a)
    if (a % 41 && a % 61) s = (s + c.es.residue(a, 41 * 61, 5)) % 5;
  CHECK(mt.coefficients[0] == s);
  // Single prime: the coefficient is delta~_ell.
  const Modulus one = modulus(c.ctx, {41});
  CHECK(mazur_tate_truncation(c.es, one, 1).coefficients[1] == delta(c.es, one, 1).value);
  // Throws beyond v(I_n).
  CHECK_THROWS_AS(delta(c.es, one, 1 + kolyvagin::i_valuation(one)), std::invalid_argument);
}

TEST_CASE("reduction consistency across k") {
  const auto& c = c389();
  const auto deep = kolyvagin::sieve(c.ctx, 5, 2, 6000);
  REQUIRE(!deep.empty());
  for (std::size_t i = 0; i < std::min<std::size_t>(3, deep.size()); ++i) {
    const Modulus m({deep[i]});
    const int k = kolyvagin::i_valuation(m);
    const auto hi = delta(c.es, m, k);
    for (int kk = 1; kk < k; ++kk) {
      std::uint64_t pk = 1;
      for (int j = 0; j < kk; ++j) pk *= 5;
      CHECK(delta(c.es, m, kk).value == hi.value % pk);
    }
  }
}

TEST_CASE("functional sign check") {
  const Modulus one;
  KuriharaNumber z;
  z.k_used = 1;
  z.valuation = 1;
  KuriharaNumber nz = z;
  nz.value = 3;
  nz.valuation = 0;
  nz.factors = {41};
  const KolyvaginPrime q(41, 0, 1, 6);
  const Modulus m1({q});
  CHECK(functional_sign_check(1, one, nz) == SignStatus::Consistent);
  CHECK(functional_sign_check(1, m1, z) == SignStatus::Consistent);
  CHECK(functional_sign_check(-1, m1, nz) == SignStatus::Consistent);
  CHECK(functional_sign_check(1, m1, nz) == SignStatus::Violation);
}

TEST_CASE("scan on 389a1") {
  const auto& c = c389();
  const auto pool = kolyvagin::sieve(c.ctx, 5, 1, 200);
  ScanOptions opt;
  opt.k = 1;
  opt.bound = 200;
  opt.nu_max = 2;
  opt.budget = 6;
  const auto dc = scan(c.es, pool, opt);
  REQUIRE(dc.ord_estimate);
  CHECK(*dc.ord_estimate == 2);
  CHECK(dc.parity_audit_pass);
  CHECK(dc.partial(2).witnessed);
  CHECK(dc.partial(2).witness == 41u * 61u);
  CHECK(dc.partial(1).audit);
  CHECK(dc.partial_infinity == 0);
  // Cross-implementation and root-change checks on every entry.
  for (std::size_t i = 0; i < dc.entries.size(); ++i) {
    const auto& kn = dc.entries[i];
    if (kn.nu() == 0) continue;
    std::vector<KolyvaginPrime> ps;
    std::vector<std::uint64_t> alt;
    for (auto ell : kn.factors) {
      ps.push_back(*kolyvagin::kolyvagin_prime(c.ctx, 5, ell));
      alt.push_back(other_root(ell, ps.back().eta()));
    }
    const Modulus m(ps);
    CHECK(mazur_tate_truncation(c.es, m, kn.k_used).top() == kn.value);
    CHECK(unit_invariance_audit(c.es, m, kn.k_used, alt));
  }

  opt.budget = 0;
  opt.audit_samples = 0;
  const auto empty = scan(c.es, pool, opt);
  CHECK_FALSE(empty.ord_estimate);
  CHECK(empty.partial(2).min_valuation == 1);
  CHECK_FALSE(empty.partial(2).witnessed);
}

TEST_CASE("1058.e1: exact delta_1 and mod-5 witness") {
  const auto& c = c1058();
  const auto d1 = delta_1(c.es);
  REQUIRE(d1.pinned);
  CHECK(*d1.pinned == 25);
  CHECK(d1.valuation == 2);
  CHECK(delta(c.es, modulus(c.ctx, {131, 151}), 1).nonzero());

  ScanOptions opt;
  opt.k = 1;
  opt.nu_max = 2;
  opt.budget = 40;
  const auto pool = kolyvagin::sieve(c.ctx, 5, 1, 160);
  const auto dc = scan(c.es, pool, opt);
  CHECK(dc.ord_estimate == 0);
  CHECK(dc.mod_p_ord == 2);
  CHECK(dc.partial(0).min_valuation == 2);
  CHECK(dc.partial(2).min_valuation == 0);
  CHECK(dc.parity_audit_pass);
  CHECK_FALSE(dc.precision_limited);
}

TEST_CASE("parity vanishing on 37a1") {
  const auto& c = c37();
  CHECK(c.es.root_number() == -1);
  ScanOptions opt;
  opt.nu_max = 2;
  opt.budget = 3;
  opt.audit_samples = 5;
  const auto dc = scan(c.es, kolyvagin::sieve(c.ctx, 5, 1, 1500), opt);
  CHECK(dc.parity_audit_pass);
  CHECK(dc.partial(0).audit);
  CHECK(dc.partial(2).audit);
  CHECK(dc.partial(2).computed == 5);
  CHECK(dc.ord_estimate == 1);
}
