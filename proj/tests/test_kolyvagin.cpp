#include "doctest.h"

#include <algorithm>
#include <random>

#include "kurihara/kolyvagin.hpp"

using namespace kurihara;
using namespace kurihara::kolyvagin;
using curve::CurveContext;
using curve::WeierstrassModel;

namespace {

CurveContext make(long a1, long a2, long a3, long a4, long a6) {
  return CurveContext(WeierstrassModel::from_ints(a1, a2, a3, a4, a6));
}

std::vector<std::uint64_t> ells(const std::vector<KolyvaginPrime>& ps) {
  std::vector<std::uint64_t> out;
  for (const auto& q : ps) out.push_back(q.ell());
  return out;
}

bool contains(const std::vector<std::uint64_t>& v, std::uint64_t x) { return std::find(v.begin(), v.end(), x) != v.end(); }

// All r-subsets of {0..n-1} sorted colexicographically (compare largest element first).
std::vector<std::vector<std::size_t>> colex_reference(std::size_t n, std::size_t r) {
  std::vector<std::vector<std::size_t>> all;
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    if (static_cast<std::size_t>(__builtin_popcount(mask)) != r) continue;
    std::vector<std::size_t> s;
    for (std::size_t i = 0; i < n; ++i)
      if (mask >> i & 1) s.push_back(i);
    all.push_back(s);
  }
  std::sort(all.begin(), all.end(), [](auto x, auto y) {
    std::reverse(x.begin(), x.end());
    std::reverse(y.begin(), y.end());
    return x < y;
  });
  return all;
}

}  // namespace

TEST_CASE("k_ell and i_valuation") {
  CHECK(k_ell(11, 137, 5) == 1);  // v(10) = 1, v(125) = 3
  CHECK(k_ell(251, 252, 5) == 3);  // a = ell + 1: only v(ell - 1) counts
  CHECK(k_ell(13, 0, 5) == 0);

  const KolyvaginPrime a(101, 2, 2, 2), b(11, 2, 1, 2);
  CHECK(i_valuation(Modulus({a})) == 2);
  CHECK(i_valuation(Modulus({a, b})) == 1);
  CHECK_THROWS_AS(i_valuation(Modulus()), std::invalid_argument);
  CHECK_THROWS_AS(Modulus({a, a}), std::invalid_argument);
}

TEST_CASE("sieve contents") {
  const CurveContext e389 = make(0, 1, 1, -2, 0);
  const auto s100 = ells(sieve(e389, 5, 1, 100));
  CHECK(contains(s100, 41));
  CHECK(contains(s100, 61));
  CHECK(sieve(e389, 5, 1, 10).empty());
  CHECK_THROWS_AS(sieve(e389, 4, 1, 100), std::invalid_argument);

  const CurveContext e5077 = make(0, 0, 1, -7, 6);
  const auto s700 = ells(sieve(e5077, 5, 1, 700));
  for (std::uint64_t ell : {71, 401, 631}) CHECK(contains(s700, ell));
}

TEST_CASE("sieve agrees with exhaustive point counts") {
  for (auto a : {std::array<long, 5>{0, 1, 1, -2, 0}, std::array<long, 5>{0, 0, 1, -1, 0}}) {
    const CurveContext e = make(a[0], a[1], a[2], a[3], a[4]);
    const auto got = sieve(e, 5, 1, 600);
    // Completeness and soundness against every prime below the bound.
    std::vector<std::uint64_t> expect;
    for (std::uint64_t ell : arith::primes_up_to(600)) {
      if (ell == 5 || e.level() % ell == 0) continue;
      const auto ap = static_cast<std::int64_t>(ell + 1) -
                      static_cast<std::int64_t>(curve::count_points_exhaustive(e.model(), ell));
      if ((ell - 1) % 5 == 0 && (ap - static_cast<std::int64_t>(ell) - 1) % 5 == 0) expect.push_back(ell);
    }
    CHECK(ells(got) == expect);
    for (std::size_t i = 0; i < std::min<std::size_t>(10, got.size()); ++i) {
      const auto& q = got[i];
      CHECK(q.a_ell() == static_cast<std::int64_t>(q.ell() + 1) -
                             static_cast<std::int64_t>(curve::count_points_exhaustive(e.model(), q.ell())));
      CHECK(arith::is_primitive_root(q.eta(), q.ell()));
      CHECK(q.logs().log(q.eta()) == 1);
    }
  }
}

TEST_CASE("deeper sieve levels") {
  const CurveContext e = make(0, 1, 1, -2, 0);
  const auto k1 = sieve(e, 5, 1, 3000);
  const auto k2 = sieve(e, 5, 2, 3000);
  std::vector<std::uint64_t> from_k1;
  for (const auto& q : k1)
    if (q.k_ell() >= 2) from_k1.push_back(q.ell());
  CHECK(ells(k2) == from_k1);
}

TEST_CASE("Kolyvagin prime 93251 for 196794.bf1") {
  const CurveContext e(WeierstrassModel({BigInt(1), BigInt(-1), BigInt(0), BigInt("-672055191"),
                                         BigInt("-6705708066275")}));
  const auto q = kolyvagin_prime(e, 5, 93251);
  REQUIRE(q);
  CHECK(i_valuation(Modulus({*q})) >= 3);
  // 13 divides the conductor and 13 - 1 is prime to 5.
  CHECK_FALSE(kolyvagin_prime(e, 5, 13));
}

TEST_CASE("colex enumeration") {
  const std::vector<KolyvaginPrime> pool{{41, 0, 1, 6}, {61, 0, 1, 2}, {101, 0, 1, 2}};
  auto ns = [](const std::vector<Modulus>& ms) {
    std::vector<std::uint64_t> out;
    for (const auto& m : ms) out.push_back(m.n());
    return out;
  };
  CHECK(ns(enumerate_moduli(pool, 0, 5)) == std::vector<std::uint64_t>{1});
  CHECK(ns(enumerate_moduli(pool, 2, 3)) == std::vector<std::uint64_t>{41 * 61, 41 * 101, 61 * 101});
  CHECK(enumerate_moduli(pool, 2, 0).empty());
  CHECK(enumerate_moduli(pool, 4, 10).empty());

  // Against the reference generator on a pool of 9 primes.
  std::vector<KolyvaginPrime> big;
  std::mt19937_64 rng(3);
  for (std::uint64_t ell : {11, 31, 41, 61, 71, 101, 131, 151, 181}) {
    const int k = 1 + static_cast<int>(rng() % 3);
    big.emplace_back(ell, 0, k, arith::primitive_root(ell));
  }
  for (std::size_t r = 0; r <= 4; ++r) {
    const auto ref = colex_reference(big.size(), r);
    for (std::size_t budget : {std::size_t{0}, std::size_t{7}, ref.size(), ref.size() + 5}) {
      const auto got = enumerate_moduli(big, static_cast<int>(r), budget);
      REQUIRE(got.size() == std::min(budget, ref.size()));
      for (std::size_t i = 0; i < got.size(); ++i) {
        std::uint64_t n = 1;
        int v = 1 << 20;
        for (std::size_t j : ref[i]) {
          n *= big[j].ell();
          v = std::min(v, big[j].k_ell());
        }
        CHECK(got[i].n() == n);
        if (r > 0) CHECK(i_valuation(got[i]) == v);
      }
    }
  }
}
