#include "doctest.h"

#include <random>

#include "kurihara/arith.hpp"

using namespace kurihara;
using namespace kurihara::arith;

namespace {

// Trial-division oracle.
bool slow_prime(std::uint64_t n) {
  if (n < 2) return false;
  for (std::uint64_t d = 2; d * d <= n; ++d)
    if (n % d == 0) return false;
  return true;
}

}  // namespace

TEST_CASE("primality matches trial division") {
  for (std::uint64_t n = 0; n < 5000; ++n) CHECK(is_prime(n) == slow_prime(n));
  CHECK(is_prime(93251));
  CHECK(is_prime(1000000007ULL));
  CHECK_FALSE(is_prime(3215031751ULL));  // strong pseudoprime to 2,3,5,7
  CHECK(is_prime(18446744073709551557ULL));
}

TEST_CASE("factorization") {
  CHECK(factorize(1).empty());
  CHECK(factorize(1058) == Factorization{{2, 1}, {23, 2}});
  CHECK(factorize(423801) == Factorization{{3, 2}, {7, 2}, {31, 2}});
  CHECK(factorize(196794) == Factorization{{2, 1}, {3, 2}, {13, 1}, {29, 2}});
  const std::uint64_t big = 1000000007ULL * 998244353ULL;
  CHECK(factorize(big) == Factorization{{998244353ULL, 1}, {1000000007ULL, 1}});
}

TEST_CASE("primitive roots and logs") {
  CHECK(primitive_root(3) == 2);
  CHECK(primitive_root(41) == 6);
  CHECK(primitive_root(61) == 2);
  CHECK_FALSE(is_primitive_root(4, 41));
  LogTable t(41, 6);
  CHECK(t.log(36) == 2);
  CHECK(t.log(1) == 0);
  for (std::uint64_t a = 1; a < 41; ++a) CHECK(pow_mod(6, t.log(a), 41) == a);
  CHECK_THROWS_AS(LogTable(41, 4), std::invalid_argument);
}

TEST_CASE("quadratic symbols") {
  for (std::uint64_t ell : {3ULL, 5ULL, 13ULL, 101ULL}) {
    for (std::uint64_t a = 1; a < ell; ++a) {
      const int euler = pow_mod(a, (ell - 1) / 2, ell) == 1 ? 1 : -1;
      CHECK(legendre(a, ell) == euler);
      CHECK(kronecker(static_cast<std::int64_t>(a), ell) == euler);
      auto r = sqrt_mod(a, ell);
      CHECK(r.has_value() == (euler == 1));
      if (r) CHECK(mul_mod(*r, *r, ell) == a);
    }
  }
  CHECK(kronecker(5, 2) == -1);
  CHECK(kronecker(-3, 2) == -1);
  CHECK(kronecker(8, 3) == -1);
}

TEST_CASE("valuations") {
  CHECK(valuation(BigInt(25), 5) == 2);
  CHECK(valuation(BigInt(10000), 5) == 4);
  CHECK(valuation(BigInt(0), 5) == kInfiniteValuation);
  CHECK(valuation(BigRational(2, 25), 5) == -2);
  CHECK(valuation(std::int64_t{-250}, 5) == 3);
}

TEST_CASE("rational reconstruction") {
  const std::uint64_t m = 1000000007ULL;
  const std::uint64_t r = mul_mod(2, *inv_mod(5, m), m);
  auto q = rational_reconstruct(Residue(r, m), 1000, 1000);
  REQUIRE(q.has_value());
  CHECK(*q == BigRational(2, 5));
  CHECK(*rational_reconstruct(Residue(50, 101), 3, 3) == BigRational(-1, 2));
  CHECK_FALSE(rational_reconstruct(Residue(7, 101), 3, 3).has_value());
  std::mt19937_64 rng(7);
  for (int i = 0; i < 500; ++i) {
    const std::int64_t n = static_cast<std::int64_t>(rng() % 20001) - 10000;
    const std::int64_t d = static_cast<std::int64_t>(rng() % 10000) + 1;
    BigRational x(n, d);
    x.canonicalize();
    const auto red = reduce(x, m);
    REQUIRE(red.has_value());
    auto back = rational_reconstruct(Residue(*red, m), 10000, 10000);
    REQUIRE(back.has_value());
    CHECK(*back == x);
  }
  auto neg = rational_reconstruct(BigInt(m - 7), BigInt(m), BigInt(100), BigInt(100));
  REQUIRE(neg.has_value());
  CHECK(*neg == BigRational(-7));
}

TEST_CASE("crt and rational parsing") {
  BigInt x = crt(BigInt(2), BigInt(3), 3, 5);
  CHECK(x == 8);
  CHECK(parse_rational("-6/4") == BigRational(-3, 2));
  CHECK(to_string(BigRational(10, 4)) == "5/2");
  CHECK(to_string(BigRational(-7)) == "-7");
}
