#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include <json.hpp>

#include "kurihara/analytic.hpp"
#include "kurihara/modsym.hpp"

using namespace kurihara;
using namespace kurihara::modsym;
using curve::CurveContext;
using curve::WeierstrassModel;

namespace {

// Genus of X_0(N) from the standard formula (independent of the symbol code).
long genus_x0(std::uint64_t N) {
  const auto f = arith::factorize(N);
  long mu = static_cast<long>(N);
  for (auto [q, e] : f) mu = mu / static_cast<long>(q) * static_cast<long>(q + 1);
  long nu2 = N % 4 == 0 ? 0 : 1, nu3 = N % 9 == 0 ? 0 : 1;
  for (auto [q, e] : f) {
    nu2 *= 1 + (q == 2 ? 0 : arith::kronecker(-1, q));
    nu3 *= 1 + (q == 3 ? 0 : arith::kronecker(-3, q));
  }
  long cusps = 0;
  for (std::uint64_t d = 1; d <= N; ++d) {
    if (N % d) continue;
    const std::uint64_t g = static_cast<std::uint64_t>(arith::gcd(static_cast<std::int64_t>(d), static_cast<std::int64_t>(N / d)));
    long phi = 0;
    for (std::uint64_t x = 1; x <= g; ++x) phi += arith::gcd(static_cast<std::int64_t>(x), static_cast<std::int64_t>(g)) == 1;
    cusps += phi;
  }
  // 12 g = 12 + mu - 3 nu2 - 4 nu3 - 6 cusps
  return (12 + mu - 3 * nu2 - 4 * nu3 - 6 * cusps) / 12;
}

CurveContext make(long a1, long a2, long a3, long a4, long a6) {
  return CurveContext(WeierstrassModel::from_ints(a1, a2, a3, a4, a6));
}

std::uint32_t fp() { return field_primes(1)[0]; }

}  // namespace

TEST_CASE("P1 enumeration") {
  CHECK(P1List(1).size() == 1);
  CHECK(P1List(11).size() == 12);
  CHECK(P1List(1058).size() == 1656);
  for (std::uint64_t N : {2ULL, 6ULL, 12ULL, 25ULL, 36ULL, 60ULL, 97ULL}) {
    P1List l(N);
    // Oracle: classes of pairs with gcd(c, d, N) = 1 under scaling by units.
    std::set<std::set<std::pair<std::uint64_t, std::uint64_t>>> classes;
    std::map<std::pair<std::uint64_t, std::uint64_t>, std::size_t> seen;
    for (std::uint64_t c = 0; c < N; ++c)
      for (std::uint64_t d = 0; d < N; ++d) {
        if (arith::gcd(arith::gcd(c, d), N) != 1) continue;
        std::set<std::pair<std::uint64_t, std::uint64_t>> cls;
        for (std::uint64_t u = 1; u < N || (N == 1 && u == 1); ++u)
          if (arith::gcd(u, N) == 1) cls.insert({c * u % N, d * u % N});
        classes.insert(cls);
        const std::size_t idx = l.index(static_cast<std::int64_t>(c), static_cast<std::int64_t>(d));
        const auto e = l.element(idx);
        CHECK(cls.count({e.c, e.d}) == 1);
        CHECK(l.index(static_cast<std::int64_t>(e.c), static_cast<std::int64_t>(e.d)) == idx);
      }
    CHECK(classes.size() == l.size());
    CHECK_FALSE(l.try_index(0, 0).has_value());
  }
}

TEST_CASE("Merel's Heilbronn set matches its defining conditions") {
  for (std::int64_t n = 1; n <= 15; ++n) {
    std::set<Mat2> brute;
    for (std::int64_t a = 1; a <= n; ++a)
      for (std::int64_t b = 0; b < a; ++b)
        for (std::int64_t d = 1; d <= n; ++d)
          for (std::int64_t c = 0; c < d; ++c)
            if (a * d - b * c == n) brute.insert({a, b, c, d});
    const auto m = heilbronn_merel(static_cast<std::uint64_t>(n));
    CHECK(std::set<Mat2>(m.begin(), m.end()) == brute);
    CHECK(m.size() == brute.size());
  }
  for (const auto& M : heilbronn_cremona(7)) CHECK(M[0] * M[3] - M[1] * M[2] == 7);
}

TEST_CASE("cuspidal dimension equals genus") {
  for (std::uint64_t N : {11ULL, 37ULL, 389ULL, 1058ULL, 60ULL, 64ULL, 90ULL, 121ULL}) {
    SymbolSpace sp(N);
    INFO("N = " << N);
    CHECK(static_cast<long>(sp.cuspidal_dimension()) == genus_x0(N));
  }
  CHECK(SymbolSpace(11).cuspidal_dimension() == 1);
  CHECK(SymbolSpace(37).cuspidal_dimension() == 2);
  CHECK(SymbolSpace(389).cuspidal_dimension() == 32);
}

TEST_CASE("Hecke action") {
  const std::uint32_t p = fp();
  SymbolSpace sp(11);
  // Eisenstein: boundary functionals are T_q-eigen with eigenvalue q + 1.
  for (std::size_t cls = 0; cls < sp.boundary_classes(); ++cls) {
    const auto phi = sp.boundary_functional(cls, p);
    for (std::uint64_t q : {2ULL, 3ULL, 5ULL, 7ULL}) {
      const auto img = sp.hecke_dual(q, phi, p);
      for (std::size_t g = 0; g < phi.size(); ++g) CHECK(img[g] == (q + 1) * phi[g] % p);
    }
  }
  // Cuspidal line of level 11: a_2 = -2.
  const CurveContext e11 = make(0, -1, 1, -10, -20);
  const auto e = extract_eigenline(sp, e11);
  CHECK(e.verified_hecke.front() == std::pair<std::uint64_t, std::int64_t>{2, -2});
  std::vector<std::uint32_t> phi(e.phi.size());
  for (std::size_t i = 0; i < phi.size(); ++i) phi[i] = static_cast<std::uint32_t>(arith::reduce(e.phi[i], p));
  const auto img = sp.hecke_dual(2, phi, p);
  for (std::size_t g = 0; g < phi.size(); ++g) CHECK(img[g] == (static_cast<std::uint64_t>(p) - 2) * phi[g] % p);
  // Wrong a_2 empties the eigenspace.
  CHECK_THROWS_AS(extract_eigenline(sp, [](std::uint64_t) { return std::int64_t{1}; }), ModsymError);

  // Commutativity and agreement of the two Heilbronn families, on random functionals.
  SymbolSpace big(389);
  const auto r = big.random_dual(p, 5);
  CHECK(big.hecke_dual(3, big.hecke_dual(2, r, p), p) == big.hecke_dual(2, big.hecke_dual(3, r, p), p));
  for (std::uint64_t q : {2ULL, 5ULL, 7ULL}) {
    const auto H = heilbronn_merel(q);
    std::vector<std::uint32_t> via_merel(r.size());
    for (std::uint32_t g = 0; g < big.num_generators(); ++g) {
      const auto el = big.p1().element(big.representative(g));
      std::uint64_t s = 0;
      for (const auto& M : H) {
        const std::int64_t c = static_cast<std::int64_t>(el.c), d = static_cast<std::int64_t>(el.d);
        const auto j = big.p1().try_index(c * M[0] + d * M[2], c * M[1] + d * M[3]);
        if (!j) continue;
        const auto [h, sg] = big.generator_of(*j);
        if (sg > 0) s += r[h];
        if (sg < 0) s += p - r[h];
      }
      via_merel[g] = static_cast<std::uint32_t>(s % p);
    }
    CHECK(via_merel == big.hecke_dual(q, r, p));
  }
}

TEST_CASE("eigenline of 11a1 and value properties") {
  CurveContext e = make(0, -1, 1, -10, -20);
  EigenSymbol es = build_eigensymbol(e);
  CHECK(es.root_number() == 1);
  e.set_root_number(es.root_number());
  NormalizeOptions opt;
  const auto rep = normalize(es, e, 5, opt);
  CHECK(rep.pinned);
  CHECK(es.pinned_value(0, 1) == BigRational(1, 5));
  // The twist route pins the same scale.
  EigenSymbol es2 = build_eigensymbol(e);
  opt.force_twist = true;
  const auto rep2 = normalize(es2, e, 5, opt);
  REQUIRE(rep2.pinned);
  CHECK(rep2.twist_used.has_value());
  CHECK(*es2.lambda_pinned() == *es.lambda_pinned());
  // Periodicity and plus symmetry.
  std::mt19937_64 rng(3);
  for (int i = 0; i < 50; ++i) {
    const std::int64_t m = 1 + static_cast<std::int64_t>(rng() % 200);
    std::int64_t a = static_cast<std::int64_t>(rng() % 1000);
    if (arith::gcd(a, m) != 1) continue;
    CHECK(es.raw(a, m) == es.raw(a + m, m));
    CHECK(es.raw(a, m) == es.raw(-a, m));
  }
}

TEST_CASE("Fricke signs") {
  struct Row {
    std::array<long, 5> a;
    int w;
  };
  for (const Row& r : {Row{{0, 0, 1, -1, 0}, -1}, Row{{0, 1, 1, -2, 0}, 1}, Row{{0, 0, 1, -7, 6}, -1},
                       Row{{1, -1, 0, -332311, -73733731}, 1}}) {
    CurveContext e = make(r.a[0], r.a[1], r.a[2], r.a[3], r.a[4]);
    const EigenSymbol es = build_eigensymbol(e);
    CHECK(es.root_number() == r.w);
    // Cross-oracle: completed theta symmetry at two sample points.
    for (const char* y : {"1.1", "1.3"}) {
      curve::PrecisionScope scope(96);
      const auto ratio = curve::theta_symmetry_ratio(e, curve::Real(y), 64);
      CHECK(abs(ratio - r.w) < curve::Real("1e-12"));
    }
  }
}

TEST_CASE("Hecke recurrence on values") {
  for (auto a : {std::array<long, 5>{0, 0, 1, -1, 0}, std::array<long, 5>{0, 1, 1, -2, 0},
                 std::array<long, 5>{1, -1, 0, -332311, -73733731}}) {
    CurveContext e = make(a[0], a[1], a[2], a[3], a[4]);
    const EigenSymbol es = build_eigensymbol(e);
    const std::int64_t N = static_cast<std::int64_t>(e.level());
    std::mt19937_64 rng(11);
    int tested = 0;
    while (tested < 25) {
      const std::int64_t m = 1 + static_cast<std::int64_t>(rng() % 60);
      const std::int64_t x = static_cast<std::int64_t>(rng() % static_cast<std::uint64_t>(m));
      const auto primes = arith::primes_up_to(13);
      const std::int64_t q = static_cast<std::int64_t>(primes[rng() % primes.size()]);
      if (arith::gcd(x, m) != 1 || (N * m) % q == 0) continue;
      BigInt rhs = es.raw(q * x, m);
      for (std::int64_t j = 0; j < q; ++j) rhs += es.raw(x + j * m, q * m);
      CHECK(BigInt(static_cast<long>(e.ap(static_cast<std::uint64_t>(q)))) * es.raw(x, m) == rhs);
      ++tested;
    }
  }
}

TEST_CASE("Krylov projection agrees with elimination") {
  for (auto a : {std::array<long, 5>{0, 1, 1, -2, 0}, std::array<long, 5>{0, 0, 1, -7, 6},
                 std::array<long, 5>{1, -1, 0, -332311, -73733731}}) {
    CurveContext e = make(a[0], a[1], a[2], a[3], a[4]);
    const SymbolSpace sp(e.level());
    const auto direct = extract_eigenline(sp, e);
    const auto krylov = extract_eigenline_krylov(sp, [&](std::uint64_t q) { return e.ap(q); });
    REQUIRE(direct.phi.size() == krylov.phi.size());
    // Both are primitive; they agree up to sign.
    const auto lead = std::find_if(direct.phi.begin(), direct.phi.end(), [](const BigInt& x) { return x != 0; });
    const BigInt s = krylov.phi[static_cast<std::size_t>(lead - direct.phi.begin())] / *lead;
    CHECK(abs(s) == 1);
    bool same = true;
    for (std::size_t i = 0; i < direct.phi.size(); ++i) same = same && krylov.phi[i] == s * direct.phi[i];
    CHECK(same);
    CHECK(krylov.verified_hecke.size() >= 3);
  }
  // A wrong eigenvalue is rejected.
  CurveContext e = make(0, 0, 1, -1, 0);
  const SymbolSpace sp(e.level());
  CHECK_THROWS_AS(extract_eigenline_krylov(sp, [](std::uint64_t) { return 0; }), ModsymError);
}

TEST_CASE("pinned value of 1058.e1") {
  CurveContext e = make(1, -1, 0, -332311, -73733731);
  EigenSymbol es = build_eigensymbol(e);
  e.set_root_number(es.root_number());
  const auto rep = normalize(es, e, 5, NormalizeOptions{});
  REQUIRE(rep.pinned);
  CHECK(es.pinned_value(0, 1) == BigRational(25));
  CHECK(arith::valuation(es.value(0, 1), 5) == 2);
  // Stage-2 agreement with the numeric ratio.
  curve::PrecisionScope scope(160);
  const auto ratio = curve::l_value_numeric(e, 128) / curve::real_period(e.model(), 128);
  CHECK(abs(ratio - 25) / 25 < curve::Real("1e-20"));
}

TEST_CASE("export and import") {
  CurveContext e = make(0, 0, 1, -1, 0);
  EigenSymbol es = build_eigensymbol(e);
  e.set_root_number(es.root_number());
  normalize(es, e, 5, NormalizeOptions{});
  const auto dir = std::filesystem::temp_directory_path() / "kurihara_modsym_test";
  std::filesystem::create_directories(dir);
  const auto path = dir / "e37.json";
  export_eigensymbol(es, path);
  const EigenSymbol back = import_eigensymbol(path, e);
  std::mt19937_64 rng(9);
  for (int i = 0; i < 100; ++i) {
    const std::int64_t m = 1 + static_cast<std::int64_t>(rng() % 500);
    const std::int64_t a = static_cast<std::int64_t>(rng() % 500);
    CHECK(back.value(a, m) == es.value(a, m));
  }
  CHECK(back.lambda_pinned() == es.lambda_pinned());
  // Re-export is byte-identical.
  export_eigensymbol(back, dir / "again.json");
  std::ifstream f1(path), f2(dir / "again.json");
  CHECK(std::string(std::istreambuf_iterator<char>(f1), {}) == std::string(std::istreambuf_iterator<char>(f2), {}));

  // Tampered vector.
  nlohmann::json j = nlohmann::json::parse(std::ifstream(path));
  j["dual_vector"][0][1] = j["dual_vector"][0][1].get<long>() + 1;
  std::ofstream(dir / "tampered.json") << j.dump();
  CHECK_THROWS_AS(import_eigensymbol(dir / "tampered.json", e), ModsymError);
  // Wrong curve.
  CurveContext other = make(0, 1, 1, -2, 0);
  CHECK_THROWS_AS(import_eigensymbol(path, other), ModsymError);
  // Version mismatch.
  nlohmann::json v = nlohmann::json::parse(std::ifstream(path));
  v["version"] = 99;
  std::ofstream(dir / "version.json") << v.dump();
  CHECK_THROWS_AS(import_eigensymbol(dir / "version.json", e), ModsymError);
}
