#include "kurihara/modsym.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <numeric>
#include <random>

#include <json.hpp>

#include "kurihara/analytic.hpp"
#include "kurihara/linalg.hpp"

namespace kurihara::modsym {

namespace {

std::int64_t smod(std::int64_t a, std::int64_t m) {
  const std::int64_t r = a % m;
  return r < 0 ? r + m : r;
}

std::uint32_t to_field(std::int64_t v, std::uint32_t p) { return static_cast<std::uint32_t>(smod(v, p)); }

}  // namespace

// ---------------------------------------------------------------------------
// P1List

P1List::P1List(std::uint64_t N) : N_(N), size_(1) {
  if (N == 0) throw ModsymError("P1List: level must be positive");
  for (auto [q, e] : arith::factorize(N)) {
    Local loc;
    loc.q = q;
    loc.qe = 1;
    for (unsigned i = 0; i < e; ++i) loc.qe *= q;
    loc.stride = size_;
    loc.inv.assign(loc.qe, 0);
    for (std::uint64_t x = 1; x < loc.qe; ++x) {
      if (x % q == 0 || loc.inv[x] != 0) continue;
      const std::uint64_t y = *arith::inv_mod(x, loc.qe);
      loc.inv[x] = static_cast<std::uint32_t>(y);
      loc.inv[y] = static_cast<std::uint32_t>(x);
    }
    size_ *= loc.qe + loc.qe / q;
    locals_.push_back(std::move(loc));
  }
}

std::optional<std::size_t> P1List::try_index(std::int64_t c, std::int64_t d) const {
  std::size_t idx = 0;
  for (const Local& L : locals_) {
    const std::int64_t qe = static_cast<std::int64_t>(L.qe);
    const std::uint64_t cc = static_cast<std::uint64_t>(smod(c, qe));
    const std::uint64_t dd = static_cast<std::uint64_t>(smod(d, qe));
    std::uint64_t li;
    if (dd % L.q != 0) {
      li = cc * L.inv[dd] % L.qe;
    } else if (cc % L.q != 0) {
      li = L.qe + (dd * L.inv[cc] % L.qe) / L.q;
    } else {
      return std::nullopt;
    }
    idx += li * L.stride;
  }
  return idx;
}

std::size_t P1List::index(std::int64_t c, std::int64_t d) const {
  auto i = try_index(c, d);
  if (!i) throw ModsymError("P1List::index: (c:d) not in P^1(Z/N)");
  return *i;
}

P1Element P1List::element(std::size_t i) const {
  P1Element out;
  out.index = i;
  if (locals_.empty()) return out;
  unsigned __int128 c = 0, d = 0;
  for (const Local& L : locals_) {
    const std::uint64_t lsize = L.qe + L.qe / L.q;
    const std::uint64_t li = (i / L.stride) % lsize;
    std::uint64_t lc, ld;
    if (li < L.qe) {
      lc = li;
      ld = 1;
    } else {
      lc = 1;
      ld = L.q * (li - L.qe);
    }
    const std::uint64_t cof = N_ / L.qe;
    const std::uint64_t e = cof * *arith::inv_mod(cof % L.qe, L.qe);  // 1 mod qe, 0 mod cof
    c += static_cast<unsigned __int128>(lc) * e;
    d += static_cast<unsigned __int128>(ld) * e;
  }
  out.c = static_cast<std::uint64_t>(c % N_);
  out.d = static_cast<std::uint64_t>(d % N_);
  return out;
}

std::vector<P1Element> enumerate_p1(std::uint64_t N) {
  P1List l(N);
  std::vector<P1Element> out;
  out.reserve(l.size());
  for (std::size_t i = 0; i < l.size(); ++i) out.push_back(l.element(i));
  return out;
}

// ---------------------------------------------------------------------------
// Heilbronn matrices

namespace {

// Nearest integer to a/b, halves rounded away from zero.
std::int64_t round_div(std::int64_t a, std::int64_t b) {
  if (b < 0) {
    a = -a;
    b = -b;
  }
  const std::int64_t twice = 2 * a;
  if (twice >= 0) return (twice + b) / (2 * b);
  return -((-twice + b) / (2 * b));
}

}  // namespace

std::vector<Mat2> heilbronn_cremona(std::uint64_t q) {
  std::vector<Mat2> out;
  if (q == 2) return {{1, 0, 0, 2}, {2, 0, 0, 1}, {2, 1, 0, 1}, {1, 0, 1, 2}};
  const std::int64_t p = static_cast<std::int64_t>(q);
  out.push_back({1, 0, 0, p});
  for (std::int64_t r = -(p - 1) / 2; r <= (p - 1) / 2; ++r) {
    std::int64_t x1 = p, x2 = -r, y1 = 0, y2 = 1, a = -p, b = r;
    out.push_back({x1, x2, y1, y2});
    while (b != 0) {
      const std::int64_t qq = round_div(a, b);
      const std::int64_t c = a - b * qq;
      a = -b;
      b = c;
      const std::int64_t x3 = qq * x2 - x1;
      x1 = x2;
      x2 = x3;
      const std::int64_t y3 = qq * y2 - y1;
      y1 = y2;
      y2 = y3;
      out.push_back({x1, x2, y1, y2});
    }
  }
  return out;
}

std::vector<Mat2> heilbronn_merel(std::uint64_t nn) {
  const std::int64_t n = static_cast<std::int64_t>(nn);
  std::vector<Mat2> out;
  for (std::int64_t a = 1; a <= n; ++a) {
    const std::int64_t q = n / a;
    if (q * a == n) {
      const std::int64_t d = q;
      for (std::int64_t b = 0; b < a; ++b) out.push_back({a, b, 0, d});
      for (std::int64_t c = 1; c < d; ++c) out.push_back({a, 0, c, d});
    }
    for (std::int64_t d = q + 1; d <= n; ++d) {
      const std::int64_t bc = a * d - n;
      for (std::int64_t c = bc / a + 1; c < d; ++c)
        if (bc % c == 0) out.push_back({a, bc / c, c, d});
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// SymbolSpace

SymbolSpace::SymbolSpace(std::uint64_t N) : p1_(N) {
  const std::size_t n = p1_.size();
  const std::int64_t NN = static_cast<std::int64_t>(N);
  constexpr std::uint32_t kUnset = UINT32_MAX;
  gen_.assign(n, kUnset);
  sign_.assign(n, 0);
  auto S = [&](std::size_t i) {
    const auto e = p1_.element(i);
    return p1_.index(static_cast<std::int64_t>(e.d), -static_cast<std::int64_t>(e.c));
  };
  auto eta = [&](std::size_t i) {
    const auto e = p1_.element(i);
    return p1_.index(-static_cast<std::int64_t>(e.c), static_cast<std::int64_t>(e.d));
  };
  auto T = [&](std::size_t i) {
    const auto e = p1_.element(i);
    const std::int64_t c = static_cast<std::int64_t>(e.c), d = static_cast<std::int64_t>(e.d);
    return p1_.index(d, smod(-c - d, NN));
  };

  // Two-term relations x + xS = 0 and x = x eta: signed orbits of size <= 4.
  std::vector<std::pair<std::size_t, int>> orbit;
  for (std::size_t i = 0; i < n; ++i) {
    if (gen_[i] != kUnset) continue;
    orbit.assign(1, {i, 1});
    bool zero = false;
    for (std::size_t k = 0; k < orbit.size(); ++k) {
      const auto [j, s] = orbit[k];
      for (auto [nb, ns] : {std::pair<std::size_t, int>{S(j), -s}, std::pair<std::size_t, int>{eta(j), s}}) {
        auto it = std::find_if(orbit.begin(), orbit.end(), [&](const auto& o) { return o.first == nb; });
        if (it == orbit.end())
          orbit.emplace_back(nb, ns);
        else if (it->second != ns)
          zero = true;
      }
    }
    const std::uint32_t g = zero ? kUnset - 1 : static_cast<std::uint32_t>(reps_.size());
    if (!zero) reps_.push_back(i);
    for (auto [j, s] : orbit) {
      gen_[j] = g;
      sign_[j] = zero ? 0 : static_cast<std::int8_t>(s);
    }
  }
  for (std::size_t i = 0; i < n; ++i)
    if (sign_[i] == 0) gen_[i] = 0;

  // Three-term relations x + xT + xT^2 = 0, one per T-orbit.
  std::vector<char> seen(n, 0);
  std::map<std::uint32_t, std::int64_t> acc;
  for (std::size_t i = 0; i < n; ++i) {
    if (seen[i]) continue;
    const std::size_t j = T(i), k = T(j);
    seen[i] = seen[j] = seen[k] = 1;
    acc.clear();
    for (std::size_t t : {i, j, k})
      if (sign_[t] != 0) acc[gen_[t]] += sign_[t];
    IntRow row;
    for (auto [g, c] : acc)
      if (c != 0) row.emplace_back(g, c);
    if (!row.empty()) relations_.push_back(std::move(row));
  }
}

std::vector<Mat2> SymbolSpace::heilbronn(std::uint64_t q) const {
  return level() % q == 0 ? heilbronn_merel(q) : heilbronn_cremona(q);
}

namespace {

template <class F>
void act(const SymbolSpace& sp, std::size_t rep, const std::vector<Mat2>& H, F&& f) {
  const auto e = sp.p1().element(rep);
  const std::int64_t c = static_cast<std::int64_t>(e.c), d = static_cast<std::int64_t>(e.d);
  const std::int64_t N = static_cast<std::int64_t>(sp.level());
  for (const Mat2& M : H) {
    const auto j = sp.p1().try_index(smod(c * M[0] + d * M[2], N), smod(c * M[1] + d * M[3], N));
    if (!j) continue;
    const auto [g, s] = sp.generator_of(*j);
    if (s != 0) f(g, s);
  }
}

IntRow merge(IntRow row) {
  std::sort(row.begin(), row.end());
  IntRow out;
  for (auto [g, c] : row) {
    if (!out.empty() && out.back().first == g)
      out.back().second += c;
    else
      out.emplace_back(g, c);
  }
  out.erase(std::remove_if(out.begin(), out.end(), [](const auto& e) { return e.second == 0; }), out.end());
  return out;
}

}  // namespace

std::vector<IntRow> SymbolSpace::hecke_rows(std::uint64_t q, std::int64_t a) const {
  const auto H = heilbronn(q);
  std::vector<IntRow> rows;
  rows.reserve(num_generators());
  for (std::uint32_t g = 0; g < num_generators(); ++g) {
    IntRow row;
    act(*this, reps_[g], H, [&](std::uint32_t h, int s) { row.emplace_back(h, s); });
    row.emplace_back(g, -a);
    rows.push_back(merge(std::move(row)));
  }
  return rows;
}

std::vector<std::uint32_t> SymbolSpace::hecke_dual(std::uint64_t q, const std::vector<std::uint32_t>& phi,
                                                   std::uint32_t prime) const {
  const auto H = heilbronn(q);
  std::vector<std::uint32_t> out(num_generators(), 0);
  for (std::uint32_t g = 0; g < num_generators(); ++g) {
    std::uint64_t s = 0;
    act(*this, reps_[g], H, [&](std::uint32_t h, int sg) { s += sg > 0 ? phi[h] : prime - phi[h]; });
    out[g] = static_cast<std::uint32_t>(s % prime);
  }
  return out;
}

namespace {

linalg::SparseRow to_field_row(const IntRow& row, std::uint32_t p) {
  linalg::SparseRow out;
  out.reserve(row.size());
  for (auto [g, c] : row) {
    const std::uint32_t v = to_field(c, p);
    if (v != 0) out.emplace_back(g, v);
  }
  return out;
}

linalg::ModEchelon relation_echelon(const SymbolSpace& sp, std::uint32_t p) {
  linalg::ModEchelon E(sp.num_generators(), p);
  for (const IntRow& r : sp.relations()) E.insert(to_field_row(r, p));
  return E;
}

}  // namespace

std::size_t SymbolSpace::dimension() const {
  if (!dimension_) {
    const auto E = relation_echelon(*this, field_primes(1)[0]);
    dimension_ = num_generators() - E.rank();
  }
  return *dimension_;
}

std::vector<std::uint32_t> SymbolSpace::random_dual(std::uint32_t prime, std::uint64_t seed) const {
  const auto E = relation_echelon(*this, prime);
  std::mt19937_64 rng(seed);
  std::vector<std::uint32_t> vals(num_generators() - E.rank());
  for (auto& v : vals) v = static_cast<std::uint32_t>(rng() % prime);
  return E.kernel_vector(vals);
}

namespace {

struct Cusp {
  std::int64_t num, den;  // den >= 0, gcd = 1; infinity is 1/0
};

// Cremona's criterion: a1/q1 ~ a2/q2 under Gamma_0(N) iff s1 q2 = s2 q1 mod gcd(q1 q2, N)
// with a_j s_j = 1 mod q_j.
bool gamma0_equivalent(const Cusp& x, const Cusp& y, std::int64_t N) {
  auto s_of = [](const Cusp& c) -> std::int64_t {
    if (c.den <= 1) return c.den == 0 ? c.num : 0;
    return static_cast<std::int64_t>(*arith::inv_mod(static_cast<std::uint64_t>(smod(c.num, c.den)),
                                                     static_cast<std::uint64_t>(c.den)));
  };
  const std::int64_t prod = static_cast<std::int64_t>(static_cast<__int128>(x.den) * y.den % N);
  const std::int64_t g = arith::gcd(prod, N);
  const __int128 lhs = static_cast<__int128>(s_of(x)) * y.den - static_cast<__int128>(s_of(y)) * x.den;
  const __int128 r = lhs % g;
  return r == 0;
}

}  // namespace

void SymbolSpace::build_boundary() const {
  if (!boundary_.empty() || num_generators() == 0) return;
  const std::int64_t N = static_cast<std::int64_t>(level());
  std::map<std::int64_t, std::vector<std::pair<Cusp, std::uint32_t>>> buckets;
  auto class_of = [&](Cusp c) -> std::uint32_t {
    const std::int64_t key = c.den == 0 ? N : arith::gcd(c.den, N);
    auto& bucket = buckets[key];
    const Cusp neg{-c.num, c.den};
    for (const auto& [rep, id] : bucket)
      if (gamma0_equivalent(c, rep, N) || gamma0_equivalent(neg, rep, N)) return id;
    bucket.emplace_back(c, static_cast<std::uint32_t>(num_classes_));
    return static_cast<std::uint32_t>(num_classes_++);
  };
  boundary_.resize(num_generators());
  for (std::uint32_t g = 0; g < num_generators(); ++g) {
    const auto e = p1_.element(reps_[g]);
    std::int64_t C = static_cast<std::int64_t>(e.c), D = static_cast<std::int64_t>(e.d);
    if (C == 0) C = N;
    while (arith::gcd(C, D) != 1) D += N;
    std::int64_t s, t;
    arith::xgcd(D, C, s, t);  // s D + t C = 1, so [[s, -t], [C, D]] has determinant 1
    const std::int64_t a = s, b = -t;
    auto norm = [](std::int64_t x, std::int64_t y) {
      if (y < 0) {
        x = -x;
        y = -y;
      }
      if (y == 0) x = 1;
      return Cusp{x, y};
    };
    boundary_[g] = {class_of(norm(a, C)), class_of(norm(b, D))};
  }
}

std::size_t SymbolSpace::boundary_classes() const {
  build_boundary();
  return num_classes_;
}

std::size_t SymbolSpace::cuspidal_dimension() const {
  build_boundary();
  // Rank of a signed incidence matrix: vertices minus connected components.
  std::vector<std::uint32_t> parent(num_classes_);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::uint32_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  std::size_t rank = 0;
  for (auto [u, v] : boundary_) {
    const auto a = find(u), b = find(v);
    if (a != b) {
      parent[a] = b;
      ++rank;
    }
  }
  return dimension() - rank;
}

std::vector<std::uint32_t> SymbolSpace::boundary_functional(std::size_t cls, std::uint32_t prime) const {
  build_boundary();
  std::vector<std::uint32_t> phi(num_generators(), 0);
  for (std::uint32_t g = 0; g < num_generators(); ++g) {
    std::int64_t v = 0;
    if (boundary_[g].first == cls) v += 1;
    if (boundary_[g].second == cls) v -= 1;
    phi[g] = to_field(v, prime);
  }
  return phi;
}

std::vector<std::uint32_t> field_primes(std::size_t count) {
  std::vector<std::uint32_t> out;
  for (std::uint64_t x = (1ULL << 31) - 1; out.size() < count; x -= 2)
    if (arith::is_prime(x)) out.push_back(static_cast<std::uint32_t>(x));
  return out;
}

// ---------------------------------------------------------------------------
// Eigenline

namespace {

// Dot products of integer rows with an integral vector, all of which must vanish.
bool rows_vanish(const std::vector<IntRow>& rows, const std::vector<BigInt>& phi) {
  BigInt maxabs = 0;
  for (const auto& v : phi)
    if (abs(v) > maxabs) maxabs = abs(v);
  if (mpz_sizeinbase(maxabs.get_mpz_t(), 2) < 60) {
    std::vector<std::int64_t> small(phi.size());
    for (std::size_t i = 0; i < phi.size(); ++i) small[i] = phi[i].get_si();
    for (const IntRow& r : rows) {
      __int128 s = 0;
      for (auto [g, c] : r) s += static_cast<__int128>(c) * small[g];
      if (s != 0) return false;
    }
    return true;
  }
  BigInt s;
  for (const IntRow& r : rows) {
    s = 0;
    for (auto [g, c] : r) s += BigInt(static_cast<long>(c)) * phi[g];
    if (s != 0) return false;
  }
  return true;
}

std::vector<std::uint32_t> column_weights(std::size_t ncols, const std::vector<const std::vector<IntRow>*>& sets) {
  std::vector<std::uint32_t> w(ncols, 0);
  for (const auto* rows : sets)
    for (const IntRow& r : *rows)
      for (auto [g, c] : r) ++w[g];
  return w;
}

// Chinese remaindering of the normalized solutions over several primes, then
// rational reconstruction, a primitive integral vector and exact verification.
DualEigenvector certify_multimodular(
    const SymbolSpace& space, const std::function<std::int64_t(std::uint64_t)>& ap,
    std::vector<std::pair<std::uint64_t, std::int64_t>> cuts, const std::vector<std::uint32_t>& primes,
    const std::function<std::optional<std::vector<std::uint32_t>>(std::uint32_t)>& solve_mod) {
  const std::size_t G = space.num_generators();
  const std::uint64_t N = space.level();
  std::vector<BigInt> residues(G);
  BigInt modulus = 0;
  std::size_t lead_index = G;
  std::size_t used = 0;
  for (std::uint32_t p : primes) {
    auto x = solve_mod(p);
    if (!x) continue;
    const std::size_t lead = static_cast<std::size_t>(
        std::find_if(x->begin(), x->end(), [](std::uint32_t v) { return v != 0; }) - x->begin());
    if (lead > lead_index) continue;  // unlucky prime: the true leading entry vanishes mod p
    if (lead < lead_index || modulus == 0) {
      lead_index = lead;
      modulus = p;
      for (std::size_t i = 0; i < G; ++i) residues[i] = (*x)[i];
      used = 1;
      continue;
    }
    for (std::size_t i = 0; i < G; ++i) residues[i] = arith::crt(residues[i], modulus, (*x)[i], p);
    modulus *= p;
    ++used;

    BigInt bound;
    mpz_sqrt(bound.get_mpz_t(), BigInt(modulus / 2).get_mpz_t());
    std::vector<BigRational> q(G);
    bool ok = true;
    for (std::size_t i = 0; i < G && ok; ++i) {
      auto r = arith::rational_reconstruct(residues[i], modulus, bound - 1, bound - 1);
      if (!r) ok = false;
      else q[i] = *r;
    }
    if (!ok) continue;
    BigInt den = 1, num_gcd = 0;
    for (const auto& v : q) mpz_lcm(den.get_mpz_t(), den.get_mpz_t(), v.get_den_mpz_t());
    std::vector<BigInt> phi(G);
    for (std::size_t i = 0; i < G; ++i) {
      phi[i] = q[i].get_num() * (den / q[i].get_den());
      mpz_gcd(num_gcd.get_mpz_t(), num_gcd.get_mpz_t(), phi[i].get_mpz_t());
    }
    for (auto& v : phi) v /= num_gcd;
    if (verify_dual(space, phi, cuts)) {
      // Certify at least three Hecke equations, as an importer would.
      std::uint64_t q = cuts.back().first;
      std::vector<std::pair<std::uint64_t, std::int64_t>> extra;
      while (cuts.size() + extra.size() < 3) {
        do ++q;
        while (!arith::is_prime(q) || N % q == 0);
        extra.emplace_back(q, ap(q));
      }
      if (!verify_dual(space, phi, extra)) throw ModsymError("extract_eigenline: eigenline fails a later Hecke check");
      cuts.insert(cuts.end(), extra.begin(), extra.end());
      return DualEigenvector{std::move(phi), cuts, used};
    }
  }
  throw ModsymError("extract_eigenline: multi-modular reconstruction did not certify");
}

}  // namespace

bool verify_dual(const SymbolSpace& space, const std::vector<BigInt>& phi,
                 const std::vector<std::pair<std::uint64_t, std::int64_t>>& hecke) {
  if (phi.size() != space.num_generators()) return false;
  if (std::all_of(phi.begin(), phi.end(), [](const BigInt& x) { return x == 0; })) return false;
  if (!rows_vanish(space.relations(), phi)) return false;
  for (auto [q, a] : hecke)
    if (!rows_vanish(space.hecke_rows(q, a), phi)) return false;
  return true;
}

DualEigenvector extract_eigenline(const SymbolSpace& space, const curve::CurveContext& ctx, std::size_t max_cuts) {
  return extract_eigenline(space, [&](std::uint64_t q) { return ctx.ap(q); }, max_cuts);
}

DualEigenvector extract_eigenline(const SymbolSpace& space, const std::function<std::int64_t(std::uint64_t)>& ap,
                                  std::size_t max_cuts) {
  const std::size_t G = space.num_generators();
  if (G == 0) throw ModsymError("extract_eigenline: empty symbol space");
  const std::uint64_t N = space.level();
  const auto primes = field_primes(24);

  // Cut on the first prime, deciding which Hecke operators are needed.
  std::vector<std::pair<std::uint64_t, std::int64_t>> cuts;
  std::vector<std::vector<IntRow>> hecke;
  {
    const std::uint32_t p = primes[0];
    linalg::ModEchelon E(G, p);
    E.set_column_weights(column_weights(G, {&space.relations()}));
    for (const IntRow& r : space.relations()) E.insert(to_field_row(r, p));
    std::uint64_t q = 1;
    while (true) {
      if (G - E.rank() == 1) break;
      if (G == E.rank()) throw ModsymError("extract_eigenline: empty eigenspace (wrong a_q or non-minimal model)");
      if (cuts.size() >= max_cuts)
        throw ModsymError("extract_eigenline: eigenspace still has dimension " + std::to_string(G - E.rank()) +
                          " after " + std::to_string(max_cuts) + " Hecke cuts");
      do ++q;
      while (!arith::is_prime(q) || N % q == 0);
      const std::int64_t a = ap(q);
      cuts.emplace_back(q, a);
      hecke.push_back(space.hecke_rows(q, a));
      for (const IntRow& r : hecke.back()) E.insert(to_field_row(r, p));
    }
  }

  std::vector<const std::vector<IntRow>*> sets{&space.relations()};
  for (const auto& h : hecke) sets.push_back(&h);
  const auto weights = column_weights(G, sets);

  auto solve_mod = [&](std::uint32_t p) -> std::optional<std::vector<std::uint32_t>> {
    linalg::ModEchelon E(G, p);
    E.set_column_weights(weights);
    for (const auto* rows : sets)
      for (const IntRow& r : *rows) E.insert(to_field_row(r, p));
    if (G - E.rank() != 1) return std::nullopt;
    auto x = E.kernel_vector({1});
    // Scale so the first nonzero entry is 1.
    const auto lead = std::find_if(x.begin(), x.end(), [](std::uint32_t v) { return v != 0; });
    const std::uint64_t inv = *arith::inv_mod(*lead, p);
    for (auto& v : x) v = static_cast<std::uint32_t>(v * inv % p);
    return x;
  };

  return certify_multimodular(space, ap, std::move(cuts), primes, solve_mod);
}

namespace {

// Transpose Hecke operator on functionals on generators, (T* phi)(g) = sum +-phi(h).
struct HeckeCsr {
  std::vector<std::uint32_t> offset;
  std::vector<std::uint32_t> entry;  // generator, top bit set for a minus sign
};

HeckeCsr hecke_csr(const SymbolSpace& sp, std::uint64_t q) {
  const auto H = sp.heilbronn(q);
  HeckeCsr m;
  m.offset.reserve(sp.num_generators() + 1);
  m.offset.push_back(0);
  for (std::uint32_t g = 0; g < sp.num_generators(); ++g) {
    act(sp, sp.representative(g), H,
        [&](std::uint32_t h, int s) { m.entry.push_back(h | (s < 0 ? 0x80000000u : 0u)); });
    m.offset.push_back(static_cast<std::uint32_t>(m.entry.size()));
  }
  return m;
}

void apply(const HeckeCsr& m, const std::vector<std::uint32_t>& x, std::vector<std::uint32_t>& y, std::uint64_t p) {
  const std::size_t G = x.size();
  for (std::size_t g = 0; g < G; ++g) {
    std::uint64_t pos = 0, neg = 0;
    for (std::uint32_t k = m.offset[g]; k < m.offset[g + 1]; ++k) {
      const std::uint32_t e = m.entry[k];
      (e >> 31 ? neg : pos) += x[e & 0x7fffffffu];
    }
    y[g] = static_cast<std::uint32_t>((pos % p + p - neg % p) % p);
  }
}

// Minimal polynomial of T on the cyclic space of v (monic, constant term first),
// from Berlekamp-Massey on u.T^i v with early termination.
std::vector<std::uint64_t> krylov_minpoly(const HeckeCsr& T, const std::vector<std::uint32_t>& v, std::uint64_t p,
                                          std::mt19937_64& rng) {
  const std::size_t G = v.size();
  constexpr std::size_t kMargin = 24;
  std::vector<std::uint32_t> u(G);
  for (auto& x : u) x = static_cast<std::uint32_t>(rng() % p);
  auto dot = [&](const std::vector<std::uint32_t>& w) {
    std::uint64_t s = 0;
    for (std::size_t i = 0; i < G; ++i) s = (s + static_cast<std::uint64_t>(u[i]) * w[i]) % p;
    return s;
  };
  std::vector<std::uint64_t> seq, C{1}, B{1};
  std::size_t L = 0, m = 1;
  std::uint64_t b = 1;
  std::vector<std::uint32_t> cur = v, next(G);
  for (std::size_t n = 0; n < 2 * G + kMargin; ++n) {
    seq.push_back(dot(cur));
    std::uint64_t d = seq[n];
    for (std::size_t i = 1; i <= L && i < C.size(); ++i) d = (d + C[i] * seq[n - i]) % p;
    if (d == 0) {
      ++m;
    } else {
      const std::uint64_t coef = d * *arith::inv_mod(b, p) % p;
      std::vector<std::uint64_t> Cold = C;
      if (C.size() < B.size() + m) C.resize(B.size() + m, 0);
      for (std::size_t i = 0; i < B.size(); ++i) C[i + m] = (C[i + m] + p - coef * B[i] % p) % p;
      if (2 * L <= n) {
        L = n + 1 - L;
        B = std::move(Cold);
        b = d;
        m = 1;
      } else {
        ++m;
      }
    }
    if (n + 1 >= 2 * L + kMargin) break;
    apply(T, cur, next, p);
    cur.swap(next);
  }
  C.resize(L + 1, 0);
  std::vector<std::uint64_t> f(L + 1);
  for (std::size_t j = 0; j <= L; ++j) f[j] = C[L - j];
  return f;
}

// One projection step: replaces v by a nonzero vector of ker(T - a) inside the
// cyclic space of v. Returns the degree of the minimal polynomial of v, or 0 on failure.
std::size_t project_eigen(const HeckeCsr& T, std::int64_t a, std::vector<std::uint32_t>& v, std::uint64_t p,
                          std::mt19937_64& rng) {
  auto f = krylov_minpoly(T, v, p, rng);
  const std::size_t deg = f.size() - 1;
  const std::uint64_t ap = static_cast<std::uint64_t>(smod(a, static_cast<std::int64_t>(p)));
  // Divide out (x - a) as often as possible.
  std::size_t mult = 0;
  while (f.size() > 1) {
    std::vector<std::uint64_t> q(f.size() - 1);
    std::uint64_t r = f.back();
    for (std::size_t j = f.size() - 1; j-- > 0;) {
      q[j] = r;
      r = (f[j] + r * ap) % p;
    }
    if (r != 0) break;
    f = std::move(q);
    ++mult;
  }
  if (mult == 0) return 0;
  const std::size_t G = v.size();
  std::vector<std::uint32_t> w(G), t(G);
  for (std::size_t i = 0; i < G; ++i) w[i] = static_cast<std::uint32_t>(f.back() * v[i] % p);
  for (std::size_t j = f.size() - 1; j-- > 0;) {
    apply(T, w, t, p);
    for (std::size_t i = 0; i < G; ++i) w[i] = static_cast<std::uint32_t>((t[i] + f[j] * v[i]) % p);
  }
  auto defect = [&](const std::vector<std::uint32_t>& x, std::vector<std::uint32_t>& out) {
    apply(T, x, out, p);
    bool zero = true;
    for (std::size_t i = 0; i < G; ++i) {
      out[i] = static_cast<std::uint32_t>((out[i] + p - ap * x[i] % p) % p);
      zero = zero && out[i] == 0;
    }
    return zero;
  };
  for (std::size_t k = 0; k < mult; ++k) {
    if (defect(w, t)) {
      if (std::all_of(w.begin(), w.end(), [](std::uint32_t x) { return x == 0; })) return 0;
      v.swap(w);
      return deg;
    }
    w.swap(t);
  }
  return 0;
}

}  // namespace

DualEigenvector extract_eigenline_krylov(const SymbolSpace& space,
                                         const std::function<std::int64_t(std::uint64_t)>& ap,
                                         const KrylovOptions& opt) {
  const std::size_t G = space.num_generators();
  if (G == 0) throw ModsymError("extract_eigenline: empty symbol space");
  const std::uint64_t N = space.level();
  const auto primes = field_primes(24);
  auto say = [&](const std::string& msg) {
    if (opt.progress) opt.progress(msg);
  };

  std::vector<std::pair<std::uint64_t, std::int64_t>> cuts;
  std::vector<HeckeCsr> ops;
  auto next_q = [&](std::uint64_t q) {
    do ++q;
    while (!arith::is_prime(q) || N % q == 0);
    return q;
  };

  std::uint64_t seed = opt.seed;
  auto solve_mod = [&](std::uint32_t p) -> std::optional<std::vector<std::uint32_t>> {
    std::mt19937_64 rng(seed++);
    auto v = space.random_dual(p, rng());
    const bool discover = cuts.empty();
    std::size_t confirmed = 0;
    for (std::size_t i = 0;; ++i) {
      if (discover) {
        if (confirmed >= opt.confirmations && cuts.size() >= 3) break;
        if (cuts.size() >= opt.max_primes)
          throw ModsymError("extract_eigenline: no eigenline after " + std::to_string(opt.max_primes) +
                            " Hecke operators");
        const std::uint64_t q = next_q(cuts.empty() ? 1 : cuts.back().first);
        cuts.emplace_back(q, ap(q));
        ops.push_back(hecke_csr(space, q));
      } else if (i == cuts.size()) {
        break;
      }
      const std::size_t deg = project_eigen(ops[i], cuts[i].second, v, p, rng);
      say("p=" + std::to_string(p) + " T_" + std::to_string(cuts[i].first) + " minpoly degree " +
          std::to_string(deg));
      if (deg == 0) {
        if (discover) throw ModsymError("extract_eigenline: a_q is not an eigenvalue (wrong a_q or non-minimal model)");
        return std::nullopt;
      }
      confirmed = deg == 1 ? confirmed + 1 : 0;
    }
    const auto lead = std::find_if(v.begin(), v.end(), [](std::uint32_t x) { return x != 0; });
    const std::uint64_t inv = *arith::inv_mod(*lead, p);
    for (auto& x : v) x = static_cast<std::uint32_t>(x * inv % p);
    return v;
  };
  // The first prime also decides which Hecke operators are needed.
  auto first = solve_mod(primes[0]);
  return certify_multimodular(space, ap, cuts, primes, [&](std::uint32_t p) {
    return p == primes[0] ? first : solve_mod(p);
  });
}

// ---------------------------------------------------------------------------
// Evaluation

namespace {

/// Calls f(manin_index) for each Manin symbol in the continued-fraction path {infinity -> a/m}.
template <class F>
void manin_path(const P1List& p1, std::int64_t a, std::int64_t m, F&& f) {
  if (m <= 0) throw ModsymError("evaluate: denominator must be positive");
  const std::int64_t N = static_cast<std::int64_t>(p1.level());
  std::int64_t num = smod(a, m), den = m;
  std::int64_t qm2 = 1, qm1 = 0;
  bool odd = false;
  while (true) {
    const std::int64_t b = num / den, r = num - b * den;
    const std::int64_t qj = b * qm1 + qm2;
    const std::int64_t c = odd ? qj : -qj;
    f(p1.index(smod(c, N), smod(qm1, N)));
    qm2 = qm1;
    qm1 = qj;
    odd = !odd;
    if (r == 0) break;
    num = den;
    den = r;
  }
}

}  // namespace

BigInt evaluate_raw(const SymbolSpace& space, const std::vector<BigInt>& phi, std::int64_t a, std::int64_t m) {
  BigInt s = 0;
  manin_path(space.p1(), a, m, [&](std::size_t i) {
    const auto [g, sg] = space.generator_of(i);
    if (sg > 0)
      s += phi[g];
    else if (sg < 0)
      s -= phi[g];
  });
  return s;
}

int fricke_sign(const SymbolSpace& space, const std::vector<BigInt>& phi) {
  const std::int64_t N = static_cast<std::int64_t>(space.level());
  const BigInt at0 = evaluate_raw(space, phi, 0, 1);
  std::optional<int> eps;
  int samples = 0;
  for (std::int64_t m = 1; m <= 200 && samples < 6; ++m) {
    for (std::int64_t a = 1; a < m + (m == 1) && samples < 6; ++a) {
      if (arith::gcd(a, m) != 1) continue;
      const BigInt x = evaluate_raw(space, phi, a, m);
      if (x == 0) continue;
      // W_N {infinity, a/m} = {0, -m/(N a)}
      const std::int64_t g = arith::gcd(m, N * a);
      const BigInt y = evaluate_raw(space, phi, -m / g, N * a / g) - at0;
      int e;
      if (y == x)
        e = 1;
      else if (y == -x)
        e = -1;
      else
        throw ModsymError("fricke_sign: W_N image not proportional to the eigenline");
      if (eps && *eps != e) throw ModsymError("fricke_sign: inconsistent Fricke eigenvalue");
      eps = e;
      ++samples;
    }
  }
  if (!eps) throw ModsymError("fricke_sign: no nonzero symbol found");
  return *eps;
}

// ---------------------------------------------------------------------------
// EigenSymbol

EigenSymbol::EigenSymbol(std::shared_ptr<const SymbolSpace> space, DualEigenvector dual, int fricke_eps,
                         std::uint64_t curve_hash, std::string ainvs)
    : space_(std::move(space)),
      phi_(std::move(dual.phi)),
      hecke_(std::move(dual.verified_hecke)),
      eps_(fricke_eps),
      curve_hash_(curve_hash),
      ainvs_(std::move(ainvs)) {
  BigInt maxabs = 0;
  for (const auto& v : phi_)
    if (abs(v) > maxabs) maxabs = abs(v);
  small_ = mpz_sizeinbase(maxabs.get_mpz_t(), 2) <= 40;
  if (small_) {
    const auto& p1 = space_->p1();
    manin_small_.resize(p1.size());
    for (std::size_t i = 0; i < p1.size(); ++i) {
      const auto [g, s] = space_->generator_of(i);
      manin_small_[i] = s == 0 ? 0 : s * phi_[g].get_si();
    }
  }
}

void EigenSymbol::set_normalization(std::uint64_t p, BigRational lambda_p, std::optional<BigRational> pinned) {
  p_ = p;
  lambda_p_ = std::move(lambda_p);
  lambda_p_.canonicalize();
  lambda_pinned_ = std::move(pinned);
  shift_ = 0;
  p_shift_ = 1;
  // lambda_p = p^-shift is the only shape stage 1 produces; anything else takes the exact path.
  if (lambda_p_.get_num() == 1) {
    BigInt d = lambda_p_.get_den();
    while (d % p == 0) {
      d /= p;
      ++shift_;
    }
    if (d == 1 && shift_ < 20) {
      for (int i = 0; i < shift_; ++i) p_shift_ *= static_cast<std::int64_t>(p);
    } else {
      shift_ = -1;
    }
  } else {
    shift_ = -1;
  }
}

BigInt EigenSymbol::raw(std::int64_t a, std::int64_t m) const {
  if (!small_) return evaluate_raw(*space_, phi_, a, m);
  __int128 s = 0;
  manin_path(space_->p1(), a, m, [&](std::size_t i) { s += manin_small_[i]; });
  return BigInt(static_cast<long>(s));
}

BigRational EigenSymbol::value(std::int64_t a, std::int64_t m) const {
  BigRational r(raw(a, m));
  r *= lambda_p_;
  r.canonicalize();
  return r;
}

std::optional<BigRational> EigenSymbol::pinned_value(std::int64_t a, std::int64_t m) const {
  if (!lambda_pinned_) return std::nullopt;
  BigRational r(raw(a, m));
  r *= *lambda_pinned_;
  r.canonicalize();
  return r;
}

std::uint64_t EigenSymbol::residue(std::int64_t a, std::int64_t m, std::uint64_t modulus) const {
  if (small_ && shift_ >= 0) {
    __int128 s = 0;
    manin_path(space_->p1(), a, m, [&](std::size_t i) { s += manin_small_[i]; });
    if (s % p_shift_ != 0) throw ModsymError("residue: symbol is not p-integral");
    s /= p_shift_;
    const __int128 r = s % static_cast<__int128>(modulus);
    return static_cast<std::uint64_t>(r < 0 ? r + modulus : r);
  }
  const auto v = arith::reduce(value(a, m), modulus);
  if (!v) throw ModsymError("residue: symbol is not p-integral");
  return *v;
}

// ---------------------------------------------------------------------------
// Normalization

namespace {

using curve::Real;

std::optional<BigRational> pin_ratio(const curve::CurveContext& ctx, const EigenSymbol& es, std::int64_t D,
                                     const BigRational& symbol_side, unsigned bits) {
  // symbol_side * r = sqrt(D) L(E, chi_D, 1) / Omega^+ (D = 1: the untwisted value).
  std::optional<BigRational> prev;
  for (unsigned b : {bits, bits + 64}) {
    curve::PrecisionScope scope(b + 32);
    const Real omega = curve::real_period(ctx.model(), b);
    const Real L = curve::twisted_l_value_numeric(ctx, D, b);
    const Real target = L * sqrt(Real(D)) / omega;
    const Real ratio = target * Real(symbol_side.get_den().get_str()) / Real(symbol_side.get_num().get_str());
    const Real tol = abs(ratio) * pow(Real(2), -static_cast<int>(b) + 40);
    auto r = curve::recognize_rational(ratio, tol, BigInt(1) << 40);
    if (!r) return std::nullopt;
    if (prev && *prev != *r) return std::nullopt;
    prev = r;
  }
  (void)es;
  return prev;
}

}  // namespace

NormalizeReport normalize(EigenSymbol& es, const curve::CurveContext& ctx, std::uint64_t p, const NormalizeOptions& opt) {
  if (!ctx.root_number()) throw ModsymError("normalize: root number of the curve context is unset");
  NormalizeReport rep;
  int v = kInfiniteValuation;
  for (std::int64_t m = 1; m <= static_cast<std::int64_t>(opt.probe_bound); ++m) {
    for (std::int64_t a = 0; a < m; ++a) {
      if (arith::gcd(a, m) != 1) continue;
      const BigInt x = es.raw(a, m);
      if (x != 0) v = std::min(v, arith::valuation(x, p));
    }
  }
  if (v == kInfiniteValuation) throw ModsymError("normalize: all probed symbols vanish");
  rep.probe_min_valuation = v;
  BigInt pv = 1;
  for (int i = 0; i < v; ++i) pv *= p;
  const BigRational lambda_p(BigInt(1), pv);
  es.set_normalization(p, lambda_p, std::nullopt);

  std::optional<BigRational> pinned;
  const BigRational at0 = es.value(0, 1);
  if (at0 != 0 && !opt.force_twist) {
    if (auto r = pin_ratio(ctx, es, 1, at0, opt.precision_bits)) pinned = lambda_p * *r;
  } else {
    const std::int64_t N = static_cast<std::int64_t>(ctx.level());
    const int w = es.root_number();
    for (std::int64_t D = 5; D <= opt.max_twist && !pinned; ++D) {
      if (!curve::is_fundamental_discriminant(D)) continue;
      if (arith::gcd(D, N * static_cast<std::int64_t>(p)) != 1) continue;
      if (w * arith::kronecker(D, static_cast<std::uint64_t>(N)) != 1) continue;
      BigRational s = 0;
      for (std::int64_t a = 1; a < D; ++a) {
        const int chi = arith::kronecker(D, static_cast<std::uint64_t>(a));
        if (chi != 0) s += chi * es.value(a, D);
      }
      if (s == 0) continue;
      if (auto r = pin_ratio(ctx, es, D, s, opt.precision_bits)) {
        pinned = lambda_p * *r;
        rep.twist_used = D;
      } else {
        break;
      }
    }
  }
  if (pinned) {
    pinned->canonicalize();
    rep.pinned = true;
  } else {
    rep.flag = "unit-ambiguous absolute scale";
  }
  es.set_normalization(p, lambda_p, pinned);
  return rep;
}

EigenSymbol build_eigensymbol(const curve::CurveContext& ctx, std::size_t max_cuts, std::uint64_t seed,
                              const std::function<void(const std::string&)>& progress) {
  auto space = std::make_shared<const SymbolSpace>(ctx.level());
  // Elimination with Hecke rows fills in badly on large spaces.
  auto dual = space->num_generators() > kKrylovThreshold
                  ? extract_eigenline_krylov(*space, [&](std::uint64_t q) { return ctx.ap(q); },
                                             KrylovOptions{6, 40, seed, progress})
                  : extract_eigenline(*space, ctx, max_cuts);
  const int eps = fricke_sign(*space, dual.phi);
  return EigenSymbol(space, std::move(dual), eps, ctx.model().hash(), ctx.model().ainvs_string());
}

// ---------------------------------------------------------------------------
// Persistence

namespace {

nlohmann::json int_json(const BigInt& x) {
  if (x.fits_slong_p()) return x.get_si();
  return x.get_str();
}

BigInt json_int(const nlohmann::json& j) {
  if (j.is_string()) return BigInt(j.get<std::string>());
  if (j.is_number_unsigned()) return BigInt(std::to_string(j.get<std::uint64_t>()));
  return BigInt(static_cast<long>(j.get<std::int64_t>()));
}

}  // namespace

void export_eigensymbol(const EigenSymbol& es, const std::filesystem::path& path) {
  nlohmann::json j;
  j["version"] = EigenSymbol::kVersion;
  j["level"] = es.level();
  j["curve_hash"] = es.curve_hash();
  j["ainvs"] = es.ainvs();
  j["p"] = es.p();
  nlohmann::json map = nlohmann::json::array();
  for (std::uint32_t g = 0; g < es.space().num_generators(); ++g) map.push_back(es.space().representative(g));
  j["basis_index_map"] = std::move(map);
  nlohmann::json dual = nlohmann::json::array();
  for (std::size_t g = 0; g < es.dual_vector().size(); ++g) {
    const BigInt& v = es.dual_vector()[g];
    if (v != 0) dual.push_back({g, int_json(v), 1});
  }
  j["dual_vector"] = std::move(dual);
  j["lambda_p_normalized"] = arith::to_string(es.lambda_p());
  j["lambda_pinned"] = es.lambda_pinned() ? nlohmann::json(arith::to_string(*es.lambda_pinned())) : nlohmann::json();
  j["fricke_eps"] = es.fricke_eps();
  nlohmann::json hk = nlohmann::json::array();
  for (auto [q, a] : es.verified_hecke()) hk.push_back({q, a});
  j["verified_hecke"] = std::move(hk);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ModsymError("export_eigensymbol: cannot write " + path.string());
  out << j.dump(1) << "\n";
}

EigenSymbol import_eigensymbol(const std::filesystem::path& path, const curve::CurveContext& ctx) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ModsymError("import_eigensymbol: cannot read " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const std::exception& e) {
    throw ModsymError(std::string("import_eigensymbol: malformed file: ") + e.what());
  }
  try {
    if (j.at("version").get<int>() != EigenSymbol::kVersion) throw ModsymError("import_eigensymbol: version mismatch");
    if (j.at("curve_hash").get<std::uint64_t>() != ctx.model().hash())
      throw ModsymError("import_eigensymbol: curve hash mismatch");
    const std::uint64_t N = j.at("level").get<std::uint64_t>();
    if (N != ctx.level()) throw ModsymError("import_eigensymbol: level mismatch");
    auto space = std::make_shared<const SymbolSpace>(N);
    const auto& map = j.at("basis_index_map");
    if (map.size() != space->num_generators()) throw ModsymError("import_eigensymbol: generator count mismatch");
    for (std::uint32_t g = 0; g < space->num_generators(); ++g)
      if (map[g].get<std::size_t>() != space->representative(g))
        throw ModsymError("import_eigensymbol: generator map mismatch");
    DualEigenvector dual;
    dual.phi.assign(space->num_generators(), 0);
    for (const auto& e : j.at("dual_vector")) {
      const std::size_t g = e.at(0).get<std::size_t>();
      if (g >= dual.phi.size()) throw ModsymError("import_eigensymbol: index out of range");
      BigRational v(json_int(e.at(1)), json_int(e.at(2)));
      v.canonicalize();
      if (v.get_den() != 1) throw ModsymError("import_eigensymbol: dual vector must be integral");
      dual.phi[g] = v.get_num();
    }
    // Three Hecke equations with a_q recomputed from the curve.
    std::vector<std::pair<std::uint64_t, std::int64_t>> checks;
    for (std::uint64_t q = 2; checks.size() < 3; ++q)
      if (arith::is_prime(q) && N % q != 0) checks.emplace_back(q, ctx.ap(q));
    for (const auto& e : j.at("verified_hecke")) {
      const auto q = e.at(0).get<std::uint64_t>();
      const auto a = e.at(1).get<std::int64_t>();
      if (N % q == 0 || !arith::is_prime(q)) throw ModsymError("import_eigensymbol: bad Hecke record");
      if (ctx.ap(q) != a) throw ModsymError("import_eigensymbol: recorded a_q disagrees with the curve");
      if (std::find(checks.begin(), checks.end(), std::pair{q, a}) == checks.end()) checks.emplace_back(q, a);
    }
    std::sort(checks.begin(), checks.end());
    if (!verify_dual(*space, dual.phi, checks)) throw ModsymError("import_eigensymbol: Hecke verification failed");
    dual.verified_hecke = checks;
    const int eps = j.at("fricke_eps").get<int>();
    if (fricke_sign(*space, dual.phi) != eps) throw ModsymError("import_eigensymbol: Fricke sign mismatch");
    EigenSymbol es(space, std::move(dual), eps, ctx.model().hash(), ctx.model().ainvs_string());
    std::optional<BigRational> pinned;
    if (!j.at("lambda_pinned").is_null()) pinned = arith::parse_rational(j.at("lambda_pinned").get<std::string>());
    es.set_normalization(j.at("p").get<std::uint64_t>(),
                         arith::parse_rational(j.at("lambda_p_normalized").get<std::string>()), pinned);
    return es;
  } catch (const nlohmann::json::exception& e) {
    throw ModsymError(std::string("import_eigensymbol: malformed file: ") + e.what());
  }
}

}  // namespace kurihara::modsym
