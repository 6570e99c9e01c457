#include "kurihara/curve.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <thread>

namespace kurihara::curve {

namespace {

BigInt mod(const BigInt& a, const BigInt& p) {
  BigInt r;
  mpz_fdiv_r(r.get_mpz_t(), a.get_mpz_t(), p.get_mpz_t());
  return r;
}

int val(const BigInt& x, const BigInt& p) {
  if (x == 0) return kInfiniteValuation;
  BigInt rest;
  return static_cast<int>(mpz_remove(rest.get_mpz_t(), x.get_mpz_t(), p.get_mpz_t()));
}

BigInt inverse(const BigInt& a, const BigInt& p) {
  BigInt r;
  BigInt am = mod(a, p);
  if (mpz_invert(r.get_mpz_t(), am.get_mpz_t(), p.get_mpz_t()) == 0) {
    throw CurveError("internal: non-invertible element in Tate's algorithm");
  }
  return r;
}

BigInt pow_int(const BigInt& p, unsigned e) {
  BigInt r;
  mpz_pow_ui(r.get_mpz_t(), p.get_mpz_t(), e);
  return r;
}

/// Whether X^2 + b X + c has a root modulo the prime p.
bool quadratic_has_root(const BigInt& b, const BigInt& c, const BigInt& p) {
  if (p == 2) {
    const BigInt bb = mod(b, p), cc = mod(c, p);
    // X = 0 gives c, X = 1 gives 1 + b + c.
    return cc == 0 || mod(1 + bb + cc, p) == 0;
  }
  BigInt disc = mod(b * b - 4 * c, p);
  if (disc == 0) return true;
  return mpz_legendre(disc.get_mpz_t(), p.get_mpz_t()) == 1;
}

// Polynomials modulo p as coefficient vectors, lowest degree first.
using Poly = std::vector<BigInt>;

void trim(Poly& f) {
  while (!f.empty() && f.back() == 0) f.pop_back();
}

Poly poly_mod(Poly f, const Poly& g, const BigInt& p) {
  // g monic up to a unit.
  for (auto& c : f) c = mod(c, p);
  trim(f);
  const BigInt lead_inv = inverse(g.back(), p);
  while (f.size() >= g.size()) {
    BigInt coef = mod(f.back() * lead_inv, p);
    std::size_t shift = f.size() - g.size();
    for (std::size_t i = 0; i < g.size(); ++i) f[shift + i] = mod(f[shift + i] - coef * g[i], p);
    trim(f);
  }
  return f;
}

Poly poly_mul_mod(const Poly& a, const Poly& b, const Poly& g, const BigInt& p) {
  if (a.empty() || b.empty()) return {};
  Poly r(a.size() + b.size() - 1, BigInt(0));
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) r[i + j] += a[i] * b[j];
  return poly_mod(r, g, p);
}

Poly poly_gcd(Poly a, Poly b, const BigInt& p) {
  for (auto& c : a) c = mod(c, p);
  for (auto& c : b) c = mod(c, p);
  trim(a);
  trim(b);
  while (!b.empty()) {
    Poly r = poly_mod(a, b, p);
    a = std::move(b);
    b = std::move(r);
  }
  return a;
}

/// Number of distinct roots of the monic cubic T^3 + b T^2 + c T + d modulo p.
int cubic_root_count(const BigInt& b, const BigInt& c, const BigInt& d, const BigInt& p) {
  if (p < 1000000) {
    const std::uint64_t q = p.get_ui();
    const std::uint64_t bb = mod(b, p).get_ui(), cc = mod(c, p).get_ui(), dd = mod(d, p).get_ui();
    int count = 0;
    for (std::uint64_t t = 0; t < q; ++t) {
      std::uint64_t v = ((((t + bb) % q) * t % q + cc) % q * t % q + dd) % q;
      if (v == 0) ++count;
    }
    return count;
  }
  const Poly f = {d, c, b, BigInt(1)};
  // x^p mod f by square and multiply.
  Poly result = {BigInt(1)};
  Poly base = {BigInt(0), BigInt(1)};
  BigInt e = p;
  while (e > 0) {
    if (mpz_odd_p(e.get_mpz_t())) result = poly_mul_mod(result, base, f, p);
    base = poly_mul_mod(base, base, f, p);
    e >>= 1;
  }
  result.resize(std::max<std::size_t>(result.size(), 2), BigInt(0));
  result[1] -= 1;
  Poly g = poly_gcd(f, result, p);
  return g.empty() ? 3 : static_cast<int>(g.size()) - 1;
}

std::vector<BigInt> prime_divisors(BigInt n) {
  n = abs(n);
  std::vector<BigInt> out;
  for (unsigned long q = 2; q < 100000 && BigInt(q) * q <= n; ++q) {
    if (mpz_divisible_ui_p(n.get_mpz_t(), q)) {
      out.emplace_back(q);
      while (mpz_divisible_ui_p(n.get_mpz_t(), q)) mpz_divexact_ui(n.get_mpz_t(), n.get_mpz_t(), q);
    }
  }
  std::vector<BigInt> stack;
  if (n > 1) stack.push_back(n);
  while (!stack.empty()) {
    BigInt m = stack.back();
    stack.pop_back();
    if (m == 1) continue;
    if (mpz_probab_prime_p(m.get_mpz_t(), 40) > 0) {
      out.push_back(m);
      continue;
    }
    if (mpz_fits_ulong_p(m.get_mpz_t())) {
      for (auto [q, e] : arith::factorize(m.get_ui())) out.emplace_back(q);
      continue;
    }
    // Pollard rho (Brent) on big integers.
    BigInt factor = m;
    for (unsigned long c = 1; factor == m; ++c) {
      BigInt x = 2, y = 2, d = 1;
      while (d == 1) {
        x = (x * x + c) % m;
        y = (y * y + c) % m;
        y = (y * y + c) % m;
        BigInt diff = abs(x - y);
        mpz_gcd(d.get_mpz_t(), diff.get_mpz_t(), m.get_mpz_t());
      }
      factor = d;
    }
    stack.push_back(factor);
    stack.push_back(m / factor);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------

WeierstrassModel::WeierstrassModel(const std::array<BigInt, 5>& ainvs) : a_(ainvs) {
  const auto& [a1, a2, a3, a4, a6] = a_;
  b2 = a1 * a1 + 4 * a2;
  b4 = 2 * a4 + a1 * a3;
  b6 = a3 * a3 + 4 * a6;
  b8 = a1 * a1 * a6 + 4 * a2 * a6 - a1 * a3 * a4 + a2 * a3 * a3 - a4 * a4;
  c4 = b2 * b2 - 24 * b4;
  c6 = -b2 * b2 * b2 + 36 * b2 * b4 - 216 * b6;
  discriminant = -b2 * b2 * b8 - 8 * b4 * b4 * b4 - 27 * b6 * b6 + 9 * b2 * b4 * b6;
  if (discriminant == 0) throw CurveError("singular curve: discriminant is zero for " + ainvs_string());
  j_invariant = BigRational(c4 * c4 * c4, discriminant);
  j_invariant.canonicalize();
}

WeierstrassModel WeierstrassModel::from_ints(std::int64_t a1, std::int64_t a2, std::int64_t a3, std::int64_t a4,
                                             std::int64_t a6) {
  auto big = [](std::int64_t v) {
    BigInt r;
    mpz_set_si(r.get_mpz_t(), v);
    return r;
  };
  return WeierstrassModel({big(a1), big(a2), big(a3), big(a4), big(a6)});
}

WeierstrassModel WeierstrassModel::transformed(const BigInt& r, const BigInt& s, const BigInt& t) const {
  const auto& [a1, a2, a3, a4, a6] = a_;
  std::array<BigInt, 5> b;
  b[0] = a1 + 2 * s;
  b[1] = a2 - s * a1 + 3 * r - s * s;
  b[2] = a3 + r * a1 + 2 * t;
  b[3] = a4 - s * a3 + 2 * r * a2 - (t + r * s) * a1 + 3 * r * r - 2 * s * t;
  b[4] = a6 + r * a4 + r * r * a2 + r * r * r - t * a3 - t * t - r * t * a1;
  return WeierstrassModel(b);
}

std::string WeierstrassModel::ainvs_string() const {
  std::string s = "[";
  for (std::size_t i = 0; i < 5; ++i) {
    if (i) s += ",";
    s += a_[i].get_str();
  }
  return s + "]";
}

std::uint64_t WeierstrassModel::hash() const {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : ainvs_string()) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return h;
}

WeierstrassModel derive_invariants(const std::array<BigInt, 5>& ainvs) { return WeierstrassModel(ainvs); }

std::string to_string(Reduction r) {
  switch (r) {
    case Reduction::Good: return "good";
    case Reduction::SplitMultiplicative: return "split multiplicative";
    case Reduction::NonSplitMultiplicative: return "non-split multiplicative";
    case Reduction::Additive: return "additive";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Tate's algorithm.

LocalData tate_local_data(const WeierstrassModel& model, const BigInt& p) {
  LocalData out;
  out.prime = mpz_fits_ulong_p(p.get_mpz_t()) ? p.get_ui() : 0;
  WeierstrassModel c = model;
  const BigInt p2 = p * p, p3 = p2 * p, p4 = p3 * p;
  const BigInt half = (p + 1) / 2;  // inverse of 2 mod odd p

  for (int round = 0;; ++round) {
    const int n = val(c.discriminant, p);
    out.disc_valuation = n;
    if (n == 0) {
      out.kodaira = "I0";
      out.tamagawa = 1;
      out.conductor_exponent = 0;
      out.reduction = Reduction::Good;
      return out;
    }

    // Move the singular point of the reduction to (0, 0).
    BigInt r, t;
    if (p == 2) {
      if (val(c.b2, p) > 0) {
        r = mod(c.a4(), p);
        t = mod(r * (1 + c.a2() + c.a4()) + c.a6(), p);
      } else {
        r = mod(c.a3(), p);
        t = mod(r + c.a4(), p);
      }
    } else if (p == 3) {
      r = val(c.b2, p) > 0 ? mod(-c.b6, p) : mod(-c.b2 * c.b4, p);
      t = mod(c.a1() * r + c.a3(), p);
    } else {
      if (val(c.c4, p) > 0) {
        r = mod(-c.b2 * inverse(BigInt(12), p), p);
      } else {
        r = mod(-(c.c6 + c.b2 * c.c4) * inverse(12 * c.c4, p), p);
      }
      t = mod(-(c.a1() * r + c.a3()) * half, p);
    }
    c = c.transformed(r, 0, t);

    // Multiplicative reduction.
    if (val(c.c4, p) == 0) {
      out.conductor_exponent = 1;
      out.kodaira = "I" + std::to_string(n);
      if (quadratic_has_root(c.a1(), -c.a2(), p)) {
        out.reduction = Reduction::SplitMultiplicative;
        out.tamagawa = static_cast<std::uint64_t>(n);
      } else {
        out.reduction = Reduction::NonSplitMultiplicative;
        out.tamagawa = (n % 2 == 0) ? 2 : 1;
      }
      return out;
    }

    out.reduction = Reduction::Additive;
    if (val(c.a6(), p) < 2) {
      out.kodaira = "II";
      out.tamagawa = 1;
      out.conductor_exponent = n;
      return out;
    }
    if (val(c.b8, p) < 3) {
      out.kodaira = "III";
      out.tamagawa = 2;
      out.conductor_exponent = n - 1;
      return out;
    }
    if (val(c.b6, p) < 3) {
      out.kodaira = "IV";
      out.tamagawa = quadratic_has_root(c.a3() / p, -(c.a6() / p2), p) ? 3 : 1;
      out.conductor_exponent = n - 2;
      return out;
    }

    // Make p | a1, a2; p^2 | a3, a4; p^3 | a6.
    BigInt s;
    if (p == 2) {
      s = mod(c.a2(), p);
      t = p * mod(c.a6() / p2, p);
    } else if (p == 3) {
      s = c.a1();
      t = c.a3();
    } else {
      s = -c.a1() * half;
      t = -c.a3() * half;
    }
    c = c.transformed(0, s, t);

    const BigInt b = c.a2() / p;
    const BigInt cc = c.a4() / p2;
    const BigInt d = c.a6() / p3;
    const BigInt w = 27 * d * d - b * b * cc * cc + 4 * b * b * b * d - 18 * b * cc * d + 4 * cc * cc * cc;
    const BigInt x = 3 * cc - b * b;

    if (val(w, p) == 0) {
      out.kodaira = "I0*";
      out.tamagawa = 1 + static_cast<std::uint64_t>(cubic_root_count(b, cc, d, p));
      out.conductor_exponent = n - 4;
      return out;
    }

    if (val(x, p) == 0) {
      // Double root: move it to 0 and run the I_m^* subprocedure.
      if (p == 2) {
        r = cc;
      } else if (p == 3) {
        r = b * cc;
      } else {
        r = (b * cc - 9 * d) * inverse(2 * x, p);
      }
      r = p * mod(r, p);
      c = c.transformed(r, 0, 0);
      int ix = 3, iy = 3;
      BigInt mx = p2, my = p2;
      while (true) {
        const BigInt a2t = c.a2() / p;
        const BigInt a3t = c.a3() / my;
        const BigInt a4t = c.a4() / (p * mx);
        const BigInt a6t = c.a6() / (mx * my);
        if (val(a3t * a3t + 4 * a6t, p) == 0) {
          out.tamagawa = quadratic_has_root(a3t, -a6t, p) ? 4 : 2;
          break;
        }
        t = (p == 2) ? my * mod(a6t, p) : my * mod(-a3t * half, p);
        c = c.transformed(0, 0, t);
        my *= p;
        ++iy;
        const BigInt a2u = c.a2() / p;
        const BigInt a4u = c.a4() / (p * mx);
        const BigInt a6u = c.a6() / (mx * my);
        if (val(a4u * a4u - 4 * a6u * a2u, p) == 0) {
          // a2u X^2 + a4u X + a6u has roots iff the monic version does.
          const BigInt inv_a2 = inverse(a2u, p);
          out.tamagawa = quadratic_has_root(a4u * inv_a2, a6u * inv_a2, p) ? 4 : 2;
          break;
        }
        r = (p == 2) ? mx * mod(a6u * a2u, p) : mx * mod(-a4u * inverse(2 * a2u, p), p);
        c = c.transformed(r, 0, 0);
        mx *= p;
        ++ix;
      }
      const int m = ix + iy - 5;
      out.kodaira = "I" + std::to_string(m) + "*";
      out.conductor_exponent = n - m - 4;
      return out;
    }

    // Triple root: move it to 0.
    if (p == 2) {
      r = b;
    } else if (p == 3) {
      r = -d;
    } else {
      r = -b * inverse(BigInt(3), p);
    }
    r = p * mod(r, p);
    c = c.transformed(r, 0, 0);
    const BigInt a3t = c.a3() / p2;
    const BigInt a6t = c.a6() / p4;
    if (val(a3t * a3t + 4 * a6t, p) == 0) {
      out.kodaira = "IV*";
      out.tamagawa = quadratic_has_root(a3t, -a6t, p) ? 3 : 1;
      out.conductor_exponent = n - 6;
      return out;
    }
    t = (p == 2) ? BigInt(-p2 * mod(a6t, p)) : BigInt(p2 * mod(-a3t * half, p));
    c = c.transformed(0, 0, t);
    if (val(c.a4(), p) < 4) {
      out.kodaira = "III*";
      out.tamagawa = 2;
      out.conductor_exponent = n - 7;
      return out;
    }
    if (val(c.a6(), p) < 6) {
      out.kodaira = "II*";
      out.tamagawa = 1;
      out.conductor_exponent = n - 8;
      return out;
    }
    // Not minimal at p: scale by p and start over.
    out.input_nonminimal = true;
    c = WeierstrassModel({c.a1() / p, c.a2() / p2, c.a3() / p3, c.a4() / p4, c.a6() / (p4 * p2)});
  }
}

LocalData tate_local_data(const WeierstrassModel& model, std::uint64_t q) {
  BigInt p;
  mpz_set_ui(p.get_mpz_t(), q);
  return tate_local_data(model, p);
}

std::vector<BigInt> bad_primes(const WeierstrassModel& model) { return prime_divisors(model.discriminant); }

std::vector<LocalData> all_local_data(const WeierstrassModel& model) {
  std::vector<LocalData> out;
  for (const BigInt& q : bad_primes(model)) {
    if (!mpz_fits_ulong_p(q.get_mpz_t())) throw CurveError("bad prime exceeds 64 bits: " + q.get_str());
    LocalData ld = tate_local_data(model, q);
    if (ld.reduction != Reduction::Good || ld.input_nonminimal) out.push_back(ld);
  }
  return out;
}

void require_global_minimal(const std::vector<LocalData>& local) {
  for (const auto& ld : local) {
    if (ld.input_nonminimal) {
      throw CurveError("model is not minimal at " + std::to_string(ld.prime) +
                       "; supply a global minimal Weierstrass model");
    }
  }
}

BigInt conductor(const WeierstrassModel& model) {
  BigInt n = 1;
  for (const auto& ld : all_local_data(model)) {
    BigInt q;
    mpz_set_ui(q.get_mpz_t(), ld.prime);
    n *= pow_int(q, static_cast<unsigned>(ld.conductor_exponent));
  }
  return n;
}

// ---------------------------------------------------------------------------
// Point counting.

std::uint64_t count_points_exhaustive(const WeierstrassModel& model, std::uint64_t ell) {
  std::array<std::uint64_t, 5> a{};
  for (std::size_t i = 0; i < 5; ++i) a[i] = arith::reduce(model.ainvs()[i], ell);
  std::uint64_t count = 1;  // point at infinity
  for (std::uint64_t x = 0; x < ell; ++x) {
    const std::uint64_t rhs = ((x * x % ell * x) % ell + a[1] * x % ell * x % ell + a[3] * x % ell + a[4]) % ell;
    for (std::uint64_t y = 0; y < ell; ++y) {
      const std::uint64_t lhs = (y * y % ell + a[0] * x % ell * y % ell + a[2] * y % ell) % ell;
      if (lhs == rhs) ++count;
    }
  }
  return count;
}

std::int64_t ap_good(const WeierstrassModel& model, std::uint64_t ell) {
  if (arith::reduce(model.discriminant, ell) == 0) {
    throw CurveError("ap_good: " + std::to_string(ell) + " is a prime of bad reduction");
  }
  if (ell < 5) {
    return static_cast<std::int64_t>(ell + 1) - static_cast<std::int64_t>(count_points_exhaustive(model, ell));
  }
  // y^2 = x^3 - 27 c4 x - 54 c6 is isomorphic to the model over F_ell.
  const std::uint64_t A = arith::reduce(BigInt(-27 * model.c4), ell);
  const std::uint64_t B = arith::reduce(BigInt(-54 * model.c6), ell);
  std::vector<std::int8_t> chi(ell, -1);
  chi[0] = 0;
  for (std::uint64_t y = 1; y <= ell / 2; ++y) chi[arith::mul_mod(y, y, ell)] = 1;
  std::int64_t sum = 0;
  for (std::uint64_t x = 0; x < ell; ++x) {
    const std::uint64_t x2 = arith::mul_mod(x, x, ell);
    std::uint64_t v = arith::mul_mod(x2 + A, x, ell) + B;
    if (v >= ell) v -= ell;
    sum += chi[v];
  }
  return -sum;
}

// ---------------------------------------------------------------------------
// a_ell cache.

std::optional<std::int64_t> ApCache::get(std::uint64_t ell) const {
  std::lock_guard lock(mu_);
  auto it = values_.find(ell);
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

void ApCache::put(std::uint64_t ell, std::int64_t a) {
  std::lock_guard lock(mu_);
  values_.emplace(ell, a);
}

std::size_t ApCache::size() const {
  std::lock_guard lock(mu_);
  return values_.size();
}

std::map<std::uint64_t, std::int64_t> ApCache::snapshot() const {
  std::lock_guard lock(mu_);
  return values_;
}

namespace {

void put_le(std::string& out, std::uint64_t v, int bytes) {
  for (int i = 0; i < bytes; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint64_t get_le(const std::string& in, std::size_t pos, int bytes) {
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
  return v;
}

constexpr char kMagic[6] = {'K', 'U', 'R', 'A', 'P', '\0'};

}  // namespace

bool ApCache::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return false;
  std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (data.size() < 16 || (data.size() - 16) % 16 != 0) return false;
  if (data.compare(0, 6, std::string(kMagic, 6)) != 0) return false;
  if (get_le(data, 6, 2) != kVersion) return false;
  if (get_le(data, 8, 8) != curve_hash_) return false;
  std::map<std::uint64_t, std::int64_t> loaded;
  for (std::size_t pos = 16; pos < data.size(); pos += 16) {
    loaded[get_le(data, pos, 8)] = static_cast<std::int64_t>(get_le(data, pos + 8, 8));
  }
  std::lock_guard lock(mu_);
  for (auto& [ell, a] : loaded) values_.emplace(ell, a);
  return true;
}

void ApCache::save(const std::filesystem::path& path) const {
  std::string out(kMagic, 6);
  put_le(out, kVersion, 2);
  put_le(out, curve_hash_, 8);
  for (auto& [ell, a] : snapshot()) {
    put_le(out, ell, 8);
    put_le(out, static_cast<std::uint64_t>(a), 8);
  }
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
  }
  std::filesystem::rename(tmp, path);
}

// ---------------------------------------------------------------------------

CurveContext::CurveContext(WeierstrassModel model, std::string label)
    : model_(std::move(model)), label_(std::move(label)), cache_(model_.hash()) {
  local_ = all_local_data(model_);
  require_global_minimal(local_);
  conductor_ = 1;
  for (const auto& ld : local_) {
    BigInt q;
    mpz_set_ui(q.get_mpz_t(), ld.prime);
    conductor_ *= pow_int(q, static_cast<unsigned>(ld.conductor_exponent));
  }
}

std::uint64_t CurveContext::level() const {
  if (!mpz_fits_ulong_p(conductor_.get_mpz_t())) throw CurveError("conductor does not fit in 64 bits");
  return conductor_.get_ui();
}

const LocalData* CurveContext::local_at(std::uint64_t q) const {
  for (const auto& ld : local_) {
    if (ld.prime == q) return &ld;
  }
  return nullptr;
}

std::int64_t CurveContext::ap(std::uint64_t ell) const {
  if (const LocalData* ld = local_at(ell)) {
    switch (ld->reduction) {
      case Reduction::SplitMultiplicative: return 1;
      case Reduction::NonSplitMultiplicative: return -1;
      default: return 0;
    }
  }
  if (auto cached = cache_.get(ell)) return *cached;
  const std::int64_t a = ap_good(model_, ell);
  cache_.put(ell, a);
  return a;
}

void CurveContext::compute_aps(const std::vector<std::uint64_t>& primes, unsigned workers) const {
  std::vector<std::uint64_t> todo;
  for (std::uint64_t ell : primes) {
    if (!is_bad(ell) && !cache_.get(ell)) todo.push_back(ell);
  }
  if (todo.empty()) return;
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(todo.size())));
  if (workers == 1) {
    for (std::uint64_t ell : todo) cache_.put(ell, ap_good(model_, ell));
    return;
  }
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < todo.size(); i += workers) cache_.put(todo[i], ap_good(model_, todo[i]));
    });
  }
  for (auto& th : pool) th.join();
}

std::vector<std::int64_t> CurveContext::an_sequence(std::size_t bound) const {
  std::vector<std::int64_t> a(bound + 1, 0);
  if (bound == 0) return a;
  a[1] = 1;
  const auto primes = arith::primes_up_to(bound);
  compute_aps(primes);
  std::vector<std::uint32_t> spf(bound + 1, 0);
  for (std::uint64_t q : primes) {
    for (std::uint64_t m = q; m <= bound; m += q) {
      if (spf[m] == 0) spf[m] = static_cast<std::uint32_t>(q);
    }
  }
  for (std::size_t n = 2; n <= bound; ++n) {
    const std::uint64_t q = spf[n];
    std::size_t m = n;
    std::size_t qe = 1;
    while (m % q == 0) {
      m /= q;
      qe *= q;
    }
    if (m > 1) {
      a[n] = a[qe] * a[m];
    } else if (qe == q) {
      a[n] = ap(q);
    } else if (is_bad(q)) {
      a[n] = a[q] * a[qe / q];
    } else {
      a[n] = a[q] * a[qe / q] - static_cast<std::int64_t>(q) * a[qe / q / q];
    }
  }
  return a;
}

std::vector<std::int64_t> a_n_sequence(const CurveContext& ctx, std::size_t bound) { return ctx.an_sequence(bound); }

// ---------------------------------------------------------------------------

std::string to_string(TorsionStatus s) {
  switch (s) {
    case TorsionStatus::Trivial: return "trivial";
    case TorsionStatus::NonTrivial: return "non-trivial";
    case TorsionStatus::Indeterminate: return "indeterminate";
  }
  return "?";
}

std::string to_string(ManinStatus s) { return s == ManinStatus::Yes ? "yes" : "assert-required"; }

std::string to_string(ResidualImage r) {
  switch (r) {
    case ResidualImage::Surjective: return "surjective";
    case ResidualImage::ReducibleSuspected: return "reducible-suspected";
    case ResidualImage::Inconclusive: return "inconclusive";
  }
  return "?";
}

namespace {

// Good anomalous reduction at p >= 5. 0 -> Ehat(pZ_p) -> E(Q_p) -> E(F_p) -> 0
// splits iff p*P lies in Ehat(p^2 Z_p) for a lift P of a point of order p;
// decided on y^2 = x^3 - 27c4 x - 54c6 in Jacobian coordinates mod p^M.
bool anomalous_sequence_splits(const WeierstrassModel& m, std::uint64_t p) {
  constexpr unsigned M = 16;
  BigInt pm;
  mpz_ui_pow_ui(pm.get_mpz_t(), p, M);
  auto md = [&](const BigInt& x) {
    BigInt r = x % pm;
    if (r < 0) r += pm;
    return r;
  };
  const BigInt A = md(-27 * m.c4), B = md(-54 * m.c6);
  const auto Ap = static_cast<std::int64_t>(arith::reduce(A, p));
  const auto Bp = static_cast<std::int64_t>(arith::reduce(B, p));
  const std::int64_t P = static_cast<std::int64_t>(p);

  struct Jac {
    BigInt x, y, z;
  };
  auto dbl = [&](const Jac& a) {
    const BigInt yy = md(a.y * a.y), zz = md(a.z * a.z);
    const BigInt s = md(4 * a.x * yy), mm = md(3 * a.x * a.x + A * md(zz * zz));
    Jac r;
    r.x = md(mm * mm - 2 * s);
    r.y = md(mm * (s - r.x) - 8 * md(yy * yy));
    r.z = md(2 * a.y * a.z);
    return r;
  };
  auto add = [&](const Jac& a, const Jac& b) {
    const BigInt z1 = md(a.z * a.z), z2 = md(b.z * b.z);
    const BigInt u1 = md(a.x * z2), u2 = md(b.x * z1);
    const BigInt s1 = md(a.y * z2 * b.z), s2 = md(b.y * z1 * a.z);
    const BigInt h = md(u2 - u1), r = md(s2 - s1), hh = md(h * h), hhh = md(hh * h);
    Jac o;
    o.x = md(r * r - hhh - 2 * u1 * hh);
    o.y = md(r * (u1 * hh - o.x) - s1 * hhh);
    o.z = md(h * a.z * b.z);
    return o;
  };
  auto mul = [&](Jac a, std::uint64_t n) {
    std::optional<Jac> acc;
    for (; n; n >>= 1) {
      if (n & 1) acc = acc ? add(*acc, a) : a;
      if (n > 1) a = dbl(a);
    }
    return *acc;
  };
  auto val = [&](const BigInt& x) {
    if (x == 0) return static_cast<int>(M);
    return static_cast<int>(mpz_remove(BigInt().get_mpz_t(), x.get_mpz_t(), mpz_class(p).get_mpz_t()));
  };

  // Affine points of the reduction, and #E(F_p).
  std::vector<std::pair<std::int64_t, std::int64_t>> pts;
  for (std::int64_t x = 0; x < P; ++x)
    for (std::int64_t y = 0; y < P; ++y)
      if (((y * y - x * x * x - Ap * x - Bp) % P + P) % P == 0) pts.emplace_back(x, y);
  const std::uint64_t count = pts.size() + 1;
  if (count % p != 0) throw std::logic_error("anomalous_sequence_splits: p does not divide #E(F_p)");
  for (const auto& [x0, y0] : pts) {
    if (y0 == 0) continue;
    // Hensel-lift y (2y is a unit) with x fixed.
    BigInt x = x0, y = y0;
    for (unsigned prec = 1; prec < M; prec *= 2) {
      const BigInt f = md(y * y - x * x * x - A * x - B);
      BigInt inv;
      mpz_invert(inv.get_mpz_t(), BigInt(md(2 * y)).get_mpz_t(), pm.get_mpz_t());
      y = md(y - f * inv);
    }
    const Jac pt{x, y, 1};
    // Multiply by the prime-to-p part to land on a point of order p mod p.
    std::uint64_t cofactor = count;
    while (cofactor % p == 0) cofactor /= p;
    const Jac q = mul(pt, cofactor);
    if (val(q.z) > 0) continue;
    const Jac r = mul(q, p);
    // t = -x/y = -X Z / Y in Jacobian coordinates.
    const int vt = val(r.x) + val(r.z) - val(r.y);
    if (val(r.y) >= static_cast<int>(M) / 2) throw std::logic_error("anomalous_sequence_splits: precision loss");
    return vt >= 2;
  }
  throw std::logic_error("anomalous_sequence_splits: no point of order p");
}

}  // namespace

LocalTorsionReport local_torsion(const CurveContext& ctx, std::uint64_t p) {
  if (p < 5) throw std::invalid_argument("local_torsion: p < 5 unsupported");
  LocalTorsionReport rep;
  const LocalData* ld = ctx.local_at(p);
  if (ld == nullptr) {
    const std::int64_t ap = ctx.ap(p);
    if (arith::reduce(ap - 1, p) != 0) {
      rep.status = TorsionStatus::Trivial;
      rep.reason = "good non-anomalous reduction";
      rep.t = 0;
    } else if (anomalous_sequence_splits(ctx.model(), p)) {
      rep.status = TorsionStatus::NonTrivial;
      rep.reason = "good anomalous reduction; reduction sequence splits";
    } else {
      rep.status = TorsionStatus::Trivial;
      rep.reason = "good anomalous reduction; reduction sequence does not split";
      rep.t = 0;
    }
    return rep;
  }
  switch (ld->reduction) {
    case Reduction::SplitMultiplicative: {
      // ord_p(j) = -ord_p(Delta_min) since p does not divide c4.
      if (ld->disc_valuation % static_cast<int>(p) == 0) {
        rep.status = TorsionStatus::NonTrivial;
        rep.reason = "split multiplicative with p | ord_p(j)";
      } else {
        rep.status = TorsionStatus::Trivial;
        rep.reason = "split multiplicative with p not dividing ord_p(j)";
        rep.t = 0;
      }
      return rep;
    }
    case Reduction::NonSplitMultiplicative:
      rep.status = TorsionStatus::Trivial;
      rep.reason = "non-split multiplicative reduction";
      rep.t = 0;
      return rep;
    case Reduction::Additive:
    case Reduction::Good:
      break;
  }
  if (p != 5 && p != 7) {
    rep.status = TorsionStatus::Trivial;
    rep.reason = "additive reduction at p >= 11";
    rep.t = 0;
    return rep;
  }
  // Translate so that every a_i lies in pZ_p, then test the congruence.
  const WeierstrassModel& m = ctx.model();
  BigInt P;
  mpz_set_ui(P.get_mpz_t(), p);
  BigInt r;
  if (arith::reduce(m.c4, p) == 0) {
    r = mod(-m.b2 * inverse(BigInt(12), P), P);
  } else {
    r = mod(-(m.c6 + m.b2 * m.c4) * inverse(12 * m.c4, P), P);
  }
  const BigInt half = (P + 1) / 2;
  BigInt t = mod(-(m.a1() * r + m.a3()) * half, P);
  WeierstrassModel c = m.transformed(r, 0, t);
  c = c.transformed(0, mod(-c.a1() * half, P), 0);
  for (const BigInt& a : c.ainvs()) {
    if (mod(a, P) != 0) throw CurveError("local_torsion: failed to translate model into pZ_p");
  }
  const BigInt p2 = P * P;
  const bool hit = (p == 5) ? mod(c.a4(), p2) == 10 : mod(c.a6(), p2) == 14;
  rep.status = hit ? TorsionStatus::NonTrivial : TorsionStatus::Trivial;
  rep.reason = hit ? "additive reduction satisfying the local congruence" : "additive reduction without the congruence";
  if (!hit) rep.t = 0;
  return rep;
}

ManinStatus manin_constant_ok(const CurveContext& ctx, std::uint64_t p) {
  const LocalData* ld = ctx.local_at(p);
  if (ld != nullptr && ld->reduction == Reduction::Additive) return ManinStatus::AssertRequired;
  return ManinStatus::Yes;
}

ResidualImage rho_surjectivity_probable(const CurveContext& ctx, std::uint64_t p, std::size_t sample_count) {
  if (sample_count == 0) return ResidualImage::Inconclusive;
  bool irreducible = false, split_nonzero_trace = false, nonsplit_nonzero_trace = false, non_exceptional = false;
  std::size_t taken = 0;
  const std::uint64_t N = ctx.level();
  for (std::uint64_t ell = 2; taken < sample_count; ++ell) {
    if (!arith::is_prime(ell) || N % ell == 0 || ell == p) continue;
    ++taken;
    const std::uint64_t a = arith::reduce(ctx.ap(ell), p);
    const std::uint64_t l = ell % p;
    const std::uint64_t disc = (a * a % p + p * 4 - 4 * l % p) % p;
    const int leg = arith::legendre(disc, p);
    if (leg == -1) irreducible = true;
    if (a != 0 && leg == 1) split_nonzero_trace = true;
    if (a != 0 && leg == -1) nonsplit_nonzero_trace = true;
    if (a != 0) {
      // u = a^2 / ell; exceptional projective images force u in {0,1,2,4} or u^2 - 3u + 1 = 0.
      const std::uint64_t u = arith::mul_mod(a * a % p, *arith::inv_mod(l, p), p);
      const bool a5 = (u * u % p + p * 3 - 3 * u % p + 1) % p == 0;
      if (u != 0 && u != 1 && u != 2 && u != 4 && !a5) non_exceptional = true;
    }
  }
  if (irreducible && split_nonzero_trace && nonsplit_nonzero_trace && non_exceptional) return ResidualImage::Surjective;
  if (!irreducible) return ResidualImage::ReducibleSuspected;
  return ResidualImage::Inconclusive;
}

// ---------------------------------------------------------------------------
// Sylow subgroups of E(F_ell) on the short model y^2 = x^3 + A x + B.

namespace {

struct ShortCurve {
  std::uint64_t ell, A, B;
};

struct Pt {
  std::uint64_t x = 0, y = 0;
  bool inf = true;
};

ShortCurve short_model(const WeierstrassModel& m, std::uint64_t ell) {
  return {ell, arith::reduce(BigInt(-27 * m.c4), ell), arith::reduce(BigInt(-54 * m.c6), ell)};
}

Pt add(const ShortCurve& E, const Pt& P, const Pt& Q) {
  if (P.inf) return Q;
  if (Q.inf) return P;
  const std::uint64_t l = E.ell;
  std::uint64_t lambda;
  if (P.x == Q.x) {
    if ((P.y + Q.y) % l == 0) return Pt{};
    const std::uint64_t num = (3 * arith::mul_mod(P.x, P.x, l) + E.A) % l;
    lambda = arith::mul_mod(num, *arith::inv_mod(2 * P.y % l, l), l);
  } else {
    const std::uint64_t num = (Q.y + l - P.y) % l;
    const std::uint64_t den = (Q.x + l - P.x) % l;
    lambda = arith::mul_mod(num, *arith::inv_mod(den, l), l);
  }
  Pt R;
  R.inf = false;
  R.x = (arith::mul_mod(lambda, lambda, l) + 2 * l - P.x - Q.x) % l;
  R.y = (arith::mul_mod(lambda, (P.x + l - R.x) % l, l) + l - P.y) % l;
  return R;
}

Pt mul(const ShortCurve& E, Pt P, std::uint64_t k) {
  Pt R;
  while (k > 0) {
    if (k & 1) R = add(E, R, P);
    P = add(E, P, P);
    k >>= 1;
  }
  return R;
}

/// Exponent j with p^j the order of a point of p-power order.
int p_order_exponent(const ShortCurve& E, Pt Q, std::uint64_t p) {
  int j = 0;
  while (!Q.inf) {
    Q = mul(E, Q, p);
    ++j;
  }
  return j;
}

}  // namespace

SylowStructure sylow_structure(const CurveContext& ctx, std::uint64_t ell, std::uint64_t p, std::mt19937_64& rng) {
  if (ell < 5) return sylow_structure_exhaustive(ctx.model(), ell, p);
  const std::uint64_t order = ell + 1 - static_cast<std::uint64_t>(ctx.ap(ell));
  SylowStructure s;
  std::uint64_t cof = order;
  int e = 0;
  while (cof % p == 0) {
    cof /= p;
    ++e;
  }
  if (e == 0) return s;
  const ShortCurve E = short_model(ctx.model(), ell);
  // A random element of Z/p^e1 x Z/p^e2 has order below p^e1 with probability <= 1/p.
  const std::size_t samples =
      2 * static_cast<std::size_t>(std::ceil(40.0 / std::log2(static_cast<double>(p))));
  std::uniform_int_distribution<std::uint64_t> dist(0, ell - 1);
  int e1 = 0;
  std::size_t taken = 0;
  while (taken < samples) {
    const std::uint64_t x = dist(rng);
    const std::uint64_t rhs = (arith::mul_mod((arith::mul_mod(x, x, ell) + E.A) % ell, x, ell) + E.B) % ell;
    auto y = arith::sqrt_mod(rhs, ell);
    if (!y) continue;
    Pt P{x, (rng() & 1) ? *y : (ell - *y) % ell, false};
    e1 = std::max(e1, p_order_exponent(E, mul(E, P, cof), p));
    ++taken;
  }
  s.e1 = e1;
  s.e2 = e - e1;
  s.samples = samples;
  return s;
}

SylowStructure sylow_structure_exhaustive(const WeierstrassModel& model, std::uint64_t ell, std::uint64_t p) {
  SylowStructure s;
  const std::uint64_t order = count_points_exhaustive(model, ell);
  std::uint64_t cof = order;
  int e = 0;
  while (cof % p == 0) {
    cof /= p;
    ++e;
  }
  if (e == 0) return s;
  if (ell < 5) throw std::invalid_argument("sylow_structure_exhaustive: ell < 5 with p | #E unsupported");
  const ShortCurve E = short_model(model, ell);
  std::vector<Pt> points{Pt{}};
  for (std::uint64_t x = 0; x < ell; ++x) {
    const std::uint64_t rhs = (arith::mul_mod((arith::mul_mod(x, x, ell) + E.A) % ell, x, ell) + E.B) % ell;
    for (std::uint64_t y = 0; y < ell; ++y) {
      if (arith::mul_mod(y, y, ell) == rhs) points.push_back(Pt{x, y, false});
    }
  }
  // |E[p^j]| for j = 1..e determines the exponents.
  std::uint64_t pj = 1;
  std::uint64_t prev = 1;
  int e2 = 0;
  for (int j = 1; j <= e; ++j) {
    pj *= p;
    std::uint64_t killed = 0;
    for (const Pt& P : points) {
      if (mul(E, P, pj).inf) ++killed;
    }
    if (killed / prev == p * p) ++e2;
    prev = killed;
  }
  s.e1 = e - e2;
  s.e2 = e2;
  s.samples = points.size();
  return s;
}

}  // namespace kurihara::curve
