#include "kurihara/kolyvagin.hpp"

#include <algorithm>
#include <stdexcept>

namespace kurihara::kolyvagin {

KolyvaginPrime::KolyvaginPrime(std::uint64_t ell, std::int64_t a_ell, int k_ell, std::uint64_t eta)
    : ell_(ell), a_ell_(a_ell), k_ell_(k_ell), eta_(eta), lazy_(std::make_shared<Lazy>()) {}

const arith::LogTable& KolyvaginPrime::logs() const {
  std::call_once(lazy_->once, [&] { lazy_->table = std::make_unique<arith::LogTable>(ell_, eta_); });
  return *lazy_->table;
}

KolyvaginPrime KolyvaginPrime::with_root(std::uint64_t eta) const {
  if (!arith::is_primitive_root(eta, ell_)) throw std::invalid_argument("with_root: not a primitive root");
  return KolyvaginPrime(ell_, a_ell_, k_ell_, eta);
}

int k_ell(std::uint64_t ell, std::int64_t a_ell, std::uint64_t p) {
  const int v1 = arith::valuation(static_cast<std::int64_t>(ell - 1), p);
  const std::int64_t t = a_ell - static_cast<std::int64_t>(ell) - 1;
  if (t == 0) return v1;
  return std::min(v1, arith::valuation(t, p));
}

std::optional<KolyvaginPrime> kolyvagin_prime(const curve::CurveContext& ctx, std::uint64_t p, std::uint64_t ell) {
  if (!arith::is_prime(ell) || ell == p || ctx.level() % ell == 0 || (ell - 1) % p != 0) return std::nullopt;
  const std::int64_t a = ctx.ap(ell);
  const int k = k_ell(ell, a, p);
  if (k < 1) return std::nullopt;
  return KolyvaginPrime(ell, a, k, arith::primitive_root(ell));
}

std::vector<KolyvaginPrime> sieve(const curve::CurveContext& ctx, std::uint64_t p, int k, std::uint64_t bound,
                                  unsigned workers) {
  if (p < 5 || !arith::is_prime(p)) throw std::invalid_argument("sieve: p must be a prime >= 5");
  if (k < 1) throw std::invalid_argument("sieve: k must be >= 1");
  std::uint64_t pk = 1;
  for (int i = 0; i < k; ++i) pk *= p;
  std::vector<std::uint64_t> candidates;
  for (std::uint64_t ell = pk + 1; ell <= bound; ell += pk)
    if (arith::is_prime(ell) && ctx.level() % ell != 0) candidates.push_back(ell);
  ctx.compute_aps(candidates, workers);
  std::vector<KolyvaginPrime> out;
  for (std::uint64_t ell : candidates) {
    const std::int64_t a = ctx.ap(ell);
    const int kl = k_ell(ell, a, p);
    if (kl >= k) out.emplace_back(ell, a, kl, arith::primitive_root(ell));
  }
  return out;
}

Modulus::Modulus(std::vector<KolyvaginPrime> primes) : primes_(std::move(primes)) {
  std::sort(primes_.begin(), primes_.end(), [](const auto& x, const auto& y) { return x.ell() < y.ell(); });
  for (std::size_t i = 0; i < primes_.size(); ++i) {
    if (i > 0 && primes_[i].ell() == primes_[i - 1].ell()) throw std::invalid_argument("Modulus: repeated prime");
    if (n_ > (std::uint64_t{1} << 62) / primes_[i].ell()) throw std::invalid_argument("Modulus: n too large");
    n_ *= primes_[i].ell();
  }
}

std::vector<std::uint64_t> Modulus::factors() const {
  std::vector<std::uint64_t> f;
  for (const auto& q : primes_) f.push_back(q.ell());
  return f;
}

int i_valuation(const Modulus& m) {
  if (m.nu() == 0) throw std::invalid_argument("i_valuation: undefined for n = 1");
  int v = m.primes().front().k_ell();
  for (const auto& q : m.primes()) v = std::min(v, q.k_ell());
  return v;
}

ModulusStream::ModulusStream(std::vector<KolyvaginPrime> pool, int nu, std::size_t budget)
    : pool_(std::move(pool)), idx_(static_cast<std::size_t>(std::max(nu, 0))), remaining_(budget) {
  if (nu < 0) throw std::invalid_argument("ModulusStream: nu < 0");
  if (idx_.size() > pool_.size()) done_ = true;
  for (std::size_t i = 0; i < idx_.size(); ++i) idx_[i] = i;
}

std::optional<Modulus> ModulusStream::next() {
  if (done_ || remaining_ == 0) return std::nullopt;
  if (started_) {
    // Colex successor: bump the lowest position that has room, reset those below it.
    const std::size_t r = idx_.size();
    std::size_t i = 0;
    while (i < r && idx_[i] + 1 == (i + 1 < r ? idx_[i + 1] : pool_.size())) ++i;
    if (i == r) {
      done_ = true;
      return std::nullopt;
    }
    ++idx_[i];
    for (std::size_t j = 0; j < i; ++j) idx_[j] = j;
  }
  started_ = true;
  --remaining_;
  std::vector<KolyvaginPrime> ps;
  for (std::size_t i : idx_) ps.push_back(pool_[i]);
  return Modulus(std::move(ps));
}

std::vector<Modulus> enumerate_moduli(const std::vector<KolyvaginPrime>& primes, int nu, std::size_t budget) {
  ModulusStream s(primes, nu, budget);
  std::vector<Modulus> out;
  while (auto m = s.next()) out.push_back(std::move(*m));
  return out;
}

}  // namespace kurihara::kolyvagin
