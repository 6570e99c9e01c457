#include "kurihara/kurihara.hpp"

#include <algorithm>
#include <exception>
#include <stdexcept>
#include <thread>

namespace kurihara::kn {

using kolyvagin::KolyvaginPrime;
using kolyvagin::Modulus;

namespace {

std::uint64_t power(std::uint64_t p, int k) {
  std::uint64_t r = 1;
  for (int i = 0; i < k; ++i) {
    if (r > (std::uint64_t{1} << 31) / p) throw std::invalid_argument("delta: p^k exceeds 2^31");
    r *= p;
  }
  return r;
}

int residue_valuation(std::uint64_t value, std::uint64_t p, int k) {
  if (value == 0) return k;
  int v = 0;
  while (value % p == 0) {
    value /= p;
    ++v;
  }
  return v;
}

KuriharaNumber make_number(const Modulus& m, int k_used, std::uint64_t value, std::uint64_t p,
                           const modsym::EigenSymbol& es) {
  KuriharaNumber kn;
  kn.n = m.n();
  kn.factors = m.factors();
  kn.k_used = k_used;
  kn.value = value;
  kn.valuation = residue_valuation(value, p, k_used);
  kn.tag = es.lambda_pinned() && *es.lambda_pinned() == es.lambda_p() ? Normalization::Pinned
                                                                      : Normalization::PNormalized;
  return kn;
}

// Runs f(lo, hi) on `workers` contiguous blocks of [first, last] and sums mod M.
template <class F>
std::uint64_t split_sum(std::uint64_t first, std::uint64_t last, unsigned workers, std::uint64_t M, F&& f) {
  if (last < first) return 0;
  const std::uint64_t total = last - first + 1;
  workers = static_cast<unsigned>(std::max<std::uint64_t>(1, std::min<std::uint64_t>(workers, total / 1024 + 1)));
  if (workers == 1) return f(first, last + 1) % M;
  std::vector<std::uint64_t> partial(workers, 0);
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w) {
    const std::uint64_t lo = first + total * w / workers, hi = first + total * (w + 1) / workers;
    pool.emplace_back([&, w, lo, hi] {
      try {
        partial[w] = f(lo, hi);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  std::uint64_t s = 0;
  for (auto x : partial) s = (s + x) % M;
  return s;
}

void check_k(const Modulus& m, int k_used) {
  if (k_used < 1) throw std::invalid_argument("delta: k_used must be >= 1");
  if (m.nu() > 0 && k_used > kolyvagin::i_valuation(m))
    throw std::invalid_argument("delta: k_used exceeds v(I_n)");
}

}  // namespace

std::string KuriharaNumber::valuation_string() const {
  return nonzero() ? std::to_string(valuation) : ">=" + std::to_string(k_used);
}

KuriharaNumber delta(const modsym::EigenSymbol& es, const Modulus& m, int k_used, unsigned workers) {
  check_k(m, k_used);
  const std::uint64_t p = es.p();
  if (p == 0) throw std::logic_error("delta: eigen-symbol is not normalized");
  const std::uint64_t M = power(p, k_used);
  if (m.nu() == 0) return make_number(m, k_used, es.residue(0, 1, M), p, es);

  const std::uint64_t n = m.n();
  const auto& ps = m.primes();
  std::vector<const arith::LogTable*> tabs;
  for (const auto& q : ps) tabs.push_back(&q.logs());
  // [a/n]^+ = [-a/n]^+, so a and n - a share one symbol evaluation.
  auto block = [&](std::uint64_t lo, std::uint64_t hi) {
    std::uint64_t acc = 0;
    for (std::uint64_t a = lo; a < hi; ++a) {
      std::uint64_t l1 = 1, l2 = 1;
      bool unit = true;
      for (std::size_t i = 0; i < ps.size(); ++i) {
        const std::uint64_t ell = ps[i].ell(), r = a % ell;
        if (r == 0) {
          unit = false;
          break;
        }
        l1 = l1 * (tabs[i]->log(r) % M) % M;
        l2 = l2 * (tabs[i]->log(ell - r) % M) % M;
      }
      if (!unit) continue;
      const std::uint64_t w = (l1 + l2) % M;
      if (w == 0) continue;
      acc = (acc + es.residue(static_cast<std::int64_t>(a), static_cast<std::int64_t>(n), M) * w) % M;
    }
    return acc;
  };
  return make_number(m, k_used, split_sum(1, (n - 1) / 2, workers, M, block), p, es);
}

Delta1 delta_1(const modsym::EigenSymbol& es) {
  Delta1 d;
  d.value = es.value(0, 1);
  d.pinned = es.pinned_value(0, 1);
  d.valuation = es.p() ? arith::valuation(d.value, es.p()) : kInfiniteValuation;
  return d;
}

MazurTateTruncation mazur_tate_truncation(const modsym::EigenSymbol& es, const Modulus& m, int k_used) {
  check_k(m, k_used);
  const std::uint64_t p = es.p();
  const std::uint64_t M = power(p, k_used);
  const std::size_t r = static_cast<std::size_t>(m.nu());
  MazurTateTruncation mt;
  mt.n = m.n();
  mt.k_used = k_used;
  mt.coefficients.assign(std::size_t{1} << r, 0);
  const std::uint64_t n = m.n();
  if (r == 0) {
    mt.coefficients[0] = es.residue(0, 1, M);
    return mt;
  }
  // Walk (Z/n)^x through exponent tuples: a = CRT(eta_i^e_i).
  std::vector<std::uint64_t> ell(r), eta(r), idem(r), e(r, 0), g(r, 1);
  for (std::size_t i = 0; i < r; ++i) {
    ell[i] = m.primes()[i].ell();
    eta[i] = m.primes()[i].eta();
    const std::uint64_t cof = n / ell[i];
    idem[i] = static_cast<std::uint64_t>(static_cast<unsigned __int128>(cof) * *arith::inv_mod(cof % ell[i], ell[i]) % n);
  }
  auto crt_value = [&] {
    unsigned __int128 a = 0;
    for (std::size_t i = 0; i < r; ++i) a = (a + static_cast<unsigned __int128>(g[i]) * idem[i]) % n;
    return static_cast<std::uint64_t>(a);
  };
  std::vector<std::uint64_t> sub(mt.coefficients.size());
  while (true) {
    const std::uint64_t a = crt_value();
    const std::uint64_t s = es.residue(static_cast<std::int64_t>(a), static_cast<std::int64_t>(n), M);
    if (s != 0) {
      sub[0] = 1;
      for (std::size_t mask = 1; mask < sub.size(); ++mask) {
        const int low = __builtin_ctzll(mask);
        sub[mask] = sub[mask & (mask - 1)] * (e[static_cast<std::size_t>(low)] % M) % M;
      }
      for (std::size_t mask = 0; mask < sub.size(); ++mask)
        mt.coefficients[mask] = (mt.coefficients[mask] + s * sub[mask]) % M;
    }
    std::size_t i = 0;
    while (i < r) {
      if (++e[i] < ell[i] - 1) {
        g[i] = g[i] * eta[i] % ell[i];
        break;
      }
      e[i] = 0;
      g[i] = 1;
      ++i;
    }
    if (i == r) break;
  }
  return mt;
}

std::string to_string(SignStatus s) { return s == SignStatus::Consistent ? "consistent" : "violation"; }

SignStatus functional_sign_check(int w, const Modulus& m, const KuriharaNumber& kn) {
  const int sign = m.nu() % 2 == 0 ? 1 : -1;
  return sign != w && kn.nonzero() ? SignStatus::Violation : SignStatus::Consistent;
}

bool unit_invariance_audit(const modsym::EigenSymbol& es, const Modulus& m, int k_used,
                           const std::vector<std::uint64_t>& alternate_roots) {
  if (alternate_roots.size() != m.primes().size())
    throw std::invalid_argument("unit_invariance_audit: one root per prime expected");
  std::vector<KolyvaginPrime> ps;
  for (std::size_t i = 0; i < m.primes().size(); ++i)
    ps.push_back(alternate_roots[i] ? m.primes()[i].with_root(alternate_roots[i]) : m.primes()[i]);
  const auto base = delta(es, m, k_used);
  const auto alt = delta(es, Modulus(std::move(ps)), k_used);
  return base.valuation == alt.valuation;
}

// ---------------------------------------------------------------------------

DeltaCollection scan(const modsym::EigenSymbol& es, const std::vector<KolyvaginPrime>& pool, const ScanOptions& opt) {
  if (es.p() != opt.p) throw std::invalid_argument("scan: eigen-symbol normalized for another prime");
  if (opt.k < 1 || opt.nu_max < 0) throw std::invalid_argument("scan: need k >= 1 and nu_max >= 0");
  auto say = [&](const std::string& s) {
    if (opt.progress) opt.progress(s);
  };
  DeltaCollection dc;
  dc.p = opt.p;
  dc.k = opt.k;
  dc.bound = opt.bound;
  for (int nu = 0; nu <= opt.nu_max; ++nu) dc.budgets.push_back(opt.budget_for(nu));
  dc.nu_max = opt.nu_max;
  dc.root_number = es.root_number();
  dc.curve_hash = es.curve_hash();
  dc.sieved_primes = pool.size();
  dc.delta1 = delta_1(es);
  const int w = dc.root_number;

  auto record = [&](PartialRecord& pr, const KuriharaNumber& kn) {
    ++pr.computed;
    if (kn.nonzero()) {
      if (!pr.witnessed || kn.valuation < pr.min_valuation) {
        pr.witnessed = true;
        pr.min_valuation = kn.valuation;
        pr.attained = 1;
        pr.witness = kn.n;
      } else if (kn.valuation == pr.min_valuation) {
        ++pr.attained;
      }
    } else if (!pr.witnessed) {
      pr.min_valuation = std::min(pr.min_valuation, kn.k_used);
    }
  };

  for (int nu = 0; nu <= opt.nu_max; ++nu) {
    PartialRecord pr;
    pr.nu = nu;
    pr.audit = (nu % 2 == 0 ? 1 : -1) != w;
    pr.min_valuation = opt.k;
    if (nu == 0) {
      // v(I_1) is infinite: delta~_1 is known exactly, so work to one digit past its valuation.
      const int v = dc.delta1.valuation;
      const int k0 = v == kInfiniteValuation ? opt.k : std::max(opt.k, v + 1);
      const auto kn = delta(es, Modulus(), k0);
      record(pr, kn);
      pr.saturated = kn.nonzero();
      if (pr.audit && functional_sign_check(w, Modulus(), kn) == SignStatus::Violation) dc.parity_audit_pass = false;
      dc.entries.push_back(kn);
      dc.is_audit.push_back(pr.audit);
    } else {
      kolyvagin::ModulusStream stream(pool, nu, pr.audit ? opt.audit_samples : opt.budget_for(nu));
      while (auto m = stream.next()) {
        const int k_used = std::min(opt.k, kolyvagin::i_valuation(*m));
        const auto kn = delta(es, *m, k_used, opt.workers);
        if (pr.audit) {
          ++pr.computed;
          if (functional_sign_check(w, *m, kn) == SignStatus::Violation) dc.parity_audit_pass = false;
        } else {
          record(pr, kn);
        }
        dc.entries.push_back(kn);
        dc.is_audit.push_back(pr.audit);
      }
      pr.saturated = !pr.audit && pr.witnessed && pr.attained >= opt.saturation && pr.min_valuation < opt.k - 1;
    }
    say("nu=" + std::to_string(nu) + (pr.audit ? " audit" : "") + " computed " + std::to_string(pr.computed));
    dc.partials.push_back(pr);
  }

  for (const auto& pr : dc.partials) {
    if (pr.audit || !pr.witnessed) continue;
    if (!dc.ord_estimate) dc.ord_estimate = pr.nu;
    if (!dc.mod_p_ord && pr.min_valuation == 0) dc.mod_p_ord = pr.nu;
    if (!dc.partial_infinity || pr.min_valuation < *dc.partial_infinity) dc.partial_infinity = pr.min_valuation;
  }
  if (dc.partial_infinity) {
    for (std::size_t i = 0; i < dc.entries.size(); ++i) {
      const auto& kn = dc.entries[i];
      if (!dc.is_audit[i] && !kn.nonzero() && kn.k_used <= *dc.partial_infinity + 1) dc.precision_limited = true;
    }
  }
  return dc;
}

}  // namespace kurihara::kn
