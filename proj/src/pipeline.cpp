#include "kurihara/pipeline.hpp"

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>

namespace kurihara::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

std::string hex(std::uint64_t x) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << x;
  return os.str();
}

void RunConfig::validate() const {
  if (p < 5 || !arith::is_prime(p)) throw RunError(kUsage, "p must be a prime >= 5");
  if (k < 1) throw RunError(kUsage, "k must be >= 1");
  if (nu_max < 0) throw RunError(kUsage, "nu-max must be >= 0");
  if (budgets.empty()) throw RunError(kUsage, "budget list is empty");
}

std::array<BigInt, 5> parse_ainvs(const std::string& text) {
  std::string t;
  for (char c : text)
    if (c != '[' && c != ']' && c != ' ') t += c;
  std::array<BigInt, 5> a;
  std::size_t i = 0;
  std::stringstream ss(t);
  std::string part;
  while (std::getline(ss, part, ',')) {
    if (i == 5) throw RunError(kUsage, "expected five a-invariants");
    if (a[i].set_str(part, 10) != 0) throw RunError(kUsage, "bad a-invariant '" + part + "'");
    ++i;
  }
  if (i != 5) throw RunError(kUsage, "expected five a-invariants");
  return a;
}

void load_curve_file(const fs::path& path, RunConfig& cfg) {
  std::ifstream in(path);
  if (!in) throw RunError(kUsage, "cannot read curve file " + path.string());
  json j;
  try {
    in >> j;
    const auto& arr = j.at("ainvs");
    if (!arr.is_array() || arr.size() != 5) throw RunError(kUsage, "curve file: ainvs must have five entries");
    for (std::size_t i = 0; i < 5; ++i) {
      const std::string s = arr[i].is_string() ? arr[i].get<std::string>() : arr[i].dump();
      if (cfg.ainvs[i].set_str(s, 10) != 0) throw RunError(kUsage, "curve file: bad a-invariant " + s);
    }
    if (j.contains("label")) cfg.label = j.at("label").get<std::string>();
  } catch (const json::exception& e) {
    throw RunError(kUsage, std::string("curve file: ") + e.what());
  }
}

fs::path resolve_cache_dir(const std::string& flag) {
  if (const char* env = std::getenv("KURIHARA_CACHE"); env && *env) return env;
  if (!flag.empty()) return flag;
  return ".kurihara-cache";
}

fs::path ap_cache_path(const fs::path& dir, std::uint64_t h) { return dir / (hex(h) + ".aps"); }
fs::path modsym_cache_path(const fs::path& dir, std::uint64_t h) { return dir / (hex(h) + ".modsym.json"); }

void Session::save_ap_cache(const fs::path& dir) const {
  std::error_code ec;
  fs::create_directories(dir, ec);
  ctx->ap_cache().save(ap_cache_path(dir, ctx->model().hash()));
}

std::unique_ptr<curve::CurveContext> open_curve(const RunConfig& cfg) {
  std::unique_ptr<curve::CurveContext> ctx;
  try {
    ctx = std::make_unique<curve::CurveContext>(curve::WeierstrassModel(cfg.ainvs), cfg.label);
    (void)ctx->level();
  } catch (const curve::CurveError& e) {
    throw RunError(kUsage, e.what());
  } catch (const std::exception& e) {
    throw RunError(kUsage, e.what());
  }
  if (!cfg.cache_dir.empty()) ctx->ap_cache().load(ap_cache_path(cfg.cache_dir, ctx->model().hash()));
  return ctx;
}

namespace {

Session open_unnormalized(const RunConfig& cfg, const Log& log) {
  Session s;
  s.ctx = open_curve(cfg);
  const auto& ctx = *s.ctx;
  if (cfg.import_modsym) {
    try {
      s.es = std::make_unique<modsym::EigenSymbol>(modsym::import_eigensymbol(*cfg.import_modsym, ctx));
      s.modsym_source = "import";
    } catch (const std::exception& e) {
      throw RunError(kHypothesis, std::string("modular symbol import rejected: ") + e.what());
    }
  } else if (!cfg.cache_dir.empty()) {
    const fs::path cached = modsym_cache_path(cfg.cache_dir, ctx.model().hash());
    if (fs::exists(cached)) {
      try {
        s.es = std::make_unique<modsym::EigenSymbol>(modsym::import_eigensymbol(cached, ctx));
        s.modsym_source = "cache";
      } catch (const std::exception& e) {
        log(std::string("cached eigen data rejected (") + e.what() + "); rebuilding");
      }
    }
  }
  if (!s.es) {
    log("building modular symbols for level " + std::to_string(ctx.level()));
    try {
      s.es = std::make_unique<modsym::EigenSymbol>(modsym::build_eigensymbol(ctx, 25, cfg.seed, log));
    } catch (const modsym::ModsymError& e) {
      throw RunError(kInvariant, e.what());
    }
    s.modsym_source = "built";
  }
  s.ctx->set_root_number(s.es->root_number());
  return s;
}

void normalize_session(Session& s, const RunConfig& cfg, std::uint64_t probe_bound) {
  modsym::NormalizeOptions opt;
  opt.probe_bound = probe_bound;
  opt.precision_bits = cfg.precision_bits;
  try {
    s.normalization = modsym::normalize(*s.es, *s.ctx, cfg.p, opt);
  } catch (const modsym::ModsymError& e) {
    throw RunError(kInvariant, e.what());
  }
  if (s.modsym_source == "built" && !cfg.cache_dir.empty()) {
    std::error_code ec;
    fs::create_directories(cfg.cache_dir, ec);
    modsym::export_eigensymbol(*s.es, modsym_cache_path(cfg.cache_dir, s.ctx->model().hash()));
  }
}

std::string sign(int w) { return w > 0 ? "+1" : "-1"; }

std::string product(const std::vector<std::uint64_t>& f) {
  if (f.empty()) return "1";
  std::string s;
  for (auto x : f) s += (s.empty() ? "" : "·") + std::to_string(x);
  return s;
}

json valuation_json(int v) { return v == kInfiniteValuation ? json("inf") : json(v); }

json curve_json(const curve::CurveContext& ctx) {
  json c;
  json a = json::array();
  for (const auto& x : ctx.model().ainvs()) a.push_back(x.get_str());
  c["ainvs"] = a;
  c["label"] = ctx.label();
  c["conductor"] = ctx.conductor().get_str();
  c["discriminant"] = ctx.model().discriminant.get_str();
  c["hash"] = hex(ctx.model().hash());
  c["root_number"] = *ctx.root_number();
  c["root_number_source"] = "fricke";
  json local = json::array();
  for (const auto& ld : ctx.local_data()) {
    local.push_back({{"prime", ld.prime},
                     {"kodaira", ld.kodaira},
                     {"tamagawa", ld.tamagawa},
                     {"reduction", curve::to_string(ld.reduction)},
                     {"conductor_exponent", ld.conductor_exponent},
                     {"disc_valuation", ld.disc_valuation}});
  }
  c["local_data"] = local;
  return c;
}

json modsym_json(const Session& s) {
  const auto& es = *s.es;
  json m;
  m["level"] = es.level();
  m["generators"] = es.space().num_generators();
  json hecke = json::array();
  for (auto [q, a] : es.verified_hecke()) hecke.push_back({q, a});
  m["verified_hecke"] = hecke;
  m["fricke_eps"] = es.fricke_eps();
  m["lambda_p"] = arith::to_string(es.lambda_p());
  m["lambda_pinned"] = es.lambda_pinned() ? json(arith::to_string(*es.lambda_pinned())) : json(nullptr);
  m["probe_min_valuation"] = s.normalization.probe_min_valuation;
  m["pinned"] = s.normalization.pinned;
  m["twist_used"] = s.normalization.twist_used ? json(*s.normalization.twist_used) : json(nullptr);
  m["scale_flag"] = s.normalization.flag;
  return m;
}

json number_json(const kn::KuriharaNumber& x, bool audit) {
  return {{"n", x.n},
          {"factors", x.factors},
          {"k_used", x.k_used},
          {"value", x.value},
          {"valuation", x.nonzero() ? json(x.valuation) : json(">=" + std::to_string(x.k_used))},
          {"audit", audit},
          {"normalization", x.tag == kn::Normalization::Pinned ? "pinned" : "p-normalized"}};
}

json delta1_json(const kn::Delta1& d) {
  return {{"value", arith::to_string(d.value)},
          {"pinned", d.pinned ? json(arith::to_string(*d.pinned)) : json(nullptr)},
          {"valuation", valuation_json(d.valuation)}};
}

json scan_json(const kn::DeltaCollection& dc) {
  json s;
  s["p"] = dc.p;
  s["k"] = dc.k;
  s["bound"] = dc.bound;
  s["budgets"] = dc.budgets;
  s["nu_max"] = dc.nu_max;
  s["sieved_primes"] = dc.sieved_primes;
  json entries = json::array();
  for (std::size_t i = 0; i < dc.entries.size(); ++i) entries.push_back(number_json(dc.entries[i], dc.is_audit[i]));
  s["entries"] = entries;
  json partials = json::array();
  for (const auto& pr : dc.partials) {
    partials.push_back(
        {{"nu", pr.nu},
         {"audit", pr.audit},
         {"computed", pr.computed},
         {"witnessed", pr.witnessed},
         {"min_valuation", pr.witnessed ? json(pr.min_valuation) : json(">=" + std::to_string(pr.min_valuation))},
         {"attained", pr.attained},
         {"saturated", pr.saturated},
         {"witness", pr.witness ? json(*pr.witness) : json(nullptr)}});
  }
  s["partials"] = partials;
  s["ord_estimate"] = dc.ord_estimate ? json(*dc.ord_estimate) : json(nullptr);
  s["mod_p_ord"] = dc.mod_p_ord ? json(*dc.mod_p_ord) : json(nullptr);
  s["partial_infinity"] = dc.partial_infinity ? json(*dc.partial_infinity) : json(nullptr);
  s["parity_audit"] = dc.parity_audit_pass ? "pass" : "fail";
  s["precision_limited"] = dc.precision_limited;
  return s;
}

json hypotheses_json(const selmer::Hypotheses& h) {
  return {{"rho_surjective", curve::to_string(h.rho)},
          {"rho_asserted", h.rho_asserted},
          {"manin", curve::to_string(h.manin)},
          {"manin_asserted", h.manin_asserted},
          {"local_torsion", {{"status", curve::to_string(h.local_torsion.status)}, {"reason", h.local_torsion.reason}}},
          {"tamagawa_prime_to_p", h.tamagawa_prime_to_p},
          {"all_hold", h.all()}};
}

const kn::KuriharaNumber* witness_entry(const kn::DeltaCollection& dc) {
  if (!dc.ord_estimate) return nullptr;
  for (std::size_t i = 0; i < dc.entries.size(); ++i)
    if (!dc.is_audit[i] && dc.entries[i].nu() == *dc.ord_estimate && dc.entries[i].nonzero() &&
        dc.entries[i].valuation == dc.partial(*dc.ord_estimate).min_valuation)
      return &dc.entries[i];
  return nullptr;
}

}  // namespace

Session open_session(const RunConfig& cfg, const Log& log) {
  Session s = open_unnormalized(cfg, log);
  normalize_session(s, cfg, 20);
  return s;
}

Outcome analyze(const RunConfig& cfg, const Log& log) {
  cfg.validate();
  Session s = open_unnormalized(cfg, log);
  const auto& ctx = *s.ctx;
  log("sieving Kolyvagin primes up to " + std::to_string(cfg.bound));
  const auto pool = kolyvagin::sieve(ctx, cfg.p, 1, cfg.bound, cfg.workers);
  normalize_session(s, cfg, std::max<std::uint64_t>(20, pool.empty() ? 0 : pool.front().ell()));
  const auto& es = *s.es;

  kn::ScanOptions so;
  so.p = cfg.p;
  so.k = cfg.k;
  so.bound = cfg.bound;
  so.nu_max = cfg.nu_max;
  so.budget = cfg.budgets.front();
  so.budgets = cfg.budgets;
  so.audit_samples = cfg.audit_samples;
  so.workers = cfg.workers;
  so.progress = log;
  kn::DeltaCollection dc;
  try {
    dc = kn::scan(es, pool, so);
  } catch (const modsym::ModsymError& e) {
    throw RunError(kInvariant, e.what());
  }

  const auto pred = selmer::predict_structure(dc);
  const auto hyp = selmer::check_hypotheses(ctx, cfg.p, cfg.assert_manin, cfg.assert_surjective);
  const auto tam = selmer::tamagawa_conjecture_check(dc, ctx.local_data());
  std::mt19937_64 rng(cfg.seed);
  const auto semi = selmer::semilocal_report(dc, ctx, hyp, rng);
  const int w = es.root_number();
  std::optional<selmer::Parity> parity;
  if (dc.ord_estimate) parity = selmer::parity_check(dc, w);
  const auto* wit = witness_entry(dc);

  Outcome out;
  json& r = out.report;
  r["schema"] = "kurihara-report/1";
  r["curve"] = curve_json(ctx);
  r["config"] = {{"p", cfg.p},
                 {"k", cfg.k},
                 {"bound", cfg.bound},
                 {"nu_max", cfg.nu_max},
                 {"budgets", cfg.budgets},
                 {"audit_samples", cfg.audit_samples},
                 {"precision_bits", cfg.precision_bits},
                 {"seed", cfg.seed}};
  r["hypotheses"] = hypotheses_json(hyp);
  r["modsym"] = modsym_json(s);
  r["delta1"] = delta1_json(dc.delta1);
  r["scan"] = scan_json(dc);

  json p;
  p["status"] = selmer::to_string(pred.status);
  p["corank"] = pred.corank ? json(*pred.corank) : json(nullptr);
  json tors = json::array();
  for (int e : pred.exponents) tors.push_back({cfg.p, e, 2});
  p["torsion"] = tors;
  p["group"] = pred.group;
  p["sha"] = pred.sha;
  p["sha_condition"] = "conditional on Sha[p^infty] finite";
  json fit = json::array();
  for (const auto& [i, e] : pred.fitting) fit.push_back({i, e ? json(*e) : json("zero")});
  p["fitting"] = fit;
  p["length"] = pred.length ? json(*pred.length) : json(nullptr);
  p["flags"] = pred.flags;
  p["witness"] = wit ? json(wit->n) : json(nullptr);
  p["rank_upper_bound"] = wit ? json(selmer::rank_upper_bound(*wit)) : json(nullptr);
  r["prediction"] = p;

  r["checks"] = {{"parity", parity ? json(selmer::to_string(*parity)) : json(nullptr)},
                 {"parity_audit", dc.parity_audit_pass ? "pass" : "fail"},
                 {"tamagawa",
                  {{"status", selmer::to_string(tam.status)},
                   {"partial_infinity", tam.partial_infinity ? json(*tam.partial_infinity) : json(nullptr)},
                   {"tamagawa_valuation", tam.tamagawa_valuation}}}};
  json sl;
  sl["applicable"] = semi.applicable;
  sl["reasons"] = semi.reasons;
  sl["witness"] = semi.witness ? json(*semi.witness) : json(nullptr);
  json fac = json::array();
  for (const auto& f : semi.factors)
    fac.push_back({{"ell", f.ell}, {"e1", f.e1}, {"e2", f.e2}, {"dimension", f.dimension}});
  sl["factors"] = fac;
  sl["selmer_dimension"] = semi.selmer_dimension;
  sl["isomorphism"] = semi.isomorphism;
  sl["rank_formula"] = semi.rank_formula;
  r["semilocal"] = sl;

  // Exit status: invariant violations first, then unmet hypotheses.
  if (!dc.parity_audit_pass || (parity && *parity == selmer::Parity::Inconsistent) ||
      tam.status == selmer::TamagawaStatus::Mismatch)
    out.exit_code = kInvariant;
  else if (!hyp.all())
    out.exit_code = kHypothesis;

  // Human summary in the style of a worked example.
  const std::string ps = std::to_string(cfg.p);
  std::ostringstream os;
  os << "Curve " << (ctx.label().empty() ? ctx.model().ainvs_string() : ctx.label() + " " + ctx.model().ainvs_string())
     << "  N = " << ctx.conductor().get_str() << "  w = " << sign(w) << "\n";
  os << "  δ̃₁ = " << arith::to_string(dc.delta1.pinned ? *dc.delta1.pinned : dc.delta1.value)
     << (dc.delta1.pinned ? "" : " (p-normalized)");
  if (dc.delta1.valuation != kInfiniteValuation) os << "  v_" << ps << " = " << dc.delta1.valuation;
  os << "\n";
  for (const auto& pr : dc.partials) {
    if (pr.audit || pr.nu == 0) continue;
    os << "  ν = " << pr.nu << ": " << pr.computed << " moduli, ∂̂ = "
       << (pr.witnessed ? std::to_string(pr.min_valuation) : ">=" + std::to_string(pr.min_valuation));
    if (pr.witness) {
      for (const auto& e : dc.entries)
        if (e.n == *pr.witness) {
          os << ", witness δ̃⁽" << e.k_used << "⁾_{" << product(e.factors) << "} ≠ 0 (v = " << e.valuation << ")";
          break;
        }
    }
    os << (pr.saturated ? " [saturated]" : "") << "\n";
  }
  os << "  parity audit: " << (dc.parity_audit_pass ? "pass" : "FAIL") << "\n";
  if (pred.corank) {
    os << "  • cork_Z" << ps << " Sel(Q, E[" << ps << "^∞]) = " << *pred.corank;
    if (wit) os << "; rk E(Q) <= " << selmer::rank_upper_bound(*wit);
    os << "\n";
  } else {
    os << "  • no nonvanishing witness up to ν = " << cfg.nu_max << "\n";
  }
  os << "  • Tamagawa: Σ v_" << ps << "(c_ℓ) = " << tam.tamagawa_valuation << ", ∂̂^(∞) = "
     << (tam.partial_infinity ? std::to_string(*tam.partial_infinity) : "?") << " (" << selmer::to_string(tam.status)
     << ")\n";
  if (pred.status == selmer::PredictionStatus::Ok) {
    os << "  • Sel(Q, E[" << ps << "^∞]) ≅ " << pred.group << "\n";
    os << "  • Ш[" << ps << "^∞] ≅ " << pred.sha << " (if Ш[" << ps << "^∞] is finite)\n";
  } else {
    os << "  • structure: " << selmer::to_string(pred.status) << "\n";
  }
  for (const auto& f : pred.flags) os << "    flag: " << f << "\n";
  if (!semi.isomorphism.empty())
    os << "  • " << semi.isomorphism << "  (dim " << semi.selmer_dimension << "; " << semi.rank_formula << ")\n";
  if (!semi.applicable) {
    os << "    " << (semi.isomorphism.empty() ? "semi-local description unavailable:" : "candidate only, not certified:");
    for (const auto& reason : semi.reasons) os << " " << reason << ";";
    os << "\n";
  }
  os << "  hypotheses: ρ̄ " << curve::to_string(hyp.rho) << (hyp.rho_asserted ? " (asserted)" : "") << ", Manin "
     << curve::to_string(hyp.manin) << (hyp.manin_asserted ? " (asserted)" : "") << ", E(Q_" << ps << ")[" << ps
     << "] " << curve::to_string(hyp.local_torsion.status) << ", Tamagawa prime to " << ps << ": "
     << (hyp.tamagawa_prime_to_p ? "yes" : "no") << "\n";
  out.summary = os.str();

  if (!cfg.cache_dir.empty()) s.save_ap_cache(cfg.cache_dir);
  return out;
}

std::vector<std::uint64_t> parse_modulus(const std::string& text) {
  std::vector<std::uint64_t> out;
  std::string t;
  for (char c : text) t += (c == '*' || c == 'x' || c == ',' || c == '.') ? ' ' : c;
  std::istringstream is(t);
  std::string tok;
  while (is >> tok) {
    std::size_t pos = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(tok, &pos);
    } catch (const std::exception&) {
      throw RunError(kUsage, "bad modulus '" + text + "'");
    }
    if (pos != tok.size() || v == 0) throw RunError(kUsage, "bad modulus '" + text + "'");
    out.push_back(v);
  }
  if (out.empty()) throw RunError(kUsage, "empty modulus");
  // A single composite integer is factored.
  if (out.size() == 1 && out[0] > 1 && !arith::is_prime(out[0])) {
    const auto f = arith::factorize(out[0]);
    out.clear();
    for (auto [q, e] : f) {
      if (e > 1) throw RunError(kHypothesis, "n must be squarefree");
      out.push_back(q);
    }
  }
  if (out.size() == 1 && out[0] == 1) out.clear();
  std::sort(out.begin(), out.end());
  if (std::adjacent_find(out.begin(), out.end()) != out.end()) throw RunError(kHypothesis, "n must be squarefree");
  return out;
}

Outcome delta_command(const RunConfig& cfg, const std::string& n_spec, const Log& log) {
  cfg.validate();
  const auto ells = parse_modulus(n_spec);
  Session s = open_session(cfg, log);
  const auto& ctx = *s.ctx;
  std::vector<kolyvagin::KolyvaginPrime> ps;
  for (auto ell : ells) {
    auto q = kolyvagin::kolyvagin_prime(ctx, cfg.p, ell);
    if (!q) throw RunError(kHypothesis, std::to_string(ell) + " is not a Kolyvagin prime for p = " + std::to_string(cfg.p));
    ps.push_back(*q);
  }
  const kolyvagin::Modulus m(ps);
  Outcome out;
  json& r = out.report;
  r["schema"] = "kurihara-delta/1";
  r["curve"] = curve_json(ctx);
  r["p"] = cfg.p;
  std::ostringstream os;
  if (m.nu() == 0) {
    const auto d = kn::delta_1(*s.es);
    r["delta1"] = delta1_json(d);
    os << "δ̃₁ = " << arith::to_string(d.pinned ? *d.pinned : d.value) << (d.pinned ? "" : " (p-normalized)")
       << ", v_" << cfg.p << " = " << (d.valuation == kInfiniteValuation ? "inf" : std::to_string(d.valuation)) << "\n";
  } else {
    const int k_used = std::min(cfg.k, kolyvagin::i_valuation(m));
    kn::KuriharaNumber x;
    try {
      x = kn::delta(*s.es, m, k_used, cfg.workers);
    } catch (const modsym::ModsymError& e) {
      throw RunError(kInvariant, e.what());
    }
    const auto st = kn::functional_sign_check(s.es->root_number(), m, x);
    r["delta"] = number_json(x, false);
    r["i_valuation"] = kolyvagin::i_valuation(m);
    r["functional_sign"] = kn::to_string(st);
    os << "δ̃⁽" << k_used << "⁾_{" << product(x.factors) << "} = " << x.value << " mod " << cfg.p << "^" << k_used
       << ", valuation " << x.valuation_string() << (x.nonzero() ? " (nonzero)" : " (zero)") << ", v(I_n) = "
       << kolyvagin::i_valuation(m) << ", functional sign " << kn::to_string(st) << "\n";
    if (st == kn::SignStatus::Violation) out.exit_code = kInvariant;
  }
  out.summary = os.str();
  if (!cfg.cache_dir.empty()) s.save_ap_cache(cfg.cache_dir);
  return out;
}

Outcome sieve_command(const RunConfig& cfg, const Log& log) {
  cfg.validate();
  auto ctx = open_curve(cfg);
  log("sieving up to " + std::to_string(cfg.bound));
  const auto pool = kolyvagin::sieve(*ctx, cfg.p, cfg.k, cfg.bound, cfg.workers);
  Outcome out;
  json list = json::array();
  std::ostringstream os;
  os << pool.size() << " Kolyvagin primes with k_ℓ >= " << cfg.k << " up to " << cfg.bound << ":\n";
  for (const auto& q : pool) {
    list.push_back({{"ell", q.ell()}, {"a_ell", q.a_ell()}, {"k_ell", q.k_ell()}, {"eta", q.eta()}});
    os << "  " << q.ell() << "  a = " << q.a_ell() << "  k = " << q.k_ell() << "  η = " << q.eta() << "\n";
  }
  out.report = {{"schema", "kurihara-sieve/1"},
                {"curve", ctx->model().ainvs_string()},
                {"p", cfg.p},
                {"k", cfg.k},
                {"bound", cfg.bound},
                {"primes", list}};
  out.summary = os.str();
  if (!cfg.cache_dir.empty()) {
    std::error_code ec;
    fs::create_directories(cfg.cache_dir, ec);
    ctx->ap_cache().save(ap_cache_path(cfg.cache_dir, ctx->model().hash()));
  }
  return out;
}

Outcome modsym_command(const RunConfig& cfg, const std::string& action, const std::optional<fs::path>& path,
                       const Log& log) {
  cfg.validate();
  if (cfg.cache_dir.empty()) throw RunError(kUsage, "modsym commands need a cache directory");
  Outcome out;
  std::ostringstream os;
  if (action == "build") {
    RunConfig c = cfg;
    c.import_modsym.reset();
    Session s = open_session(c, log);
    if (s.modsym_source == "cache") {
      // Rebuild on request even when a verified copy exists.
      s.es = std::make_unique<modsym::EigenSymbol>(modsym::build_eigensymbol(*s.ctx, 25, cfg.seed, log));
      s.modsym_source = "built";
      normalize_session(s, c, 20);
    }
    os << "built eigen data for level " << s.es->level() << " (" << s.es->space().num_generators()
       << " generators), stored in " << modsym_cache_path(cfg.cache_dir, s.ctx->model().hash()).string() << "\n";
    out.report = {{"action", "build"}, {"modsym", modsym_json(s)}};
  } else if (action == "export") {
    if (!path) throw RunError(kUsage, "export needs --out");
    auto ctx = open_curve(cfg);
    const fs::path cached = modsym_cache_path(cfg.cache_dir, ctx->model().hash());
    if (!fs::exists(cached)) throw RunError(kUsage, "nothing to export: run 'modsym build' for this curve first");
    modsym::EigenSymbol es = [&] {
      try {
        return modsym::import_eigensymbol(cached, *ctx);
      } catch (const std::exception& e) {
        throw RunError(kHypothesis, std::string("cached eigen data rejected: ") + e.what());
      }
    }();
    modsym::export_eigensymbol(es, *path);
    os << "exported eigen data to " << path->string() << "\n";
    out.report = {{"action", "export"}, {"path", path->string()}};
  } else if (action == "import") {
    if (!path) throw RunError(kUsage, "import needs --file");
    auto ctx = open_curve(cfg);
    modsym::EigenSymbol es = [&] {
      try {
        return modsym::import_eigensymbol(*path, *ctx);
      } catch (const std::exception& e) {
        throw RunError(kHypothesis, std::string("modular symbol import rejected: ") + e.what());
      }
    }();
    std::error_code ec;
    fs::create_directories(cfg.cache_dir, ec);
    modsym::export_eigensymbol(es, modsym_cache_path(cfg.cache_dir, ctx->model().hash()));
    os << "verified and cached eigen data for level " << es.level() << "\n";
    out.report = {{"action", "import"}, {"level", es.level()}};
  } else {
    throw RunError(kUsage, "unknown modsym action '" + action + "'");
  }
  out.summary = os.str();
  return out;
}

}  // namespace kurihara::pipeline
