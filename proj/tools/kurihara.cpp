// Command line front end: analyze, delta, sieve, modsym build|export|import.

#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "kurihara/pipeline.hpp"

namespace pl = kurihara::pipeline;

namespace {

struct Flags {
  std::string curve;
  std::string curve_file;
  std::string label;
  std::uint64_t p = 5;
  int k = 1;
  std::uint64_t bound = 1000;
  int nu_max = 3;
  std::string budget = "50";
  std::size_t audit = 5;
  unsigned precision_bits = 128;
  std::string cache_dir;
  std::string import_modsym;
  bool assert_manin = false;
  bool assert_surjective = false;
  std::uint64_t seed = 1;
  unsigned workers = 1;
  std::string json_out;
  bool quiet = false;
};

void add_common(CLI::App* app, Flags& f, bool scan_flags) {
  app->add_option("--curve", f.curve, "a-invariants, e.g. \"[0,1,1,-2,0]\"");
  app->add_option("--curve-file", f.curve_file, "JSON file with \"ainvs\" (and optional \"label\")");
  app->add_option("--label", f.label, "label shown in reports");
  app->add_option("--p", f.p, "prime p >= 5")->capture_default_str();
  app->add_option("--k", f.k, "work modulo p^k")->capture_default_str();
  app->add_option("--bound", f.bound, "sieve bound for Kolyvagin primes")->capture_default_str();
  app->add_option("--precision-bits", f.precision_bits, "bits for the L-value check")->capture_default_str();
  app->add_option("--cache-dir", f.cache_dir, "cache directory (KURIHARA_CACHE overrides)");
  app->add_option("--import-modsym", f.import_modsym, "verified eigen data to use instead of building");
  app->add_option("--seed", f.seed, "seed for sampling")->capture_default_str();
  app->add_option("--workers", f.workers, "threads")->capture_default_str();
  app->add_option("--json-out", f.json_out, "write the JSON report here ('-' for stdout)");
  app->add_flag("--quiet", f.quiet, "no progress on stderr");
  if (scan_flags) {
    app->add_option("--nu-max", f.nu_max, "largest number of prime factors")->capture_default_str();
    app->add_option("--budget", f.budget, "moduli per nu; comma list gives per-nu budgets")->capture_default_str();
    app->add_option("--audit-samples", f.audit, "wrong-parity samples per nu")->capture_default_str();
    app->add_flag("--assert-manin", f.assert_manin, "assume p does not divide the Manin constant");
    app->add_flag("--assert-surjective", f.assert_surjective, "assume the mod-p representation is surjective");
  }
}

pl::RunConfig config(const Flags& f) {
  pl::RunConfig c;
  if (!f.curve.empty() == !f.curve_file.empty()) throw pl::RunError(pl::kUsage, "give exactly one of --curve, --curve-file");
  if (!f.curve.empty())
    c.ainvs = pl::parse_ainvs(f.curve);
  else
    pl::load_curve_file(f.curve_file, c);
  if (!f.label.empty()) c.label = f.label;
  c.p = f.p;
  c.k = f.k;
  c.bound = f.bound;
  c.nu_max = f.nu_max;
  c.budgets.clear();
  std::stringstream ss(f.budget);
  std::string part;
  while (std::getline(ss, part, ',')) {
    try {
      std::size_t pos = 0;
      const long v = std::stol(part, &pos);
      if (pos != part.size() || v < 0) throw std::invalid_argument(part);
      c.budgets.push_back(static_cast<std::size_t>(v));
    } catch (const std::exception&) {
      throw pl::RunError(pl::kUsage, "bad --budget '" + f.budget + "'");
    }
  }
  c.audit_samples = f.audit;
  c.precision_bits = f.precision_bits;
  c.cache_dir = pl::resolve_cache_dir(f.cache_dir);
  if (!f.import_modsym.empty()) c.import_modsym = f.import_modsym;
  c.assert_manin = f.assert_manin;
  c.assert_surjective = f.assert_surjective;
  c.seed = f.seed;
  c.workers = std::max(1u, f.workers);
  c.validate();
  return c;
}

int emit(const pl::Outcome& out, const Flags& f) {
  std::cout << out.summary;
  if (!f.json_out.empty()) {
    const std::string text = out.report.dump(2) + "\n";
    if (f.json_out == "-") {
      std::cout << text;
    } else {
      std::ofstream os(f.json_out, std::ios::binary);
      if (!os) throw pl::RunError(pl::kUsage, "cannot write " + f.json_out);
      os << text;
    }
  }
  return out.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Kurihara numbers and Selmer structure of elliptic curves over Q"};
  app.require_subcommand(1);
  Flags f;
  std::string n_spec, action, io_path;

  auto* analyze = app.add_subcommand("analyze", "scan Kurihara numbers and predict Sel and Sha");
  add_common(analyze, f, true);
  auto* delta = app.add_subcommand("delta", "one Kurihara number");
  add_common(delta, f, false);
  delta->add_option("--n", n_spec, "modulus, e.g. 41*61 (1 for delta_1)")->required();
  auto* sieve = app.add_subcommand("sieve", "list Kolyvagin primes");
  add_common(sieve, f, false);
  auto* modsym = app.add_subcommand("modsym", "eigen data: build, export, import");
  add_common(modsym, f, false);
  modsym->add_option("action", action, "build | export | import")->required()->check(
      CLI::IsMember({"build", "export", "import"}));
  modsym->add_option("--out,--file", io_path, "export target / import source");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : pl::kUsage;
  }

  const pl::Log log = [&f](const std::string& msg) {
    if (!f.quiet) std::cerr << "[kurihara] " << msg << std::endl;
  };
  try {
    const pl::RunConfig cfg = config(f);
    if (*analyze) return emit(pl::analyze(cfg, log), f);
    if (*delta) return emit(pl::delta_command(cfg, n_spec, log), f);
    if (*sieve) return emit(pl::sieve_command(cfg, log), f);
    std::optional<std::filesystem::path> path;
    if (!io_path.empty()) path = io_path;
    return emit(pl::modsym_command(cfg, action, path, log), f);
  } catch (const pl::RunError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return pl::kInvariant;
  }
}
