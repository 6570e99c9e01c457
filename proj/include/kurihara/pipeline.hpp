#pragma once

// End-to-end runs behind the command line: configuration, caching of a_ell
// values and eigen-symbols, report assembly (JSON and text).

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "kurihara/curve.hpp"
#include "kurihara/kolyvagin.hpp"
#include "kurihara/kurihara.hpp"
#include "kurihara/modsym.hpp"
#include "kurihara/selmer.hpp"

namespace kurihara::pipeline {

enum ExitCode : int { kOk = 0, kUsage = 1, kHypothesis = 2, kInvariant = 3 };

/// Failure carrying the process exit code.
class RunError : public std::runtime_error {
 public:
  RunError(int code, const std::string& msg) : std::runtime_error(msg), code_(code) {}
  int code() const { return code_; }

 private:
  int code_;
};

struct RunConfig {
  std::array<BigInt, 5> ainvs;
  std::string label;
  std::uint64_t p = 5;
  int k = 1;
  std::uint64_t bound = 1000;
  int nu_max = 3;
  std::vector<std::size_t> budgets{50};
  std::size_t audit_samples = 5;
  unsigned precision_bits = 128;
  std::filesystem::path cache_dir;
  std::optional<std::filesystem::path> import_modsym;
  bool assert_manin = false;
  bool assert_surjective = false;
  std::uint64_t seed = 1;
  unsigned workers = 1;

  /// Throws RunError(kUsage) on p < 5, composite p, k < 1, nu_max < 0.
  void validate() const;
};

using Log = std::function<void(const std::string&)>;

/// "[a1,a2,a3,a4,a6]" or "a1,a2,a3,a4,a6" (arbitrary size integers).
std::array<BigInt, 5> parse_ainvs(const std::string& text);

/// {"label": ..., "ainvs": [...]} with integer or string entries.
void load_curve_file(const std::filesystem::path& path, RunConfig& cfg);

/// KURIHARA_CACHE when set, else the flag value, else ".kurihara-cache".
std::filesystem::path resolve_cache_dir(const std::string& flag);

/// Curve context with its a_ell cache and a normalized eigen-symbol.
struct Session {
  std::unique_ptr<curve::CurveContext> ctx;
  std::unique_ptr<modsym::EigenSymbol> es;
  modsym::NormalizeReport normalization;
  std::string modsym_source;  // "import", "cache" or "built"

  void save_ap_cache(const std::filesystem::path& cache_dir) const;
};

std::filesystem::path ap_cache_path(const std::filesystem::path& dir, std::uint64_t curve_hash);
std::filesystem::path modsym_cache_path(const std::filesystem::path& dir, std::uint64_t curve_hash);

/// Curve only (a_ell cache loaded; corrupt cache files are ignored and rebuilt).
std::unique_ptr<curve::CurveContext> open_curve(const RunConfig& cfg);

/// Curve plus eigen-symbol from the import path, the cache or a fresh build.
/// A rejected import path is RunError(kHypothesis); a rejected cache file is rebuilt.
Session open_session(const RunConfig& cfg, const Log& log);

struct Outcome {
  nlohmann::json report;
  std::string summary;
  int exit_code = kOk;
};

Outcome analyze(const RunConfig& cfg, const Log& log);

/// n as "41*61", "41,61" or a plain integer.
std::vector<std::uint64_t> parse_modulus(const std::string& text);

Outcome delta_command(const RunConfig& cfg, const std::string& n_spec, const Log& log);
Outcome sieve_command(const RunConfig& cfg, const Log& log);

/// build: compute and store in the cache; export: copy the cached data to `path`
/// (error when nothing was built); import: verify `path` and store it in the cache.
Outcome modsym_command(const RunConfig& cfg, const std::string& action, const std::optional<std::filesystem::path>& path,
                       const Log& log);

/// Stable text for reports.
std::string hex(std::uint64_t x);

}  // namespace kurihara::pipeline
