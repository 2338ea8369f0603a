#pragma once

#include "rhocal/app/config.hpp"
#include "rhocal/theory.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace rhocal::app {

inline constexpr int kExitOk = 0;
inline constexpr int kExitVerifyFailed = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitData = 3;

/// Usage and config errors map to 2, everything else to 3.
int exit_code(ErrorKind kind);

/// Loads every asset of the configured source, VIX merged. Remote sources
/// fetch everything before touching the cache, so a failed fetch leaves no
/// partial cache behind.
std::vector<AssetSeries> load_panels(const RunConfig& config);

/// Canonical panel CSVs plus checksums under `out/panels`. Unchanged inputs
/// rewrite nothing.
int cmd_ingest(const RunConfig& config, const std::filesystem::path& out, std::ostream& log);

struct BacktestOptions {
  std::filesystem::path out;
  unsigned workers = 1;
  std::string cells = "*";  // glob over asset/baseline/method/scenario
};

int cmd_backtest(const RunConfig& config, const BacktestOptions& options, std::ostream& log);

/// Plot-data CSVs and a markdown summary under `run_dir/report`, built only
/// from manifest-listed files whose checksums still match.
int cmd_report(const std::filesystem::path& run_dir, std::ostream& log);

/// Runs the theory suite; writes theory.json into `out` when given and
/// registers it in that directory's manifest. Exit 0 iff every check passes.
int cmd_verify_theory(std::uint64_t seed, const std::optional<std::filesystem::path>& out, std::ostream& log,
                      const theory::SuiteOptions& options = {});

/// Full command-line entry point.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace rhocal::app
