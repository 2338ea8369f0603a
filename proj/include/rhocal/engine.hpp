#pragma once

#include "rhocal/baselines.hpp"
#include "rhocal/market_data.hpp"
#include "rhocal/selection.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace rhocal::engine {

using baseline::Method;
using recal::RecalRule;
using state::Regime;

struct WindowLayout {
  std::size_t train = 504;
  std::size_t fit = 84;
  std::size_t eval = 168;
  std::size_t calib = 126;
  std::size_t test = 1;

  std::size_t select() const { return fit + eval; }
  /// Rows consumed before the first test row.
  std::size_t history() const { return train + select() + calib; }
  /// Rows from the first select row through the test row.
  std::size_t span() const { return select() + calib + test; }
  /// Throws BadConfig unless every block is positive and test == 1.
  void validate() const;
};

/// Test-row indices, one per origin: history(), history() + 1, ..., panel_len - 1.
std::vector<std::size_t> plan_origins(std::size_t panel_len, const WindowLayout& layout);

enum class RecalMethod { Base, Rho0, Rho1, GlobalAvg, GlobalStress, RegimeAvg, RegimeStress };
enum class Scenario { Clean, Underreact };

std::string_view to_string(RecalMethod m);
std::string_view to_string(Scenario s);
RecalMethod parse_recal_method(std::string_view name);
Scenario parse_scenario(std::string_view name);
const std::vector<RecalMethod>& all_recal_methods();

struct RunSpec {
  std::vector<Method> baselines{Method::HS};
  std::vector<RecalMethod> methods{RecalMethod::Base, RecalMethod::Rho0, RecalMethod::Rho1};
  std::vector<Scenario> scenarios{Scenario::Clean, Scenario::Underreact};
  double alpha = 0.05;
  double kappa = 0.4;
  WindowLayout layout;
  select::SelectorConfig selector;
  baseline::CaviarOptions caviar;
  std::uint64_t seed = 0;
  unsigned workers = 1;
};

struct ForecastRecord {
  std::string asset;
  Date date;
  double y = 0.0;
  double baseline_q = 0.0;
  double adjusted_q = 0.0;
  double shift = 0.0;
  std::uint8_t hit = 0;
  RecalMethod method = RecalMethod::Base;
  Method baseline = Method::HS;
  Scenario scenario = Scenario::Clean;
  double rho_low = 0.0;
  double rho_mid = 0.0;
  double rho_high = 0.0;
  double rho_eff = 0.0;
  double c = 0.0;
  double v = 0.0;
  Regime regime = Regime::Mid;
  std::uint8_t strict_stress = 0;

  // Audit fields, not part of the record CSV.
  std::size_t row = 0;
  bool baseline_fallback = false;
  std::size_t feasible_count = 0;
  double stress_percentile = 0.0;
  std::size_t stress_count = 0;

  bool operator==(const ForecastRecord&) const = default;
};

struct CellKey {
  std::string asset;
  Method baseline = Method::HS;
  RecalMethod method = RecalMethod::Base;
  Scenario scenario = Scenario::Clean;

  std::string label() const;  // asset/baseline/method/scenario
  bool operator==(const CellKey&) const = default;
};

struct Cell {
  CellKey key;
  std::vector<ForecastRecord> records;  // in date order
};

/// Rolling backtest of one asset. The panel must carry garch_vol_proxy.
/// Cells come back in (baseline, method, scenario) order of the spec.
std::vector<Cell> run_backtest(const FeaturePanel& panel, const RunSpec& spec);

/// Concatenation ordered by (date, asset); no reweighting.
std::vector<ForecastRecord> pool_records(const std::vector<std::vector<ForecastRecord>>& streams);

/// Per-origin seed for the randomized baselines.
std::uint64_t origin_seed(std::uint64_t seed, std::string_view asset, Date date);

}  // namespace rhocal::engine
