#pragma once

#include "rhocal/core.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace rhocal {
struct AssetSeries;
struct FeaturePanel;
}  // namespace rhocal

namespace rhocal::state {

enum class Regime : std::uint8_t { Low = 0, Mid = 1, High = 2 };

std::string_view to_string(Regime g);

/// Index set into a series; always sorted ascending.
using IndexSet = std::vector<std::size_t>;

/// Contiguous index set [first, first + count).
IndexSet index_range(std::size_t first, std::size_t count);

/// VIX level in index points to an approximate daily volatility.
double vix_to_daily(double vix_level);

struct GarchProxyAudit {
  std::size_t fits = 0;
  std::size_t fallbacks = 0;  // insufficient history or failed fit
};

/// One-step-ahead Gaussian GARCH(1,1) vol at each position k, fitted on the
/// trailing `lookback` returns ending at k; falls back to ewma[k].
std::vector<double> garch_proxy_series(std::span<const double> returns, std::span<const double> ewma,
                                       std::size_t lookback = 252, GarchProxyAudit* audit = nullptr);

/// Fills FeatureRow::garch_vol_proxy for every retained row of `panel`.
FeaturePanel attach_garch_proxy(const FeaturePanel& panel, const AssetSeries& series,
                                std::size_t lookback = 252, GarchProxyAudit* audit = nullptr);

/// Composite proxy on the evaluation indices. `v` is aligned with eval_idx.
struct VolProxySeries {
  Vector v;
  double m1 = 0.0;
  double m2 = 0.0;
  double m3 = 0.0;
};

VolProxySeries composite_proxy(std::span<const double> c1, std::span<const double> c2,
                               std::span<const double> c3, const IndexSet& train_idx,
                               const IndexSet& eval_idx);

struct RegimeThresholds {
  double median = 0.0;
  double p80 = 0.0;
};

RegimeThresholds regime_thresholds(std::span<const double> vix_daily, const IndexSet& train_idx);
Regime classify(double vix_daily, const RegimeThresholds& th);

std::vector<Regime> regime_labels(std::span<const double> vix_daily, const IndexSet& train_idx,
                                  const IndexSet& eval_idx);

struct StrictStressThresholds {
  double q90_vix = 0.0;
  double q30_drawdown = 0.0;
};

StrictStressThresholds strict_stress_thresholds(std::span<const double> vix_daily,
                                                std::span<const double> drawdown,
                                                const IndexSet& train_idx);

std::vector<std::uint8_t> strict_stress_flags(std::span<const double> vix_daily,
                                              std::span<const double> drawdown,
                                              const IndexSet& train_idx, const IndexSet& eval_idx);

struct SelectionStressConfig {
  double start_percentile = 70.0;
  double step = 5.0;
  double floor_percentile = 50.0;
  std::size_t min_count = 10;
};

struct RelaxationAudit {
  double percentile = 70.0;
  double threshold = 0.0;
  std::size_t count = 0;
  bool exhausted = false;
};

struct SelectionStress {
  std::vector<std::uint8_t> flags;  // aligned with eval_idx
  RelaxationAudit audit;
};

SelectionStress selection_stress_flags(std::span<const double> vix_daily, const IndexSet& train_idx,
                                       const IndexSet& eval_idx, const SelectionStressConfig& config = {});

/// Shrinks v by kappa on flagged positions (flags aligned with v), then re-floors.
VolProxySeries apply_underreaction(const VolProxySeries& proxy, std::span<const std::uint8_t> stress,
                                   double kappa);

}  // namespace rhocal::state
