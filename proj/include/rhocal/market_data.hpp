#pragma once

#include "rhocal/core.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace rhocal {

struct Bar {
  Date date;
  double open = 0.0;
  double high = 0.0;
  double low = 0.0;
  double close = 0.0;
  double volume = 0.0;

  bool operator==(const Bar&) const = default;
};

/// Cleaned, date-sorted daily bars. `vix` is empty until merge_vix attaches a
/// level to every bar.
struct AssetSeries {
  std::string asset_id;
  std::vector<Bar> bars;
  std::vector<double> vix;

  bool has_vix() const { return !bars.empty() && vix.size() == bars.size(); }
  bool operator==(const AssetSeries&) const = default;
};

struct VixPoint {
  Date date;
  double level = 0.0;
};

inline constexpr std::size_t kNumPredictors = 15;

/// One retained asset-date: predictors known at the close of `date` and the
/// next-day log return as target.
struct FeatureRow {
  Date date;
  std::size_t bar_index = 0;
  double y = 0.0;
  double r_lag0 = 0.0;
  double r_lag1 = 0.0;
  double r_lag2 = 0.0;
  double r_lag3 = 0.0;
  double r_lag5 = 0.0;
  double roll_vol_20 = 0.0;
  double ewma_vol_20 = 0.0;
  double parkinson = 0.0;
  double garman_klass = 0.0;
  double vix_daily = 0.0;
  double vix_pct_change = 0.0;
  double drawdown_60 = 0.0;
  double log_volume = 0.0;
  double volume_z_20 = 0.0;
  double garch_vol_proxy = 0.0;

  /// Full predictor vector in a fixed order (see predictor_names()).
  std::array<double, kNumPredictors> predictors() const;
};

const std::array<std::string_view, kNumPredictors>& predictor_names();

struct FeaturePanel {
  std::string asset_id;
  std::vector<FeatureRow> rows;

  std::size_t size() const { return rows.size(); }
  /// Copies one field across all rows into a dense vector.
  Vector column(double FeatureRow::*field) const;
  /// Leading `n` rows; used to replay the engine on a truncated history.
  FeaturePanel head(std::size_t n) const;
};

// -- ingestion ---------------------------------------------------------------

/// Parses `date,open,high,low,close,volume[,vix]`, sorts by (date, volume),
/// keeps the final record per date and widens high/low to cover open/close.
AssetSeries parse_ohlcv_csv(std::string_view text, std::string asset_id);
AssetSeries ingest_csv(const std::filesystem::path& path, std::string asset_id);

/// Canonical text form. A `vix` column is written when the series is merged.
std::string to_csv(const AssetSeries& series);

std::vector<VixPoint> parse_vix_csv(std::string_view text);
std::vector<VixPoint> read_vix_csv(const std::filesystem::path& path);

/// Inner join on trading date. Throws NoOverlap on an empty intersection.
AssetSeries merge_vix(const AssetSeries& series, const std::vector<VixPoint>& vix);
AssetSeries merge_vix(const AssetSeries& series, const std::filesystem::path& vix_csv);

/// r_t = ln(P_t / P_{t-1}); length bars-1.
std::vector<double> log_returns(const AssetSeries& series);

/// Bars consumed before the first feature row.
inline constexpr std::size_t kWarmupBars = 60;

/// Every FeatureRow field except garch_vol_proxy, which state::attach_garch_proxy fills.
FeaturePanel build_features(const AssetSeries& series);

// -- synthetic panels ---------------------------------------------------------

struct SynthConfig {
  std::vector<std::string> asset_ids{"SYN1"};
  int length = 1000;
  Date start{std::chrono::year{2015}, std::chrono::month{1}, std::chrono::day{2}};
  // Markov volatility regimes (daily vol, daily drift) and row-stochastic transitions.
  std::vector<double> regime_vols{0.01};
  std::vector<double> regime_drifts{0.0};
  std::vector<std::vector<double>> transition{{1.0}};
  /// Unit-variance Student-t innovations; 0 means Gaussian.
  double student_dof = 0.0;
  /// Per-asset multiplier on the regime vol; empty means 1 for every asset.
  std::vector<double> asset_vol_scale;
  /// Weight of the common shock in each asset's innovation (0 = independent).
  double common_factor_weight = 0.0;
  double vix_bias = 0.0;
  double vix_noise = 0.0;  // additive, index points
  double volume_base = 1e6;
  double volume_noise = 0.3;
  double volume_vol_elasticity = 1.0;
  double intraday_range = 0.5;
  double start_price = 100.0;
};

struct SynthPanel {
  std::vector<AssetSeries> assets;  // VIX already merged
  std::vector<double> vix;
  std::vector<int> regimes;
  std::vector<double> forward_vol;  // vol of the next day's return, per date
};

/// Deterministic in (config, seed). Throws BadConfig on invalid parameters.
SynthPanel synth_generate(const SynthConfig& config, std::uint64_t seed);

}  // namespace rhocal
