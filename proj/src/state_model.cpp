#include "rhocal/state_model.hpp"

#include "rhocal/garch.hpp"
#include "rhocal/market_data.hpp"
#include "rhocal/special.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace rhocal::state {

namespace {

std::vector<double> gather(std::span<const double> x, const IndexSet& idx) {
  std::vector<double> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(x[i]);
  return out;
}

void require_train(const IndexSet& train_idx) {
  if (train_idx.empty()) throw Error(ErrorKind::EmptyTrainWindow, "training index set is empty");
}

std::optional<double> proxy_at(std::span<const double> returns, std::size_t k, std::size_t lookback) {
  if (k + 1 < lookback) return std::nullopt;
  garch::FitOptions options;
  options.innovation = garch::Innovation::Normal;
  const auto fit = garch::fit(returns.subspan(k + 1 - lookback, lookback), options);
  if (!fit) return std::nullopt;
  return std::sqrt(fit->next_variance);
}

}  // namespace

std::string_view to_string(Regime g) {
  switch (g) {
    case Regime::Low: return "low";
    case Regime::Mid: return "mid";
    case Regime::High: return "high";
  }
  return "?";
}

IndexSet index_range(std::size_t first, std::size_t count) {
  IndexSet idx(count);
  std::iota(idx.begin(), idx.end(), first);
  return idx;
}

double vix_to_daily(double vix_level) {
  if (!(vix_level > 0.0)) throw Error(ErrorKind::NonpositiveInput, "VIX level must be positive");
  return vix_level / (100.0 * std::sqrt(252.0));
}

std::vector<double> garch_proxy_series(std::span<const double> returns, std::span<const double> ewma,
                                       std::size_t lookback, GarchProxyAudit* audit) {
  if (returns.empty()) throw Error(ErrorKind::EmptySample, "garch_proxy_series: no returns");
  if (ewma.size() != returns.size()) {
    throw Error(ErrorKind::LengthMismatch, "garch_proxy_series: ewma length differs");
  }
  std::vector<double> out(returns.size());
  for (std::size_t k = 0; k < returns.size(); ++k) {
    const auto vol = proxy_at(returns, k, lookback);
    if (audit) ++(vol ? audit->fits : audit->fallbacks);
    out[k] = vol ? *vol : ewma[k];
  }
  return out;
}

FeaturePanel attach_garch_proxy(const FeaturePanel& panel, const AssetSeries& series,
                                std::size_t lookback, GarchProxyAudit* audit) {
  const std::vector<double> returns = log_returns(series);
  FeaturePanel out = panel;
  for (FeatureRow& row : out.rows) {
    // returns[k] is the return into bar k + 1.
    const auto vol = row.bar_index >= 1 ? proxy_at(returns, row.bar_index - 1, lookback) : std::nullopt;
    if (audit) ++(vol ? audit->fits : audit->fallbacks);
    row.garch_vol_proxy = vol ? *vol : row.ewma_vol_20;
  }
  return out;
}

VolProxySeries composite_proxy(std::span<const double> c1, std::span<const double> c2,
                               std::span<const double> c3, const IndexSet& train_idx,
                               const IndexSet& eval_idx) {
  require_train(train_idx);
  VolProxySeries out;
  out.m1 = std::max(special::median(gather(c1, train_idx)), kVolFloor);
  out.m2 = std::max(special::median(gather(c2, train_idx)), kVolFloor);
  out.m3 = std::max(special::median(gather(c3, train_idx)), kVolFloor);
  out.v.resize(static_cast<Eigen::Index>(eval_idx.size()));
  for (std::size_t k = 0; k < eval_idx.size(); ++k) {
    const std::size_t t = eval_idx[k];
    const double v = (c1[t] / out.m1 + c2[t] / out.m2 + c3[t] / out.m3) / 3.0 * out.m1;
    out.v[static_cast<Eigen::Index>(k)] = std::max(v, kVolFloor);
  }
  return out;
}

RegimeThresholds regime_thresholds(std::span<const double> vix_daily, const IndexSet& train_idx) {
  require_train(train_idx);
  const auto train = gather(vix_daily, train_idx);
  return {special::percentile(train, 0.5), special::percentile(train, 0.8)};
}

Regime classify(double vix_daily, const RegimeThresholds& th) {
  if (vix_daily < th.median) return Regime::Low;
  if (vix_daily > th.p80) return Regime::High;
  return Regime::Mid;
}

std::vector<Regime> regime_labels(std::span<const double> vix_daily, const IndexSet& train_idx,
                                  const IndexSet& eval_idx) {
  const RegimeThresholds th = regime_thresholds(vix_daily, train_idx);
  std::vector<Regime> out;
  out.reserve(eval_idx.size());
  for (std::size_t t : eval_idx) out.push_back(classify(vix_daily[t], th));
  return out;
}

StrictStressThresholds strict_stress_thresholds(std::span<const double> vix_daily,
                                                std::span<const double> drawdown,
                                                const IndexSet& train_idx) {
  require_train(train_idx);
  return {special::percentile(gather(vix_daily, train_idx), 0.9),
          special::percentile(gather(drawdown, train_idx), 0.3)};
}

std::vector<std::uint8_t> strict_stress_flags(std::span<const double> vix_daily,
                                              std::span<const double> drawdown,
                                              const IndexSet& train_idx, const IndexSet& eval_idx) {
  const auto th = strict_stress_thresholds(vix_daily, drawdown, train_idx);
  std::vector<std::uint8_t> out;
  out.reserve(eval_idx.size());
  for (std::size_t t : eval_idx) {
    out.push_back(vix_daily[t] >= th.q90_vix && drawdown[t] <= th.q30_drawdown ? 1 : 0);
  }
  return out;
}

SelectionStress selection_stress_flags(std::span<const double> vix_daily, const IndexSet& train_idx,
                                       const IndexSet& eval_idx, const SelectionStressConfig& config) {
  require_train(train_idx);
  const auto train = gather(vix_daily, train_idx);
  SelectionStress out;
  out.flags.assign(eval_idx.size(), 0);
  double pct = config.start_percentile;
  while (true) {
    const double threshold = special::percentile(train, pct / 100.0);
    std::size_t count = 0;
    for (std::size_t k = 0; k < eval_idx.size(); ++k) {
      out.flags[k] = vix_daily[eval_idx[k]] >= threshold ? 1 : 0;
      count += out.flags[k];
    }
    out.audit = {pct, threshold, count, false};
    if (count >= config.min_count) break;
    if (pct - config.step < config.floor_percentile - 1e-9) {
      out.audit.exhausted = true;
      break;
    }
    pct -= config.step;
  }
  return out;
}

VolProxySeries apply_underreaction(const VolProxySeries& proxy, std::span<const std::uint8_t> stress,
                                   double kappa) {
  if (!(kappa > 0.0 && kappa < 1.0)) throw Error(ErrorKind::BadKappa, "kappa must lie in (0,1)");
  if (stress.size() != static_cast<std::size_t>(proxy.v.size())) {
    throw Error(ErrorKind::LengthMismatch, "stress flags not aligned with proxy");
  }
  VolProxySeries out = proxy;
  for (Eigen::Index i = 0; i < out.v.size(); ++i) {
    if (stress[static_cast<std::size_t>(i)]) out.v[i] = std::max(kappa * out.v[i], kVolFloor);
  }
  return out;
}

}  // namespace rhocal::state
