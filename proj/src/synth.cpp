#include "rhocal/market_data.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace rhocal {

namespace {

void validate(const SynthConfig& c) {
  const auto bad = [](const std::string& msg) { throw Error(ErrorKind::BadConfig, msg); };
  if (c.asset_ids.empty()) bad("synth: no assets");
  if (c.length < 2) bad("synth: length must be >= 2");
  const std::size_t k = c.regime_vols.size();
  if (k == 0) bad("synth: no regimes");
  if (c.regime_drifts.size() != k) bad("synth: regime_drifts size mismatch");
  if (c.transition.size() != k) bad("synth: transition matrix size mismatch");
  for (double v : c.regime_vols) {
    if (!(v > 0.0)) bad("synth: regime vols must be positive");
  }
  for (const auto& row : c.transition) {
    if (row.size() != k) bad("synth: transition row size mismatch");
    double sum = 0.0;
    for (double p : row) {
      if (!(p >= 0.0)) bad("synth: negative transition probability");
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9) bad("synth: transition rows must sum to 1");
  }
  if (c.student_dof != 0.0 && !(c.student_dof > 2.0)) bad("synth: student_dof must be 0 or > 2");
  if (!c.asset_vol_scale.empty()) {
    if (c.asset_vol_scale.size() != c.asset_ids.size()) bad("synth: asset_vol_scale size mismatch");
    for (double s : c.asset_vol_scale) {
      if (!(s > 0.0)) bad("synth: asset vol scales must be positive");
    }
  }
  if (c.common_factor_weight < 0.0 || c.common_factor_weight > 1.0) {
    bad("synth: common_factor_weight must be in [0,1]");
  }
  if (c.vix_noise < 0.0 || c.volume_noise < 0.0 || c.intraday_range < 0.0) {
    bad("synth: noise scales must be nonnegative");
  }
  if (!(c.volume_base > 0.0) || !(c.start_price > 0.0)) bad("synth: base levels must be positive");
}

}  // namespace

SynthPanel synth_generate(const SynthConfig& config, std::uint64_t seed) {
  validate(config);
  const auto length = static_cast<std::size_t>(config.length);
  const std::size_t n_assets = config.asset_ids.size();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);

  auto innovation = [&]() {
    if (config.student_dof == 0.0) return normal(rng);
    std::student_t_distribution<double> t(config.student_dof);
    return t(rng) * std::sqrt((config.student_dof - 2.0) / config.student_dof);
  };

  // One extra regime draw so the last date also has a forward vol.
  std::vector<int> regimes(length + 1, 0);
  for (std::size_t t = 1; t <= length; ++t) {
    const auto& row = config.transition[static_cast<std::size_t>(regimes[t - 1])];
    const double u = uniform(rng);
    double acc = 0.0;
    int next = static_cast<int>(row.size()) - 1;
    for (std::size_t j = 0; j < row.size(); ++j) {
      acc += row[j];
      if (u < acc) {
        next = static_cast<int>(j);
        break;
      }
    }
    regimes[t] = next;
  }

  SynthPanel out;
  out.regimes.assign(regimes.begin(), regimes.begin() + static_cast<std::ptrdiff_t>(length));
  out.forward_vol.resize(length);
  out.vix.resize(length);
  const double annualizer = 100.0 * std::sqrt(252.0);
  for (std::size_t t = 0; t < length; ++t) {
    out.forward_vol[t] = config.regime_vols[static_cast<std::size_t>(regimes[t + 1])];
    double level = annualizer * out.forward_vol[t] * (1.0 + config.vix_bias);
    if (config.vix_noise > 0.0) level += config.vix_noise * normal(rng);
    out.vix[t] = std::max(level, 0.01);
  }

  std::vector<Date> dates(length);
  {
    std::chrono::sys_days day{config.start};
    for (std::size_t t = 0; t < length; ++t) {
      while (std::chrono::weekday{day}.c_encoding() == 0 || std::chrono::weekday{day}.c_encoding() == 6) {
        day += std::chrono::days{1};
      }
      dates[t] = Date{day};
      day += std::chrono::days{1};
    }
  }

  out.assets.resize(n_assets);
  for (std::size_t i = 0; i < n_assets; ++i) {
    out.assets[i].asset_id = config.asset_ids[i];
    out.assets[i].bars.resize(length);
    out.assets[i].vix = out.vix;
  }
  const double w = std::sqrt(config.common_factor_weight);
  const double w_idio = std::sqrt(1.0 - config.common_factor_weight);
  const double ref_vol = config.regime_vols.front();
  std::vector<double> prev_close(n_assets, config.start_price);
  for (std::size_t t = 0; t < length; ++t) {
    const auto g = static_cast<std::size_t>(regimes[t]);
    const double common = t > 0 ? innovation() : 0.0;
    for (std::size_t i = 0; i < n_assets; ++i) {
      const double scale = config.asset_vol_scale.empty() ? 1.0 : config.asset_vol_scale[i];
      const double sigma = scale * config.regime_vols[g];
      Bar& bar = out.assets[i].bars[t];
      bar.date = dates[t];
      bar.open = prev_close[i];
      if (t == 0) {
        bar.close = config.start_price;
      } else {
        const double z = w * common + w_idio * innovation();
        bar.close = prev_close[i] * std::exp(config.regime_drifts[g] + sigma * z);
      }
      const double up = std::abs(normal(rng)) * config.intraday_range * sigma;
      const double down = std::abs(normal(rng)) * config.intraday_range * sigma;
      bar.high = std::max(bar.open, bar.close) * std::exp(up);
      bar.low = std::min(bar.open, bar.close) * std::exp(-down);
      const double log_volume = std::log(config.volume_base) +
                                config.volume_vol_elasticity * std::log(config.regime_vols[g] / ref_vol) +
                                config.volume_noise * normal(rng);
      bar.volume = std::max(1.0, std::round(std::exp(log_volume)));
      prev_close[i] = bar.close;
    }
  }
  return out;
}

}  // namespace rhocal
