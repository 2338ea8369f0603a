#include "rhocal/baselines.hpp"

#include "rhocal/garch.hpp"
#include "rhocal/optimize.hpp"
#include "rhocal/quantile_regression.hpp"
#include "rhocal/recalibration.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <random>

namespace rhocal::baseline {

namespace {

constexpr std::array<std::pair<Method, std::string_view>, 7> kNames{{
    {Method::HS, "HS"},
    {Method::FHS, "FHS"},
    {Method::QR, "QR"},
    {Method::GPQ, "GPQ"},
    {Method::GARCH_T, "GARCH_T"},
    {Method::GJR_GARCH_T, "GJR_GARCH_T"},
    {Method::AS_CAVIAR, "AS_CAVIAR"},
}};

constexpr std::size_t kMinParametricTrain = 250;

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 0.5)) throw Error(ErrorKind::BadConfig, "baseline alpha must lie in (0, 0.5)");
}

void check_train(std::span<const double> train) {
  if (train.empty()) throw Error(ErrorKind::EmptyTrain, "empty training block");
}

BaselineForecast fallback(Method method, std::span<const double> train, std::size_t horizon, double alpha) {
  auto out = hs_forecast(train, horizon, alpha);
  out.method = method;
  out.diagnostics.converged = false;
  out.diagnostics.fallback = true;
  return out;
}

double mean_of(std::span<const double> x) {
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

CaviarParams clamp(const CaviarParams& p, const CaviarOptions& o) {
  return {std::clamp(p.intercept, -o.max_abs, o.max_abs), std::clamp(p.persistence, 0.0, o.max_persistence),
          std::clamp(p.up_slope, -o.max_abs, o.max_abs), std::clamp(p.down_slope, -o.max_abs, o.max_abs)};
}

CaviarParams unpack(const Vector& x, bool fix_slopes) {
  if (fix_slopes) return {x[0], 0.0, 0.0, 0.0};
  return {x[0], x[1], x[2], x[3]};
}

Vector pack(const CaviarParams& p, bool fix_slopes) {
  if (fix_slopes) return Vector::Constant(1, p.intercept);
  Vector x(4);
  x << p.intercept, p.persistence, p.up_slope, p.down_slope;
  return x;
}

}  // namespace

std::string_view to_string(Method m) {
  for (const auto& [k, name] : kNames) {
    if (k == m) return name;
  }
  return "?";
}

Method parse_method(std::string_view name) {
  for (const auto& [k, n] : kNames) {
    if (n == name) return k;
  }
  throw Error(ErrorKind::BadConfig, "unknown baseline: " + std::string(name));
}

const std::vector<Method>& all_methods() {
  static const std::vector<Method> methods = [] {
    std::vector<Method> out;
    for (const auto& entry : kNames) out.push_back(entry.first);
    return out;
  }();
  return methods;
}

BaselineForecast hs_forecast(std::span<const double> train, std::size_t horizon, double alpha) {
  check_train(train);
  check_alpha(alpha);
  BaselineForecast out;
  out.method = Method::HS;
  out.q = Vector::Constant(static_cast<Eigen::Index>(horizon), recal::lower_quantile(train, alpha));
  return out;
}

BaselineForecast filtered_forecast(Method method, std::span<const double> train,
                                   std::span<const double> train_vol, std::span<const double> span_vol,
                                   double alpha) {
  check_train(train);
  check_alpha(alpha);
  if (train_vol.size() != train.size()) {
    throw Error(ErrorKind::LengthMismatch, "training vol not aligned with training returns");
  }
  const double mu = mean_of(train);
  std::vector<double> z(train.size());
  for (std::size_t i = 0; i < train.size(); ++i) z[i] = (train[i] - mu) / std::max(train_vol[i], kVolFloor);
  const double z_star = recal::lower_quantile(std::span<const double>(z), alpha);
  BaselineForecast out;
  out.method = method;
  out.q.resize(static_cast<Eigen::Index>(span_vol.size()));
  for (std::size_t t = 0; t < span_vol.size(); ++t) {
    out.q[static_cast<Eigen::Index>(t)] = mu + z_star * std::max(span_vol[t], kVolFloor);
  }
  return out;
}

BaselineForecast fhs_forecast(std::span<const double> train, std::span<const double> train_vol,
                              std::span<const double> span_vol, double alpha) {
  return filtered_forecast(Method::FHS, train, train_vol, span_vol, alpha);
}

BaselineForecast gpq_forecast(std::span<const double> train, std::span<const double> train_proxy,
                              std::span<const double> span_proxy, double alpha) {
  return filtered_forecast(Method::GPQ, train, train_proxy, span_proxy, alpha);
}

BaselineForecast qr_forecast(const Matrix& train_features, std::span<const double> train_targets,
                             const Matrix& span_features, double alpha, double l1_penalty) {
  check_train(train_targets);
  check_alpha(alpha);
  const auto horizon = static_cast<std::size_t>(span_features.rows());
  qr::Model model;
  try {
    const Eigen::Map<const Vector> y(train_targets.data(), static_cast<Eigen::Index>(train_targets.size()));
    model = qr::fit_penalized(train_features, y, alpha, l1_penalty);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::DegenerateDesign) throw;
    return fallback(Method::QR, train_targets, horizon, alpha);
  }
  if (!model.solution.converged) {
    auto out = fallback(Method::QR, train_targets, horizon, alpha);
    out.diagnostics.iterations = model.solution.iterations;
    return out;
  }
  BaselineForecast out;
  out.method = Method::QR;
  out.q = qr::predict(model, span_features);
  out.diagnostics.iterations = model.solution.iterations;
  out.diagnostics.dropped_columns = model.dropped;
  return out;
}

BaselineForecast garch_forecast(std::span<const double> train, std::size_t horizon, double alpha,
                                bool asymmetric) {
  check_train(train);
  check_alpha(alpha);
  const Method method = asymmetric ? Method::GJR_GARCH_T : Method::GARCH_T;
  if (train.size() < kMinParametricTrain) return fallback(method, train, horizon, alpha);
  garch::FitOptions options;
  options.innovation = garch::Innovation::StudentT;
  options.asymmetric = asymmetric;
  const auto fit = garch::fit(train, options);
  if (!fit) return fallback(method, train, horizon, alpha);
  const auto path = garch::quantile_path(fit->params, fit->next_variance, horizon, alpha);
  BaselineForecast out;
  out.method = method;
  out.q = Eigen::Map<const Vector>(path.data(), static_cast<Eigen::Index>(path.size()));
  if (!out.q.allFinite()) return fallback(method, train, horizon, alpha);
  out.diagnostics.loglik = fit->loglik;
  return out;
}

BaselineForecast garch_t_forecast(std::span<const double> train, std::size_t horizon, double alpha) {
  return garch_forecast(train, horizon, alpha, false);
}

BaselineForecast gjr_garch_t_forecast(std::span<const double> train, std::size_t horizon, double alpha) {
  return garch_forecast(train, horizon, alpha, true);
}

std::vector<double> caviar_path(const CaviarParams& p, std::span<const double> returns, double q_init) {
  std::vector<double> q(returns.size());
  if (returns.empty()) return q;
  q[0] = q_init;
  for (std::size_t t = 1; t < returns.size(); ++t) {
    const double r = returns[t - 1];
    q[t] = p.intercept + p.persistence * q[t - 1] + p.up_slope * std::max(r, 0.0) +
           p.down_slope * std::min(r, 0.0);
  }
  return q;
}

double caviar_pinball(const CaviarParams& p, std::span<const double> returns, double q_init, double alpha) {
  double loss = 0.0;
  double q = q_init;
  for (std::size_t t = 0; t < returns.size(); ++t) {
    if (t > 0) {
      const double r = returns[t - 1];
      q = p.intercept + p.persistence * q + p.up_slope * std::max(r, 0.0) + p.down_slope * std::min(r, 0.0);
    }
    loss += qr::pinball(returns[t] - q, alpha);
  }
  return loss;
}

CaviarFit fit_caviar(std::span<const double> train, double alpha, std::uint64_t seed, const CaviarOptions& options) {
  check_train(train);
  check_alpha(alpha);
  CaviarFit best;
  best.q_init = recal::lower_quantile(train, alpha);
  best.params = {best.q_init, 0.0, 0.0, 0.0};
  best.loss = caviar_pinball(best.params, train, best.q_init, alpha);

  auto objective = [&](const Vector& x) {
    const auto p = clamp(unpack(x, options.fix_slopes), options);
    return caviar_pinball(p, train, best.q_init, alpha);
  };

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  optimize::SimplexOptions simplex;
  simplex.max_iterations = options.max_iterations;
  simplex.initial_step = 0.1;
  const double scale = std::max(std::abs(best.q_init), 1e-4);
  for (int s = 0; s < options.starts; ++s) {
    CaviarParams start{best.q_init, 0.0, 0.0, 0.0};
    if (s > 0 && !options.fix_slopes) {
      start.persistence = options.max_persistence * unit(rng);
      start.intercept = best.q_init * (1.0 - start.persistence) + scale * (unit(rng) - 0.5);
      start.up_slope = unit(rng) - 0.5;
      start.down_slope = unit(rng) - 0.5;
    } else if (s > 0) {
      start.intercept = best.q_init + scale * (unit(rng) - 0.5);
    }
    const auto result = optimize::nelder_mead(objective, pack(clamp(start, options), options.fix_slopes), simplex);
    if (!std::isfinite(result.value)) continue;
    ++best.finite_starts;
    if (result.value < best.loss) {
      best.loss = result.value;
      best.params = clamp(unpack(result.x, options.fix_slopes), options);
    }
  }
  return best;
}

BaselineForecast as_caviar_forecast(std::span<const double> train, std::span<const double> span_realized,
                                    double alpha, std::uint64_t seed, const CaviarOptions& options) {
  const auto fit = fit_caviar(train, alpha, seed, options);
  const auto in_sample = caviar_path(fit.params, train, fit.q_init);
  const auto& p = fit.params;
  BaselineForecast out;
  out.method = Method::AS_CAVIAR;
  out.q.resize(static_cast<Eigen::Index>(span_realized.size()));
  double q_prev = in_sample.back();
  double r_prev = train.back();
  for (std::size_t t = 0; t < span_realized.size(); ++t) {
    const double q = p.intercept + p.persistence * q_prev + p.up_slope * std::max(r_prev, 0.0) +
                     p.down_slope * std::min(r_prev, 0.0);
    out.q[static_cast<Eigen::Index>(t)] = q;
    q_prev = q;
    r_prev = span_realized[t];
  }
  out.diagnostics.converged = fit.finite_starts > 0;
  out.diagnostics.loglik = -fit.loss;
  if (!out.q.allFinite()) return fallback(Method::AS_CAVIAR, train, span_realized.size(), alpha);
  return out;
}

}  // namespace rhocal::baseline
