#pragma once

#include "rhocal/core.hpp"

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace rhocal::baseline {

enum class Method { HS, FHS, QR, GPQ, GARCH_T, GJR_GARCH_T, AS_CAVIAR };

std::string_view to_string(Method m);
/// Accepts the names produced by to_string; throws BadConfig otherwise.
Method parse_method(std::string_view name);
const std::vector<Method>& all_methods();

struct Diagnostics {
  bool converged = true;
  bool fallback = false;  // HS replaced a failed parametric fit
  double loglik = std::numeric_limits<double>::quiet_NaN();
  int iterations = 0;
  std::vector<std::size_t> dropped_columns;  // QR only
};

struct BaselineForecast {
  Method method = Method::HS;
  Vector q;
  Diagnostics diagnostics;
};

BaselineForecast hs_forecast(std::span<const double> train, std::size_t horizon, double alpha);

/// Demeaned, vol-standardized historical quantile rescaled by the span vol.
/// FHS feeds EWMA vols, GPQ feeds the GARCH-style proxy.
BaselineForecast filtered_forecast(Method method, std::span<const double> train,
                                   std::span<const double> train_vol, std::span<const double> span_vol,
                                   double alpha);
BaselineForecast fhs_forecast(std::span<const double> train, std::span<const double> train_vol,
                              std::span<const double> span_vol, double alpha);
BaselineForecast gpq_forecast(std::span<const double> train, std::span<const double> train_proxy,
                              std::span<const double> span_proxy, double alpha);

inline constexpr double kQrPenalty = 1e-4;

/// Rows are observations. Falls back to HS when the LP does not converge
/// or the design is degenerate.
BaselineForecast qr_forecast(const Matrix& train_features, std::span<const double> train_targets,
                             const Matrix& span_features, double alpha, double l1_penalty = kQrPenalty);

/// Constant-mean GARCH(1,1) (or GJR when `asymmetric`) with unit-variance
/// t innovations; HS fallback when the train block is shorter than 250 or
/// the fit fails.
BaselineForecast garch_forecast(std::span<const double> train, std::size_t horizon, double alpha,
                                bool asymmetric);
BaselineForecast garch_t_forecast(std::span<const double> train, std::size_t horizon, double alpha);
BaselineForecast gjr_garch_t_forecast(std::span<const double> train, std::size_t horizon, double alpha);

struct CaviarParams {
  double intercept = 0.0;
  double persistence = 0.0;
  double up_slope = 0.0;
  double down_slope = 0.0;
};

struct CaviarOptions {
  int starts = 20;
  int max_iterations = 2000;
  bool fix_slopes = false;  // optimize the intercept only
  double max_persistence = 0.999;
  double max_abs = 1.0;
};

/// q_t = b1 + b2 q_{t-1} + b3 max(r_{t-1}, 0) + b4 min(r_{t-1}, 0), seeded at q_init.
std::vector<double> caviar_path(const CaviarParams& p, std::span<const double> returns, double q_init);
double caviar_pinball(const CaviarParams& p, std::span<const double> returns, double q_init, double alpha);

struct CaviarFit {
  CaviarParams params;
  double q_init = 0.0;
  double loss = 0.0;
  int finite_starts = 0;
};

CaviarFit fit_caviar(std::span<const double> train, double alpha, std::uint64_t seed,
                     const CaviarOptions& options = {});

/// Out-of-sample path over the span: each step feeds the previous realized
/// return (the last train value for the first step).
BaselineForecast as_caviar_forecast(std::span<const double> train, std::span<const double> span_realized,
                                    double alpha, std::uint64_t seed, const CaviarOptions& options = {});

}  // namespace rhocal::baseline
