#pragma once

#include "rhocal/core.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace rhocal::eval {

double exceedance(std::span<const std::uint8_t> hits);

/// Hit rate on the flagged subset. `value` is empty when no date is flagged.
struct SubsetRate {
  std::optional<double> value;
  std::size_t count = 0;
};

SubsetRate stress_exceedance(std::span<const std::uint8_t> hits, std::span<const std::uint8_t> flags);

/// Mean of max(-q, 0).
double avg_capital(std::span<const double> q);

/// Mean of (alpha - 1{y < q}) (y - q).
double tick_loss(std::span<const double> y, std::span<const double> q, double alpha);

struct TestResult {
  double statistic = 0.0;
  double p_value = 1.0;
  int dof = 1;
  bool pass = true;        // p >= 0.05
  bool degenerate = false;  // DQ: rank-deficient design
  int rank = 0;             // DQ design rank
};

/// Kupiec unconditional coverage LR with 0 ln 0 := 0, against chi2(1).
TestResult kupiec_uc(std::size_t n, std::size_t x, double alpha);

/// Christoffersen LR_uc + LR_ind against chi2(2); empty transition cells add 0.
TestResult christoffersen_cc(std::span<const std::uint8_t> hits, double alpha);

/// Engle-Manganelli DQ: (I_t - alpha) on [1, I_{t-1..t-lags}, q_t], chi2(lags + 2).
TestResult dq_test(std::span<const std::uint8_t> hits, std::span<const double> q, double alpha, int lags = 4);

struct MetricsSummary {
  std::size_t n = 0;
  double exceedance = 0.0;
  std::optional<double> strict_exceedance;
  std::size_t strict_count = 0;
  std::optional<double> stress_gap;  // strict_exceedance - alpha
  double avg_capital = 0.0;
  std::optional<double> stressed_avg_capital;
  double tick_loss = 0.0;
  TestResult uc;
  TestResult cc;
  std::optional<TestResult> dq;  // absent when the series is too short
};

MetricsSummary summarize(std::span<const double> y, std::span<const double> q, std::span<const std::uint8_t> hits,
                         std::span<const std::uint8_t> strict_flags, double alpha);

/// Conditional law of the standardized return for the distortion study.
struct Law {
  enum class Family { Gaussian, StudentT };
  Family family = Family::Gaussian;
  double dof = 0.0;

  static Law gaussian() { return {Family::Gaussian, 0.0}; }
  /// Classical t; throws BadDistribution unless dof > 0.
  static Law student_t(double dof);

  double cdf(double x) const;
  double pdf(double x) const;
  double quantile(double p) const;
  /// Density extrema on [lo, hi] for a symmetric unimodal law.
  std::pair<double, double> density_range(double lo, double hi) const;
};

struct DistortionCurve {
  std::vector<double> rho;
  std::vector<double> delta;     // analytic F(q* + a(1 - kappa^rho)) - alpha
  std::vector<double> mc_delta;  // Monte Carlo estimate (empty when draws = 0)
  std::vector<double> se;        // binomial standard error of the Monte Carlo estimate
  double kappa = 0.0;
  double a = 0.0;
  double alpha = 0.0;
};

/// Exceedance distortion when the proxy under-reacts by kappa while the
/// adjustment magnitude a stays matched across rho.
DistortionCurve distortion_curve(const Law& law, double alpha, double a, double kappa,
                                 std::span<const double> rho_grid, std::size_t draws = 0,
                                 std::uint64_t seed = 0);

}  // namespace rhocal::eval
