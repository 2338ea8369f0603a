#pragma once

#include "rhocal/evaluation.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace rhocal::theory {

/// Lower-quantile functional used by the invariance batteries. Swapping in a
/// non-homogeneous variant must make the suite fail.
using QuantileFn = std::function<double(std::span<const double>, double)>;

QuantileFn default_quantile();

struct Check {
  std::string name;
  bool passed = true;
  std::size_t instances = 0;
  std::size_t failures = 0;
  double worst = 0.0;  // largest observed violation
  double seconds = 0.0;
  std::string detail;
};

struct Report {
  std::uint64_t seed = 0;
  std::vector<Check> checks;
  std::vector<eval::DistortionCurve> curves;
  std::vector<std::string> curve_labels;

  bool passed() const;
};

struct SuiteOptions {
  std::size_t invariance_instances = 100;
  std::size_t contrast_instances = 100;
  std::size_t ordering_instances = 1000;
  std::size_t selector_instances = 500;
  std::size_t mc_draws = 200000;
  double alpha = 0.05;
  QuantileFn quantile;  // defaults to the production order statistic
};

/// Scale invariance and elasticity of the recalibrated forecast.
Check check_scale_invariance(std::uint64_t seed, const SuiteOptions& options);
/// Contrast ratio endpoints and strict monotonicity.
Check check_contrast(std::uint64_t seed, const SuiteOptions& options);
/// Distortion curves: zero at rho = 0, nondecreasing, density sandwich, Monte Carlo agreement.
Check check_distortion(std::uint64_t seed, const SuiteOptions& options, Report* report = nullptr);
/// Forecast-level distortion sign under a uniform under-reaction.
Check check_distortion_sign(std::uint64_t seed, const SuiteOptions& options);
/// Heterogeneous multipliers: ordering of distorted vs clean forecasts.
Check check_heterogeneous_ordering(std::uint64_t seed, const SuiteOptions& options);
/// Idealized screened selector: monotone in the tolerance, prefix feasible sets.
Check check_screened_selector(std::uint64_t seed, const SuiteOptions& options);

/// Idealized selector on a grid: among {j : distortion[j] <= tol}, the
/// smallest capital, ties to the larger rho. Returns the chosen index, or 0
/// when nothing is feasible. `feasible` receives the feasibility mask.
std::size_t idealized_screened_select(std::span<const double> distortion, std::span<const double> capital,
                                      double tol, std::vector<bool>* feasible = nullptr);

Report run_theory_suite(std::uint64_t seed, SuiteOptions options = {});

}  // namespace rhocal::theory
