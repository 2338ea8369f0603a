#pragma once

#include "rhocal/core.hpp"

#include <optional>
#include <random>
#include <span>
#include <vector>

namespace rhocal::garch {

/// Constant-mean GARCH(1,1) / GJR-GARCH(1,1) parameters in return units.
/// `nu` is ignored by the Gaussian model; `gamma` is zero for symmetric fits.
struct Params {
  double mu = 0.0;
  double omega = 0.0;
  double alpha = 0.0;
  double gamma = 0.0;
  double beta = 0.0;
  double nu = 0.0;
};

enum class Innovation { Normal, StudentT };

struct Fit {
  Params params;
  double loglik = 0.0;
  double last_variance = 0.0;  // sigma^2 of the final in-sample observation
  double last_residual = 0.0;
  double next_variance = 0.0;  // one-step-ahead sigma^2
  int restarts_converged = 0;
};

struct FitOptions {
  Innovation innovation = Innovation::Normal;
  bool asymmetric = false;
  int restarts = 3;
  int max_iterations = 2000;
};

/// Maximum likelihood by Nelder-Mead over transformed parameters enforcing
/// omega > 0, alpha, gamma, beta >= 0 and alpha + gamma/2 + beta < 0.999.
/// Returns nullopt when every restart ends non-finite or at the iteration cap.
std::optional<Fit> fit(std::span<const double> returns, const FitOptions& options);

/// Log-likelihood with the variance recursion seeded at the mean squared residual.
double log_likelihood(const Params& p, std::span<const double> returns, Innovation innovation);

/// sigma^2 path over `horizon` steps starting at the one-step variance, using
/// E[1{eps<0}] = 1/2 beyond the first step.
std::vector<double> variance_path(const Params& p, double next_variance, std::size_t horizon);

/// mu + sigma_h * t^{-1}_nu(alpha) * sqrt((nu-2)/nu) along the variance path.
std::vector<double> quantile_path(const Params& p, double next_variance, std::size_t horizon,
                                  double alpha);

/// Simulates n returns from the model (unit-variance t innovations when nu > 0).
std::vector<double> simulate(const Params& p, std::size_t n, std::mt19937_64& rng);

}  // namespace rhocal::garch
