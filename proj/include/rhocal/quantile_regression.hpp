#pragma once

#include "rhocal/core.hpp"

#include <vector>

namespace rhocal::qr {

struct LpOptions {
  double gap_tolerance = 1e-8;
  double feasibility_tolerance = 1e-9;
  int max_iterations = 200;
};

struct LpSolution {
  Vector beta;
  double objective = 0.0;     // sum of pinball losses at beta
  double duality_gap = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// min_beta sum_i rho_tau(y_i - x_i beta) for the given design (include an
/// intercept column yourself). Mehrotra predictor-corrector on the bounded
/// dual: max y'a s.t. X'a = (1 - tau) X'1, 0 <= a <= 1.
LpSolution solve_quantile_lp(const Matrix& X, const Vector& y, double tau, const LpOptions& options = {});

/// Linear quantile regression on training-standardized features with an
/// unpenalized intercept and an L1 penalty on the standardized slopes.
struct Model {
  Vector mean;
  Vector scale;
  std::vector<std::size_t> kept;     // feature columns used
  std::vector<std::size_t> dropped;  // constant after standardization
  Vector slopes;                     // aligned with `kept`, standardized units
  double intercept = 0.0;
  LpSolution solution;
};

/// Throws DegenerateDesign when rows < 2 x features.
Model fit_penalized(const Matrix& features, const Vector& y, double tau, double l1_penalty,
                    const LpOptions& options = {});

Vector predict(const Model& model, const Matrix& features);

/// Pinball loss rho_tau(u) = u (tau - 1{u < 0}).
inline double pinball(double u, double tau) { return u * (tau - (u < 0.0 ? 1.0 : 0.0)); }

}  // namespace rhocal::qr
