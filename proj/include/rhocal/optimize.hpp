#pragma once

#include "rhocal/core.hpp"

#include <functional>

namespace rhocal::optimize {

struct SimplexOptions {
  int max_iterations = 2000;
  double f_tolerance = 1e-10;  // spread of simplex values
  double x_tolerance = 1e-8;   // simplex diameter
  double initial_step = 0.25;
};

struct SimplexResult {
  Vector x;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Derivative-free Nelder-Mead minimization. Non-finite objective values are
/// treated as +inf so the simplex contracts away from them.
SimplexResult nelder_mead(const std::function<double(const Vector&)>& objective,
                          const Vector& start, const SimplexOptions& options = {});

}  // namespace rhocal::optimize
