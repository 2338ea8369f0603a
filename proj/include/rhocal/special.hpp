#pragma once

#include "rhocal/core.hpp"

#include <span>
#include <vector>

namespace rhocal::special {

double normal_cdf(double x);
double normal_pdf(double x);
double normal_quantile(double p);

/// Regularized incomplete beta I_x(a, b).
double incomplete_beta(double a, double b, double x);

/// Regularized lower/upper incomplete gamma P(a, x), Q(a, x).
double gamma_p(double a, double x);
double gamma_q(double a, double x);

/// Classical Student-t with `dof` degrees of freedom (not variance-standardized).
double student_t_cdf(double t, double dof);
double student_t_pdf(double t, double dof);
double student_t_quantile(double p, double dof);

/// Upper tail of the chi-square distribution with k degrees of freedom.
double chi2_sf(double x, double k);

/// Linear interpolation between order statistics at position (n-1)p. p in [0,1].
double percentile(std::span<const double> sample, double p);
double median(std::span<const double> sample);

}  // namespace rhocal::special
