#include "rhocal/garch.hpp"

#include "rhocal/optimize.hpp"
#include "rhocal/special.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace rhocal::garch {

namespace {

constexpr double kMaxPersistence = 0.999;
constexpr double kMinNu = 2.05;

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }
double logit(double p) { return std::log(p / (1.0 - p)); }

struct Layout {
  bool asymmetric;
  bool student;
  Eigen::Index size() const { return 4 + (asymmetric ? 1 : 0) + (student ? 1 : 0); }
};

Params decode(const Vector& th, const Layout& layout) {
  Params p;
  p.mu = th[0];
  p.omega = std::exp(std::clamp(th[1], -50.0, 50.0));
  const double s = kMaxPersistence * logistic(th[2]);
  Eigen::Index next = 3;
  if (layout.asymmetric) {
    const double a = std::clamp(th[3], -40.0, 40.0);
    const double g = std::clamp(th[4], -40.0, 40.0);
    const double m = std::max({a, g, 0.0});
    const double ea = std::exp(a - m), eg = std::exp(g - m), eb = std::exp(-m);
    const double total = ea + eg + eb;
    p.alpha = s * ea / total;
    p.gamma = 2.0 * s * eg / total;
    p.beta = s * eb / total;
    next = 5;
  } else {
    p.alpha = s * logistic(th[3]);
    p.beta = s - p.alpha;
    next = 4;
  }
  if (layout.student) p.nu = kMinNu + std::exp(std::clamp(th[next], -20.0, 14.0));
  return p;
}

Vector encode(const Params& p, const Layout& layout) {
  Vector th(layout.size());
  th[0] = p.mu;
  th[1] = std::log(p.omega);
  const double s = p.alpha + 0.5 * p.gamma + p.beta;
  th[2] = logit(s / kMaxPersistence);
  Eigen::Index next = 3;
  if (layout.asymmetric) {
    th[3] = std::log(p.alpha / p.beta);
    th[4] = std::log(0.5 * p.gamma / p.beta);
    next = 5;
  } else {
    th[3] = logit(p.alpha / s);
    next = 4;
  }
  if (layout.student) th[next] = std::log(p.nu - kMinNu);
  return th;
}

struct Filtered {
  double loglik;
  double last_variance;
  double last_residual;
};

Filtered filter(const Params& p, std::span<const double> y, Innovation innovation) {
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  const std::size_t n = y.size();
  double backcast = 0.0;
  for (double v : y) backcast += (v - p.mu) * (v - p.mu);
  backcast /= static_cast<double>(n);

  double log_const = -0.5 * std::log(2.0 * std::numbers::pi);
  const bool student = innovation == Innovation::StudentT;
  if (student) {
    if (!(p.nu > 2.0)) return {kNegInf, 0.0, 0.0};
    log_const = std::lgamma(0.5 * (p.nu + 1.0)) - std::lgamma(0.5 * p.nu) -
                0.5 * std::log(std::numbers::pi * (p.nu - 2.0));
  }
  double var = backcast;
  double ll = 0.0;
  double e = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    if (t > 0) {
      const double lev = e < 0.0 ? p.gamma : 0.0;
      var = p.omega + (p.alpha + lev) * e * e + p.beta * var;
    }
    if (!(var > 0.0) || !std::isfinite(var)) return {kNegInf, 0.0, 0.0};
    e = y[t] - p.mu;
    if (student) {
      ll += log_const - 0.5 * std::log(var) -
            0.5 * (p.nu + 1.0) * std::log1p(e * e / (var * (p.nu - 2.0)));
    } else {
      ll += log_const - 0.5 * std::log(var) - 0.5 * e * e / var;
    }
  }
  return {ll, var, e};
}

}  // namespace

double log_likelihood(const Params& p, std::span<const double> returns, Innovation innovation) {
  if (returns.empty()) return -std::numeric_limits<double>::infinity();
  return filter(p, returns, innovation).loglik;
}

std::optional<Fit> fit(std::span<const double> returns, const FitOptions& options) {
  const std::size_t n = returns.size();
  if (n < 10) return std::nullopt;
  double mean = 0.0;
  for (double r : returns) mean += r;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double r : returns) var += (r - mean) * (r - mean);
  var /= static_cast<double>(n - 1);
  const double sd = std::sqrt(var);
  if (!(sd > 1e-12) || !std::isfinite(sd)) return std::nullopt;

  // Work on unit-variance data for conditioning; map back afterwards.
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = returns[i] / sd;
  const double y_mean = mean / sd;

  const Layout layout{options.asymmetric, options.innovation == Innovation::StudentT};
  struct Start {
    double alpha, gamma, beta, nu;
  };
  static constexpr Start kStarts[] = {
      {0.05, 0.05, 0.90, 8.0}, {0.10, 0.05, 0.80, 5.0}, {0.03, 0.02, 0.95, 12.0}};

  auto objective = [&](const Vector& th) {
    const Params p = decode(th, layout);
    return -filter(p, y, options.innovation).loglik;
  };

  optimize::SimplexOptions nm;
  nm.max_iterations = options.max_iterations;
  nm.f_tolerance = 1e-9;
  nm.x_tolerance = 1e-6;
  nm.initial_step = 0.3;

  std::optional<optimize::SimplexResult> best;
  int converged = 0;
  const int restarts = std::clamp(options.restarts, 1, 3);
  for (int k = 0; k < restarts; ++k) {
    const Start& s = kStarts[k];
    Params p0;
    p0.mu = y_mean;
    p0.alpha = s.alpha;
    p0.gamma = options.asymmetric ? s.gamma : 0.0;
    p0.beta = s.beta;
    p0.omega = std::max(1e-4, 1.0 - s.alpha - 0.5 * p0.gamma - s.beta);
    p0.nu = s.nu;
    auto res = optimize::nelder_mead(objective, encode(p0, layout), nm);
    if (!res.converged || !std::isfinite(res.value)) continue;
    ++converged;
    if (!best || res.value < best->value) best = std::move(res);
  }
  if (!best) return std::nullopt;

  Params p = decode(best->x, layout);
  const Filtered f = filter(p, y, options.innovation);
  if (!std::isfinite(f.loglik)) return std::nullopt;

  Fit out;
  out.params = p;
  out.params.mu = p.mu * sd;
  out.params.omega = p.omega * var;
  out.last_variance = f.last_variance * var;
  out.last_residual = f.last_residual * sd;
  const double lev = out.last_residual < 0.0 ? p.gamma : 0.0;
  out.next_variance = out.params.omega + (p.alpha + lev) * out.last_residual * out.last_residual +
                      p.beta * out.last_variance;
  // Log-likelihood in return units differs from the standardized one by the Jacobian.
  out.loglik = f.loglik - static_cast<double>(n) * std::log(sd);
  out.restarts_converged = converged;
  if (!std::isfinite(out.next_variance) || !(out.next_variance > 0.0)) return std::nullopt;
  return out;
}

std::vector<double> variance_path(const Params& p, double next_variance, std::size_t horizon) {
  std::vector<double> path(horizon);
  const double persistence = p.alpha + 0.5 * p.gamma + p.beta;
  double v = next_variance;
  for (std::size_t h = 0; h < horizon; ++h) {
    if (h > 0) v = p.omega + persistence * v;
    path[h] = v;
  }
  return path;
}

std::vector<double> quantile_path(const Params& p, double next_variance, std::size_t horizon,
                                  double alpha) {
  const double z = special::student_t_quantile(alpha, p.nu) * std::sqrt((p.nu - 2.0) / p.nu);
  std::vector<double> path = variance_path(p, next_variance, horizon);
  for (double& v : path) v = p.mu + std::sqrt(v) * z;
  return path;
}

std::vector<double> simulate(const Params& p, std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::student_t_distribution<double> student(p.nu > 2.0 ? p.nu : 5.0);
  const double scale = p.nu > 2.0 ? std::sqrt((p.nu - 2.0) / p.nu) : 1.0;
  const double persistence = p.alpha + 0.5 * p.gamma + p.beta;
  double var = p.omega / (1.0 - persistence);
  double e = 0.0;
  std::vector<double> out(n);
  for (std::size_t t = 0; t < n; ++t) {
    if (t > 0) var = p.omega + (p.alpha + (e < 0.0 ? p.gamma : 0.0)) * e * e + p.beta * var;
    const double z = p.nu > 2.0 ? student(rng) * scale : normal(rng);
    e = std::sqrt(var) * z;
    out[t] = p.mu + e;
  }
  return out;
}

}  // namespace rhocal::garch
