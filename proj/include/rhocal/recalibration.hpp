#pragma once

#include "rhocal/core.hpp"
#include "rhocal/state_model.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace rhocal::recal {

using state::Regime;

/// Proxy-reliance rule: one exponent for every state, or a monotone
/// (low >= mid >= high) tuple selected by the regime label.
class RecalRule {
 public:
  static RecalRule scalar(double rho);
  static RecalRule tuple(double rho_low, double rho_mid, double rho_high);

  bool is_tuple() const { return tuple_; }
  double rho_low() const { return low_; }
  double rho_mid() const { return mid_; }
  double rho_high() const { return high_; }
  /// Scalar rho; for tuples, the low-regime component.
  double rho() const { return low_; }

  double exponent(std::optional<Regime> g) const;

  std::string label() const;
  bool operator==(const RecalRule&) const = default;

 private:
  RecalRule(bool tuple, double low, double mid, double high)
      : tuple_(tuple), low_(low), mid_(mid), high_(high) {}

  bool tuple_ = false;
  double low_ = 0.0;
  double mid_ = 0.0;
  double high_ = 0.0;
};

struct CalibratedRule {
  RecalRule rule;
  double c = 0.0;
  std::size_t calib_size = 0;
};

/// Order statistic used as the lower empirical alpha-quantile: k = max(1, floor(alpha (n+1))).
std::size_t lower_quantile_rank(std::size_t n, double alpha);

/// k-th smallest element of the sample (see lower_quantile_rank).
template <typename Derived>
double lower_quantile(const Eigen::DenseBase<Derived>& sample, double alpha) {
  const auto n = static_cast<std::size_t>(sample.size());
  if (n == 0) throw Error(ErrorKind::EmptySample, "lower_quantile of empty sample");
  const std::size_t k = lower_quantile_rank(n, alpha);
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = sample.derived().coeff(static_cast<Eigen::Index>(i));
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(k - 1), v.end());
  return v[k - 1];
}

double lower_quantile(std::span<const double> sample, double alpha);

/// v^rho as exp(rho ln v) on a floored v; exactly 1 at rho = 0.
inline double proxy_power(double v, double rho) {
  if (rho == 0.0) return 1.0;
  return std::exp(rho * std::log(std::max(v, kVolFloor)));
}

/// u_s = (Y_s - q_s) / v_s^{rho_eff(s)}. `regimes` may be empty for scalar rules.
template <typename DY, typename DQ, typename DV>
Vector signed_residuals(const Eigen::MatrixBase<DY>& y, const Eigen::MatrixBase<DQ>& q,
                        const Eigen::MatrixBase<DV>& v, const RecalRule& rule,
                        std::span<const Regime> regimes = {}) {
  const Eigen::Index n = y.size();
  if (q.size() != n || v.size() != n) {
    throw Error(ErrorKind::LengthMismatch, "signed_residuals: block lengths differ");
  }
  if (rule.is_tuple() && regimes.size() != static_cast<std::size_t>(n)) {
    throw Error(ErrorKind::MissingRegime, "regime tuple rule needs a label for every date");
  }
  Vector u(n);
  for (Eigen::Index s = 0; s < n; ++s) {
    const std::optional<Regime> g =
        rule.is_tuple() ? std::optional<Regime>(regimes[static_cast<std::size_t>(s)]) : std::nullopt;
    u[s] = (y[s] - q[s]) / proxy_power(v[s], rule.exponent(g));
  }
  return u;
}

/// c = lower_quantile(signed_residuals(block, rule), alpha).
template <typename DY, typename DQ, typename DV>
CalibratedRule calibrate(const RecalRule& rule, const Eigen::MatrixBase<DY>& y,
                         const Eigen::MatrixBase<DQ>& q, const Eigen::MatrixBase<DV>& v, double alpha,
                         std::span<const Regime> regimes = {}) {
  const Vector u = signed_residuals(y, q, v, rule, regimes);
  return {rule, lower_quantile(u, alpha), static_cast<std::size_t>(u.size())};
}

/// q_t + c v_t^{rho_eff(t)}.
double apply(const CalibratedRule& rule, double q, double v, std::optional<Regime> g = std::nullopt);

/// Signed adjustment c v^rho. Throws NonpositiveProxy for v <= 0.
double adjustment(double v, double c, double rho);

/// (v_high / v_low)^rho. Throws BadOrdering unless v_high > v_low > 0.
double contrast_ratio(double v_high, double v_low, double rho);

}  // namespace rhocal::recal
