#include "rhocal/recalibration.hpp"

#include <cmath>
#include <cstdio>

namespace rhocal::recal {

namespace {

void check_rho(double rho) {
  if (!(rho >= 0.0 && rho <= 1.0)) throw Error(ErrorKind::BadConfig, "rho must lie in [0,1]");
}

}  // namespace

RecalRule RecalRule::scalar(double rho) {
  check_rho(rho);
  return RecalRule(false, rho, rho, rho);
}

RecalRule RecalRule::tuple(double rho_low, double rho_mid, double rho_high) {
  check_rho(rho_low);
  check_rho(rho_mid);
  check_rho(rho_high);
  if (!(rho_low >= rho_mid && rho_mid >= rho_high)) {
    throw Error(ErrorKind::BadConfig, "regime tuple must satisfy low >= mid >= high");
  }
  return RecalRule(true, rho_low, rho_mid, rho_high);
}

double RecalRule::exponent(std::optional<Regime> g) const {
  if (!tuple_) return low_;
  if (!g) throw Error(ErrorKind::MissingRegime, "regime tuple rule applied without a regime label");
  switch (*g) {
    case Regime::Low: return low_;
    case Regime::Mid: return mid_;
    case Regime::High: return high_;
  }
  return low_;
}

std::string RecalRule::label() const {
  char buf[64];
  if (tuple_) {
    std::snprintf(buf, sizeof buf, "(%g,%g,%g)", low_, mid_, high_);
  } else {
    std::snprintf(buf, sizeof buf, "%g", low_);
  }
  return buf;
}

std::size_t lower_quantile_rank(std::size_t n, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorKind::BadConfig, "alpha must lie in (0,1)");
  const auto k = static_cast<std::size_t>(std::floor(alpha * static_cast<double>(n + 1)));
  return std::clamp<std::size_t>(k, 1, n);
}

double lower_quantile(std::span<const double> sample, double alpha) {
  return lower_quantile(Eigen::Map<const Vector>(sample.data(), static_cast<Eigen::Index>(sample.size())),
                        alpha);
}

double apply(const CalibratedRule& rule, double q, double v, std::optional<Regime> g) {
  return q + rule.c * proxy_power(v, rule.rule.exponent(g));
}

double adjustment(double v, double c, double rho) {
  if (!(v > 0.0)) throw Error(ErrorKind::NonpositiveProxy, "adjustment requires v > 0");
  return c * proxy_power(v, rho);
}

double contrast_ratio(double v_high, double v_low, double rho) {
  if (!(v_low > 0.0 && v_high > v_low)) {
    throw Error(ErrorKind::BadOrdering, "contrast_ratio requires v_high > v_low > 0");
  }
  if (rho == 0.0) return 1.0;
  if (rho == 1.0) return v_high / v_low;
  return std::exp(rho * std::log(v_high / v_low));
}

}  // namespace rhocal::recal
