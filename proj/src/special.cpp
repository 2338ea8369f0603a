#include "rhocal/special.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

namespace rhocal::special {

namespace bm = boost::math;

double normal_cdf(double x) { return bm::cdf(bm::normal(), x); }

double normal_pdf(double x) { return bm::pdf(bm::normal(), x); }

double normal_quantile(double p) {
  if (p == 0.0) return -std::numeric_limits<double>::infinity();
  if (p == 1.0) return std::numeric_limits<double>::infinity();
  if (!(p > 0.0 && p < 1.0)) throw Error(ErrorKind::NonpositiveInput, "normal_quantile requires p in [0,1]");
  return bm::quantile(bm::normal(), p);
}

double incomplete_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  return bm::ibeta(a, b, x);
}

double gamma_p(double a, double x) { return x <= 0.0 ? 0.0 : bm::gamma_p(a, x); }

double gamma_q(double a, double x) { return x <= 0.0 ? 1.0 : bm::gamma_q(a, x); }

namespace {

bm::students_t t_law(double dof, const char* what) {
  if (!(dof > 0.0)) throw Error(ErrorKind::BadDistribution, std::string(what) + " requires dof > 0");
  return bm::students_t(dof);
}

}  // namespace

double student_t_cdf(double t, double dof) {
  const auto law = t_law(dof, "student_t_cdf");
  if (std::isinf(t)) return t > 0.0 ? 1.0 : 0.0;
  return bm::cdf(law, t);
}

double student_t_pdf(double t, double dof) {
  const auto law = t_law(dof, "student_t_pdf");
  if (std::isinf(t)) return 0.0;
  return bm::pdf(law, t);
}

double student_t_quantile(double p, double dof) {
  if (!(p > 0.0 && p < 1.0)) {
    throw Error(ErrorKind::BadDistribution, "student_t_quantile requires p in (0,1)");
  }
  return bm::quantile(t_law(dof, "student_t_quantile"), p);
}

double chi2_sf(double x, double k) { return x <= 0.0 ? 1.0 : bm::cdf(bm::complement(bm::chi_squared(k), x)); }

double percentile(std::span<const double> sample, double p) {
  if (sample.empty()) throw Error(ErrorKind::EmptySample, "percentile of empty sample");
  std::vector<double> v(sample.begin(), sample.end());
  const double h = (static_cast<double>(v.size()) - 1.0) * std::clamp(p, 0.0, 1.0);
  const auto k = static_cast<std::size_t>(std::floor(h));
  const double frac = h - static_cast<double>(k);
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(k), v.end());
  const double lo = v[k];
  if (frac == 0.0 || k + 1 >= v.size()) return lo;
  const double hi = *std::min_element(v.begin() + static_cast<std::ptrdiff_t>(k) + 1, v.end());
  return lo + frac * (hi - lo);
}

double median(std::span<const double> sample) { return percentile(sample, 0.5); }

}  // namespace rhocal::special
