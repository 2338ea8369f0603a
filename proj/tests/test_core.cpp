#include "rhocal/core.hpp"
#include "rhocal/optimize.hpp"
#include "rhocal/special.hpp"

#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

using namespace rhocal;

TEST_CASE("dates round-trip through ISO text") {
  const Date d = parse_date("2024-02-29");
  CHECK(format_date(d) == "2024-02-29");
  CHECK_THROWS_AS(parse_date("2023-02-29"), Error);
  CHECK_THROWS_AS(parse_date("2024/01/01"), Error);
  CHECK_THROWS_AS(parse_date(""), Error);
  try {
    parse_date("garbage");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::MalformedRow);
  }
}

TEST_CASE("format_double is shortest round-trip") {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> d(0.0, 1e-2);
  for (int i = 0; i < 2000; ++i) {
    const double x = d(rng);
    CHECK(std::stod(format_double(x)) == x);
  }
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(-0.5) == "-0.5");
}

// Reference values evaluated in 30-digit arithmetic.
TEST_CASE("normal distribution values") {
  CHECK(special::normal_cdf(-3.3) == doctest::Approx(0.000483424142383777507).epsilon(1e-13));
  CHECK(special::normal_pdf(1.2) == doctest::Approx(0.194186054983212950760).epsilon(1e-14));
  CHECK(special::normal_quantile(0.05) == doctest::Approx(-1.64485362695147).epsilon(1e-13));
  CHECK(special::normal_quantile(1e-10) == doctest::Approx(-6.36134090240405620).epsilon(1e-13));
  CHECK(special::normal_quantile(0.5) == 0.0);
  CHECK(std::isinf(special::normal_quantile(0.0)));
  for (double p : {1e-6, 0.01, 0.3, 0.77, 0.999}) {
    CHECK(special::normal_cdf(special::normal_quantile(p)) == doctest::Approx(p).epsilon(1e-13));
  }
}

TEST_CASE("incomplete beta and gamma values") {
  CHECK(special::incomplete_beta(2.5, 3.0, 0.2) == doctest::Approx(0.103753554155990254).epsilon(1e-13));
  CHECK(special::incomplete_beta(2.0, 2.0, 0.0) == 0.0);
  CHECK(special::incomplete_beta(2.0, 2.0, 1.0) == 1.0);
  CHECK(special::gamma_p(2.5, 5.0) == doctest::Approx(0.924764753853487821).epsilon(1e-13));
  CHECK(special::gamma_q(10.0, 30.0) == doctest::Approx(0.00000712175086281557709).epsilon(1e-11));
  CHECK(special::gamma_p(3.0, 2.0) + special::gamma_q(3.0, 2.0) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("student t and chi-square values") {
  CHECK(special::student_t_cdf(-2.0, 5.0) == doctest::Approx(0.0509697394149291870).epsilon(1e-13));
  CHECK(special::student_t_cdf(0.7, 2.5) == doctest::Approx(0.728297528405225960).epsilon(1e-13));
  CHECK(special::student_t_quantile(0.05, 5.0) == doctest::Approx(-2.01504837333302419).epsilon(1e-12));
  CHECK(special::student_t_quantile(0.9, 8.0) == doctest::Approx(1.39681530974386487).epsilon(1e-12));
  CHECK(special::student_t_quantile(0.5, 4.0) == doctest::Approx(0.0).scale(1.0).epsilon(1e-14));
  // Cauchy density at zero.
  CHECK(special::student_t_pdf(0.0, 1.0) == doctest::Approx(0.318309886183790672).epsilon(1e-14));
  CHECK(special::chi2_sf(7.815, 6.0) == doctest::Approx(0.251972662727484437).epsilon(1e-12));
  CHECK(special::chi2_sf(0.0, 1.0) == 1.0);
  ErrorKind kind = ErrorKind::Usage;
  try {
    special::student_t_cdf(0.0, 0.0);
  } catch (const Error& e) {
    kind = e.kind();
  }
  CHECK(kind == ErrorKind::BadDistribution);
}

TEST_CASE("percentile interpolates between order statistics") {
  std::vector<double> s;
  for (int i = 1; i <= 100; ++i) s.push_back(i / 1000.0);
  CHECK(special::median(s) == doctest::Approx(0.0505).epsilon(1e-14));
  CHECK(special::percentile(s, 0.8) == doctest::Approx(0.0802).epsilon(1e-14));
  CHECK(special::percentile(s, 0.0) == 0.001);
  CHECK(special::percentile(s, 1.0) == 0.1);
  const std::vector<double> one{3.0};
  CHECK(special::percentile(one, 0.3) == 3.0);
}

TEST_CASE("nelder-mead finds a quadratic minimum") {
  const auto fn = [](const Vector& x) {
    return (x[0] - 1.0) * (x[0] - 1.0) + 10.0 * (x[1] + 2.0) * (x[1] + 2.0);
  };
  const auto r = optimize::nelder_mead(fn, Vector::Zero(2));
  CHECK(r.converged);
  CHECK(r.x[0] == doctest::Approx(1.0).epsilon(1e-4));
  CHECK(r.x[1] == doctest::Approx(-2.0).epsilon(1e-4));
}
