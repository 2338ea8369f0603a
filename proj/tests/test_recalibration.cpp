#include "rhocal/recalibration.hpp"

#include "support.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

using namespace rhocal;
using namespace rhocal::recal;

namespace {

ErrorKind kind_of(const auto& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an rhocal::Error");
  return ErrorKind::Usage;
}

std::vector<double> sorted(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v;
}

const std::vector<double> kGrid{0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};

}  // namespace

TEST_CASE("lower quantile order statistic") {
  CHECK(lower_quantile_rank(19, 0.05) == 1);
  CHECK(lower_quantile_rank(20, 0.05) == 1);
  CHECK(lower_quantile_rank(126, 0.05) == 6);
  CHECK(lower_quantile_rank(1, 0.3) == 1);
  CHECK(lower_quantile_rank(39, 0.05) == 2);

  const auto s19 = rhocal::testing::gaussian(19, 1.0, 1);
  CHECK(lower_quantile(s19, 0.05) == *std::min_element(s19.begin(), s19.end()));

  const auto s126 = rhocal::testing::gaussian(126, 1.0, 2);
  CHECK(lower_quantile(s126, 0.05) == sorted(s126)[5]);

  const std::vector<double> one{-1.0};
  for (double a : {0.01, 0.05, 0.25, 0.49}) CHECK(lower_quantile(one, a) == -1.0);

  CHECK(kind_of([] { lower_quantile(std::vector<double>{}, 0.05); }) == ErrorKind::EmptySample);
}

TEST_CASE("lower quantile is positively homogeneous and matches the Eigen overload") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto s = rhocal::testing::gaussian(30 + seed, 1.0, seed);
    const double lam = 0.1 + static_cast<double>(seed);
    std::vector<double> scaled(s);
    for (auto& x : scaled) x *= lam;
    CHECK(lower_quantile(scaled, 0.05) == lam * lower_quantile(s, 0.05));
    const Vector ev = Eigen::Map<const Vector>(s.data(), static_cast<Eigen::Index>(s.size()));
    CHECK(lower_quantile(ev, 0.05) == lower_quantile(s, 0.05));
  }
}

TEST_CASE("rules") {
  const auto t = RecalRule::tuple(1.0, 0.5, 0.0);
  CHECK(t.is_tuple());
  CHECK(t.exponent(Regime::Low) == 1.0);
  CHECK(t.exponent(Regime::Mid) == 0.5);
  CHECK(t.exponent(Regime::High) == 0.0);
  const auto s = RecalRule::scalar(0.3);
  CHECK(s.exponent(std::nullopt) == 0.3);
  CHECK(s.exponent(Regime::High) == 0.3);
  CHECK(kind_of([] { RecalRule::tuple(0.0, 0.5, 1.0); }) == ErrorKind::BadConfig);
  CHECK(kind_of([] { RecalRule::scalar(1.5); }) == ErrorKind::BadConfig);
  CHECK(kind_of([&] { t.exponent(std::nullopt); }) == ErrorKind::MissingRegime);
}

TEST_CASE("signed residuals") {
  Vector y(1), q(1), v(1);
  y << -0.03;
  q << -0.02;
  v << 0.25;
  CHECK(signed_residuals(y, q, v, RecalRule::scalar(0.5))[0] == doctest::Approx(-0.02).epsilon(1e-15));

  Vector y3(3), q3(3), v3(3);
  y3 << 0.01, -0.04, 0.0;
  q3 << -0.02, -0.02, -0.03;
  v3 << 0.5, 7.0, 1e-6;
  const Vector u0 = signed_residuals(y3, q3, v3, RecalRule::scalar(0.0));
  for (int i = 0; i < 3; ++i) CHECK(u0[i] == y3[i] - q3[i]);

  const std::vector<Regime> g{Regime::High, Regime::High, Regime::High};
  const Vector ut = signed_residuals(y3, q3, v3, RecalRule::tuple(1.0, 0.5, 0.0), g);
  for (int i = 0; i < 3; ++i) CHECK(ut[i] == y3[i] - q3[i]);

  CHECK(kind_of([&] { signed_residuals(y3, q3, v3, RecalRule::tuple(1.0, 0.5, 0.0)); }) ==
        ErrorKind::MissingRegime);
  CHECK(kind_of([&] { signed_residuals(y, q3, v3, RecalRule::scalar(0.0)); }) == ErrorKind::LengthMismatch);
}

TEST_CASE("calibration") {
  const auto ys = rhocal::testing::gaussian(126, 0.01, 3);
  const Vector y = Eigen::Map<const Vector>(ys.data(), 126);

  SUBCASE("perfect baseline gives c = 0") {
    const auto cal = calibrate(RecalRule::scalar(0.7), y, y, Vector::Constant(126, 0.01), 0.05);
    CHECK(cal.c == 0.0);
    CHECK(cal.calib_size == 126);
  }
  SUBCASE("rho = 0 picks the sixth smallest residual") {
    const Vector q = Vector::Constant(126, -0.01);
    const auto cal = calibrate(RecalRule::scalar(0.0), y, q, Vector::Constant(126, 0.3), 0.05);
    std::vector<double> u(ys);
    for (auto& x : u) x += 0.01;
    CHECK(cal.c == sorted(u)[5]);
  }
  SUBCASE("scaling v by eta scales c by eta^-rho") {
    const Vector q = Vector::Constant(126, -0.015);
    const auto vs = rhocal::testing::gaussian(126, 0.002, 4);
    Vector v(126);
    for (int i = 0; i < 126; ++i) v[i] = 0.01 + std::abs(vs[static_cast<std::size_t>(i)]);
    for (double rho : kGrid) {
      const auto a = calibrate(RecalRule::scalar(rho), y, q, v, 0.05);
      const auto b = calibrate(RecalRule::scalar(rho), y, q, (3.0 * v).eval(), 0.05);
      CHECK(b.c == doctest::Approx(a.c * std::pow(3.0, -rho)).epsilon(1e-12));
    }
  }
  CHECK(kind_of([] { calibrate(RecalRule::scalar(0.0), Vector(), Vector(), Vector(), 0.05); }) ==
        ErrorKind::EmptySample);
}

TEST_CASE("apply") {
  CHECK(apply({RecalRule::scalar(0.0), -0.005, 10}, -0.02, 0.3) == doctest::Approx(-0.025).epsilon(1e-15));
  CHECK(apply({RecalRule::scalar(0.0), -0.005, 10}, -0.04, 9.0) == doctest::Approx(-0.045).epsilon(1e-15));
  CHECK(apply({RecalRule::scalar(1.0), -0.02, 10}, -0.03, 0.5) == doctest::Approx(-0.04).epsilon(1e-15));
  CHECK(apply({RecalRule::scalar(0.6), 0.0, 10}, -0.03, 0.5) == -0.03);
  CHECK(apply({RecalRule::tuple(1, 0.5, 0), -0.01, 10}, -0.02, 4.0, Regime::Mid) ==
        doctest::Approx(-0.04).epsilon(1e-15));
  CHECK(kind_of([] { apply({RecalRule::tuple(1, 0.5, 0), -0.01, 10}, -0.02, 4.0); }) == ErrorKind::MissingRegime);
  // Negative c never moves the forecast upward.
  for (double v : {1e-8, 0.01, 1.0, 50.0}) {
    for (double rho : kGrid) CHECK(apply({RecalRule::scalar(rho), -0.003, 1}, -0.02, v) <= -0.02);
  }
}

TEST_CASE("adjustment algebra") {
  CHECK(adjustment(3.0 * 0.7, -0.2, 1.0) == doctest::Approx(3.0 * adjustment(0.7, -0.2, 1.0)).epsilon(1e-15));
  for (double v : {0.001, 0.5, 4.0}) CHECK(adjustment(v, -0.3, 0.0) == -0.3);
  CHECK(adjustment(4.0, -1.0, 0.5) == doctest::Approx(-2.0).epsilon(1e-15));
  CHECK(kind_of([] { adjustment(0.0, -1.0, 0.5); }) == ErrorKind::NonpositiveProxy);

  // Elasticity: log|A(eta v)| - log|A(v)| = rho log eta.
  for (double rho : kGrid) {
    for (double eta : {0.1, 2.0, 10.0}) {
      const double lhs = std::log(std::abs(adjustment(eta * 0.02, -0.7, rho))) - std::log(std::abs(adjustment(0.02, -0.7, rho)));
      CHECK(lhs == doctest::Approx(rho * std::log(eta)).epsilon(1e-12).scale(1.0));
    }
  }
}

TEST_CASE("contrast ratio") {
  CHECK(contrast_ratio(0.03, 0.01, 0.0) == 1.0);
  CHECK(contrast_ratio(0.03, 0.01, 1.0) == doctest::Approx(3.0).epsilon(1e-15));
  CHECK(contrast_ratio(2.0, 1.0, 0.5) == doctest::Approx(1.41421356237310).epsilon(1e-14));
  CHECK(kind_of([] { contrast_ratio(0.01, 0.02, 0.5); }) == ErrorKind::BadOrdering);
  CHECK(kind_of([] { contrast_ratio(0.01, 0.01, 0.5); }) == ErrorKind::BadOrdering);
  CHECK(kind_of([] { contrast_ratio(0.01, 0.0, 0.5); }) == ErrorKind::BadOrdering);

  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.001, 0.1);
  for (int i = 0; i < 100; ++i) {
    const double lo = u(rng);
    const double hi = lo * (1.0 + u(rng) * 10.0);
    double prev = 0.0;
    for (double rho : kGrid) {
      const double r = contrast_ratio(hi, lo, rho);
      CHECK(r > prev);
      prev = r;
    }
  }
}

TEST_CASE("uniform rescaling leaves the recalibrated forecast unchanged") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.005, 0.04);
  for (int inst = 0; inst < 50; ++inst) {
    const auto ys = rhocal::testing::gaussian(126, 0.012, static_cast<std::uint64_t>(inst) + 100);
    Vector y = Eigen::Map<const Vector>(ys.data(), 126);
    Vector q(126), v(126);
    for (int i = 0; i < 126; ++i) {
      q[i] = -u(rng);
      v[i] = u(rng);
    }
    const double q_test = -u(rng);
    const double v_test = u(rng);
    for (double rho : kGrid) {
      const auto rule = RecalRule::scalar(rho);
      const double base = apply(calibrate(rule, y, q, v, 0.05), q_test, v_test);
      for (double eta : {0.1, 10.0}) {
        const double scaled = apply(calibrate(rule, y, q, (eta * v).eval(), 0.05), q_test, eta * v_test);
        CHECK(std::abs(scaled - base) <= 1e-10);
      }
    }
  }
}

TEST_CASE("rho = 0 is bit-identical under any proxy distortion") {
  const auto ys = rhocal::testing::gaussian(126, 0.012, 21);
  const Vector y = Eigen::Map<const Vector>(ys.data(), 126);
  const Vector q = Vector::Constant(126, -0.02);
  const Vector v = Vector::LinSpaced(126, 0.005, 0.03);
  const Vector shrunk = 0.4 * v;
  const auto rule = RecalRule::scalar(0.0);
  CHECK(apply(calibrate(rule, y, q, v, 0.05), -0.021, 0.02) ==
        apply(calibrate(rule, y, q, shrunk, 0.05), -0.021, 0.008));
}
