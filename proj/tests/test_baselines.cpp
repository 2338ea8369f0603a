#include "rhocal/baselines.hpp"
#include "rhocal/garch.hpp"
#include "rhocal/quantile_regression.hpp"
#include "rhocal/recalibration.hpp"

#include "support.hpp"

#include <boost/math/distributions/normal.hpp>
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

using namespace rhocal;
using namespace rhocal::baseline;

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

std::vector<double> simulate(const garch::Params& p, std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return garch::simulate(p, n, rng);
}

double pinball_sum(std::span<const double> y, double q, double alpha) {
  double s = 0.0;
  for (double v : y) s += qr::pinball(v - q, alpha);
  return s;
}

}  // namespace

TEST_CASE("method names round-trip") {
  for (Method m : all_methods()) CHECK(parse_method(to_string(m)) == m);
  CHECK(all_methods().size() == 7);
  CHECK(kind_of([] { parse_method("nope"); }) == ErrorKind::BadConfig);
}

TEST_CASE("historical simulation") {
  const auto t20 = rhocal::testing::gaussian(20, 0.01, 1);
  const auto f = hs_forecast(t20, 5, 0.05);
  REQUIRE(f.q.size() == 5);
  for (int i = 0; i < 5; ++i) CHECK(f.q[i] == *std::min_element(t20.begin(), t20.end()));

  const std::vector<double> flat(30, -0.01);
  CHECK(hs_forecast(flat, 1, 0.05).q[0] == -0.01);

  std::vector<double> t126{-0.10};
  for (int i = 0; i < 125; ++i) t126.push_back(-0.05 + 0.1 * i / 124.0);
  CHECK(hs_forecast(t126, 1, 0.05).q[0] == sorted(t126)[5]);

  CHECK(kind_of([] { hs_forecast({}, 1, 0.05); }) == ErrorKind::EmptyTrain);
  CHECK(kind_of([&] { hs_forecast(t20, 1, 0.7); }) == ErrorKind::BadConfig);
}

TEST_CASE("filtered historical simulation") {
  const auto r = rhocal::testing::gaussian(300, 0.01, 2);
  SUBCASE("constant vol reduces to HS on demeaned returns") {
    const std::vector<double> vol(300, 0.01);
    const std::vector<double> span(3, 0.01);
    const auto f = fhs_forecast(r, vol, span, 0.05);
    double mu = 0.0;
    for (double x : r) mu += x;
    mu /= 300.0;
    std::vector<double> demeaned(r);
    for (auto& x : demeaned) x -= mu;
    const double hs = recal::lower_quantile(std::span<const double>(demeaned), 0.05);
    for (int i = 0; i < 3; ++i) CHECK(f.q[i] == doctest::Approx(mu + hs).epsilon(1e-12));
  }
  SUBCASE("arithmetic with a known z*") {
    // 20 standardized values whose minimum is -2; mean 0 by symmetry.
    std::vector<double> train;
    for (int i = 0; i < 10; ++i) {
      const double z = i == 0 ? 2.0 : 0.1 * i;
      train.push_back(z * 0.01);
      train.push_back(-z * 0.01);
    }
    const std::vector<double> vol(20, 0.01);
    const std::vector<double> span{0.01, 0.02};
    const auto f = fhs_forecast(train, vol, span, 0.05);
    CHECK(f.q[0] == doctest::Approx(-0.02).epsilon(1e-12));
    CHECK(f.q[1] == doctest::Approx(-0.04).epsilon(1e-12));

    const std::vector<double> proxy{0.02, 0.01};
    std::vector<double> scaled_train(train);
    for (auto& x : scaled_train) x *= 0.9;  // z* = -1.8 under unit proxies
    const std::vector<double> unit(20, 0.01);
    const auto g = gpq_forecast(scaled_train, unit, proxy, 0.05);
    CHECK(g.q[0] == doctest::Approx(-0.036).epsilon(1e-12));
    CHECK(g.q[1] == doctest::Approx(-0.018).epsilon(1e-12));
  }
  SUBCASE("GPQ equals FHS on identical vol inputs") {
    const std::vector<double> vol(300, 0.012);
    const std::vector<double> span{0.012, 0.011, 0.013};
    CHECK(gpq_forecast(r, vol, span, 0.05).q == fhs_forecast(r, vol, span, 0.05).q);
  }
  CHECK(kind_of([&] { fhs_forecast(r, std::vector<double>(3, 0.01), std::vector<double>{0.01}, 0.05); }) ==
        ErrorKind::LengthMismatch);
}

TEST_CASE("translation and scale consistency of HS, FHS and GPQ") {
  const auto r = rhocal::testing::gaussian(250, 0.01, 3);
  std::vector<double> vol(250);
  for (std::size_t i = 0; i < 250; ++i) vol[i] = 0.008 + 0.004 * std::sin(0.1 * static_cast<double>(i));
  const std::vector<double> span{0.009, 0.012};
  for (double c : {-0.003, 0.01}) {
    std::vector<double> shifted(r);
    for (auto& x : shifted) x += c;
    CHECK(hs_forecast(shifted, 1, 0.05).q[0] == doctest::Approx(hs_forecast(r, 1, 0.05).q[0] + c).epsilon(1e-13));
    const auto a = fhs_forecast(r, vol, span, 0.05);
    const auto b = fhs_forecast(shifted, vol, span, 0.05);
    const auto ga = gpq_forecast(r, vol, span, 0.05);
    const auto gb = gpq_forecast(shifted, vol, span, 0.05);
    for (int i = 0; i < 2; ++i) {
      CHECK(b.q[i] == doctest::Approx(a.q[i] + c).epsilon(1e-12));
      CHECK(gb.q[i] == doctest::Approx(ga.q[i] + c).epsilon(1e-12));
    }
  }
  for (double lam : {0.5, 4.0}) {
    std::vector<double> rs(r), vs(vol), ss(span);
    for (auto& x : rs) x *= lam;
    for (auto& x : vs) x *= lam;
    for (auto& x : ss) x *= lam;
    const auto a = fhs_forecast(r, vol, span, 0.05);
    const auto b = fhs_forecast(rs, vs, ss, 0.05);
    for (int i = 0; i < 2; ++i) CHECK(b.q[i] == doctest::Approx(lam * a.q[i]).epsilon(1e-12));
  }
}

TEST_CASE("quantile LP matches brute-force vertex enumeration") {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> z;
  for (int trial = 0; trial < 5; ++trial) {
    const int n = 30;
    Matrix X(n, 2);
    Vector y(n);
    for (int i = 0; i < n; ++i) {
      X(i, 0) = 1.0;
      X(i, 1) = z(rng);
      y[i] = 0.5 * X(i, 1) + z(rng);
    }
    const auto sol = qr::solve_quantile_lp(X, y, 0.1);
    CHECK(sol.converged);
    CHECK(sol.duality_gap <= 1e-8 * (1.0 + std::abs(sol.objective)));
    // An optimal solution interpolates two observations.
    double best = 1e300;
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        const double slope = (y[j] - y[i]) / (X(j, 1) - X(i, 1));
        const double icpt = y[i] - slope * X(i, 1);
        double obj = 0.0;
        for (int k = 0; k < n; ++k) obj += qr::pinball(y[k] - icpt - slope * X(k, 1), 0.1);
        best = std::min(best, obj);
      }
    }
    CHECK(sol.objective == doctest::Approx(best).epsilon(1e-7));
  }
}

TEST_CASE("penalized quantile regression") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> z;
  SUBCASE("constant target gives zero slopes") {
    Matrix F(100, 3);
    for (int i = 0; i < 100; ++i)
      for (int j = 0; j < 3; ++j) F(i, j) = z(rng);
    const std::vector<double> y(100, -0.02);
    const auto f = qr_forecast(F, y, F.topRows(5), 0.05);
    CHECK_FALSE(f.diagnostics.fallback);
    for (int i = 0; i < 5; ++i) CHECK(f.q[i] == doctest::Approx(-0.02).epsilon(1e-7));
    const auto m = qr::fit_penalized(F, Vector::Constant(100, -0.02), 0.05, kQrPenalty);
    CHECK(m.slopes.cwiseAbs().maxCoeff() <= 1e-7);
  }
  SUBCASE("exact linear fit") {
    Matrix F(80, 1), G(5, 1);
    std::vector<double> y(80);
    for (int i = 0; i < 80; ++i) {
      F(i, 0) = z(rng);
      y[static_cast<std::size_t>(i)] = 2.0 * F(i, 0);
    }
    for (int i = 0; i < 5; ++i) G(i, 0) = z(rng);
    const auto f = qr_forecast(F, y, G, 0.05);
    for (int i = 0; i < 5; ++i) CHECK(std::abs(f.q[i] - 2.0 * G(i, 0)) <= 1e-4);
  }
  SUBCASE("uninformative features recover the unconditional quantile") {
    Matrix F(1000, 3);
    std::vector<double> y(1000);
    for (int i = 0; i < 1000; ++i) {
      for (int j = 0; j < 3; ++j) F(i, j) = z(rng);
      y[static_cast<std::size_t>(i)] = z(rng);
    }
    const auto m = qr::fit_penalized(F, Eigen::Map<const Vector>(y.data(), 1000), 0.05, kQrPenalty);
    const double empirical = recal::lower_quantile(std::span<const double>(y), 0.05);
    CHECK(std::abs(m.intercept - empirical) <= 0.2);
    CHECK(std::abs(m.intercept - boost::math::quantile(boost::math::normal(), 0.05)) <= 0.3);
  }
  SUBCASE("constant columns are dropped and recorded") {
    Matrix F(60, 3);
    std::vector<double> y(60);
    for (int i = 0; i < 60; ++i) {
      F(i, 0) = z(rng);
      F(i, 1) = 4.0;
      F(i, 2) = z(rng);
      y[static_cast<std::size_t>(i)] = z(rng);
    }
    const auto f = qr_forecast(F, y, F.topRows(2), 0.05);
    CHECK(f.diagnostics.dropped_columns == std::vector<std::size_t>{1});
    CHECK(f.q.allFinite());
  }
  SUBCASE("too few rows falls back to HS") {
    Matrix F(6, 4);
    for (int i = 0; i < 6; ++i)
      for (int j = 0; j < 4; ++j) F(i, j) = z(rng);
    const std::vector<double> y{0.01, -0.02, 0.0, 0.03, -0.01, 0.02};
    const auto f = qr_forecast(F, y, F.topRows(2), 0.05);
    CHECK(f.diagnostics.fallback);
    CHECK(f.q[0] == -0.02);
    CHECK(kind_of([&] { qr::fit_penalized(F, Vector::Zero(6), 0.05, kQrPenalty); }) == ErrorKind::DegenerateDesign);
  }
}

TEST_CASE("GARCH quantile path arithmetic") {
  garch::Params p;
  p.mu = 0.0003;
  p.omega = 1e-4;
  p.nu = 1e7;
  const auto q = garch::quantile_path(p, p.omega, 4, 0.05);
  const double z = boost::math::quantile(boost::math::normal(), 0.05);
  for (double v : q) CHECK(v == doctest::Approx(p.mu + z * std::sqrt(p.omega)).epsilon(1e-5));

  garch::Params s{0.0, 2e-6, 0.08, 0.0, 0.9, 6.0};
  const auto path = garch::variance_path(s, 1.5e-4, 5);
  double v = 1.5e-4;
  for (double got : path) {
    CHECK(got == doctest::Approx(v).epsilon(1e-13));
    v = s.omega + (s.alpha + s.beta) * v;
  }
  garch::Params a = s;
  a.gamma = 0.1;
  const auto apath = garch::variance_path(a, 1.5e-4, 5);
  v = 1.5e-4;
  for (double got : apath) {
    CHECK(got == doctest::Approx(v).epsilon(1e-13));
    v = a.omega + (a.alpha + 0.5 * a.gamma + a.beta) * v;
  }
}

TEST_CASE("GJR with zero asymmetry reproduces GARCH-t") {
  const garch::Params sym{0.0002, 3e-6, 0.07, 0.0, 0.9, 7.0};
  const auto r = simulate(sym, 800, 6);
  for (auto innov : {garch::Innovation::Normal, garch::Innovation::StudentT}) {
    const double a = garch::log_likelihood(sym, r, innov);
    garch::Params gjr = sym;
    gjr.gamma = 0.0;
    CHECK(garch::log_likelihood(gjr, r, innov) == a);
  }
  const auto qs = garch::quantile_path(sym, 1e-4, 10, 0.05);
  garch::Params gjr = sym;
  gjr.gamma = 0.0;
  const auto qg = garch::quantile_path(gjr, 1e-4, 10, 0.05);
  for (std::size_t i = 0; i < qs.size(); ++i) CHECK(std::abs(qs[i] - qg[i]) <= 1e-10);
}

TEST_CASE("GARCH-t recovers simulated parameters") {
  const garch::Params truth{0.0, 2e-6, 0.08, 0.0, 0.9, 6.0};
  const auto r = simulate(truth, 5000, 7);
  garch::FitOptions opts;
  opts.innovation = garch::Innovation::StudentT;
  const auto fit = garch::fit(r, opts);
  REQUIRE(fit);
  CHECK(std::abs(fit->params.alpha - truth.alpha) <= 0.05);
  CHECK(std::abs(fit->params.beta - truth.beta) <= 0.05);
  CHECK(fit->params.nu >= 3.5);
  CHECK(fit->params.nu <= 12.0);
  CHECK(fit->params.omega / truth.omega >= 0.25);
  CHECK(fit->params.omega / truth.omega <= 4.0);

  const auto f = garch_t_forecast(std::span<const double>(r).subspan(0, 1000), 20, 0.05);
  CHECK_FALSE(f.diagnostics.fallback);
  CHECK(f.q.size() == 20);
  CHECK((f.q.array() < 0.0).all());
}

TEST_CASE("GJR recovers positive asymmetry") {
  const garch::Params truth{0.0, 2e-6, 0.03, 0.1, 0.88, 8.0};
  garch::FitOptions opts;
  opts.innovation = garch::Innovation::StudentT;
  opts.asymmetric = true;
  int positive = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto r = simulate(truth, 1500, 1000 + seed);
    const auto fit = garch::fit(r, opts);
    if (fit && fit->params.gamma > 0.0) ++positive;
  }
  CHECK(positive >= 45);
}

TEST_CASE("parametric baselines fall back on degenerate training data") {
  const std::vector<double> flat(300, 0.001);
  for (bool asym : {false, true}) {
    const auto f = garch_forecast(flat, 3, 0.05, asym);
    CHECK(f.diagnostics.fallback);
    for (int i = 0; i < 3; ++i) CHECK(f.q[i] == 0.001);
  }
  const auto short_train = rhocal::testing::gaussian(100, 0.01, 8);
  const auto g = garch_t_forecast(short_train, 2, 0.05);
  CHECK(g.diagnostics.fallback);
  CHECK(g.q[0] == hs_forecast(short_train, 1, 0.05).q[0]);
}

TEST_CASE("CAViaR") {
  const garch::Params p{0.0, 2e-6, 0.1, 0.0, 0.85, 0.0};
  const auto r = simulate(p, 600, 9);

  SUBCASE("intercept-only fit recovers the empirical quantile") {
    CaviarOptions opts;
    opts.fix_slopes = true;
    opts.starts = 5;
    const auto fit = fit_caviar(r, 0.05, 1, opts);
    CHECK(fit.params.persistence == 0.0);
    CHECK(fit.params.up_slope == 0.0);
    CHECK(fit.params.down_slope == 0.0);
    const double hs = recal::lower_quantile(std::span<const double>(r), 0.05);
    // The pinball-optimal constant is an order statistic near the lower quantile.
    const auto s = sorted(r);
    CHECK(fit.params.intercept >= s[25] - 1e-6);
    CHECK(fit.params.intercept <= s[35] + 1e-6);
    CHECK(pinball_sum(r, fit.params.intercept, 0.05) <= pinball_sum(r, hs, 0.05) + 1e-12);
  }
  SUBCASE("unit persistence freezes the path") {
    const auto path = caviar_path({0.0, 1.0, 0.0, 0.0}, r, -0.02);
    for (double q : path) CHECK(q == -0.02);
    const auto near = caviar_path({0.0, 0.999, 0.0, 0.0}, std::span<const double>(r).subspan(0, 10), -0.02);
    for (double q : near) CHECK(std::abs(q + 0.02) <= 0.02 * 0.01);
  }
  SUBCASE("the fit never loses to the constant solution") {
    const auto fit = fit_caviar(r, 0.05, 2);
    const double hs = recal::lower_quantile(std::span<const double>(r), 0.05);
    CHECK(fit.loss <= caviar_pinball({hs, 0.0, 0.0, 0.0}, r, hs, 0.05));
    CHECK(fit.params.persistence >= 0.0);
    CHECK(fit.params.persistence <= 0.999);
    CHECK(std::abs(fit.params.intercept) <= 1.0);
    CHECK(fit.finite_starts > 0);
  }
  SUBCASE("out-of-sample path uses realized returns up to each date") {
    const auto train = std::span<const double>(r).subspan(0, 500);
    const auto span = std::span<const double>(r).subspan(500, 20);
    const auto f = as_caviar_forecast(train, span, 0.05, 3);
    auto altered = std::vector<double>(span.begin(), span.end());
    altered.back() = 0.5;  // last realized return is never consumed
    const auto g = as_caviar_forecast(train, altered, 0.05, 3);
    CHECK(f.q == g.q);
    CHECK(f.q.allFinite());
  }
}

TEST_CASE("every baseline returns finite forecasts") {
  const auto r = rhocal::testing::gaussian(300, 0.01, 10);
  const std::vector<double> vol(300, 0.01), span(4, 0.01);
  Matrix F = Matrix::Random(300, 3);
  CHECK(hs_forecast(r, 4, 0.05).q.allFinite());
  CHECK(fhs_forecast(r, vol, span, 0.05).q.allFinite());
  CHECK(gpq_forecast(r, vol, span, 0.05).q.allFinite());
  CHECK(qr_forecast(F, r, F.topRows(4), 0.05).q.allFinite());
  CHECK(garch_t_forecast(r, 4, 0.05).q.allFinite());
  CHECK(gjr_garch_t_forecast(r, 4, 0.05).q.allFinite());
  CHECK(as_caviar_forecast(r, span, 0.05, 0).q.allFinite());
}
