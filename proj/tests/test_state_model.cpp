#include "rhocal/market_data.hpp"
#include "rhocal/special.hpp"
#include "rhocal/state_model.hpp"

#include "support.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

using namespace rhocal;
using namespace rhocal::state;

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

std::vector<double> uniform(std::size_t n, double lo, double hi, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(lo, hi);
  std::vector<double> out(n);
  for (auto& x : out) x = d(rng);
  return out;
}

}  // namespace

TEST_CASE("VIX to daily vol") {
  CHECK(vix_to_daily(15.87451) == doctest::Approx(0.01).epsilon(1e-6));
  CHECK(vix_to_daily(31.7490) == doctest::Approx(0.02).epsilon(1e-5));
  CHECK(vix_to_daily(1587.45078663875) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(kind_of([] { vix_to_daily(0.0); }) == ErrorKind::NonpositiveInput);
  CHECK(kind_of([] { vix_to_daily(-3.0); }) == ErrorKind::NonpositiveInput);
}

TEST_CASE("GARCH proxy concentrates near the true vol on i.i.d. data") {
  const auto r = rhocal::testing::gaussian(2000, 0.01, 17);
  const std::vector<double> ewma(r.size(), 0.5);
  GarchProxyAudit audit;
  const auto proxy = garch_proxy_series(r, ewma, 252, &audit);
  std::vector<double> fitted(proxy.begin() + 251, proxy.end());
  const double med = special::median(fitted);
  CHECK(med >= 0.008);
  CHECK(med <= 0.012);
  CHECK(audit.fits + audit.fallbacks == r.size());
  CHECK(audit.fallbacks >= 251);
  for (std::size_t k = 0; k < 251; ++k) CHECK(proxy[k] == 0.5);
}

TEST_CASE("GARCH proxy falls back to EWMA on degenerate input") {
  const std::vector<double> zeros(300, 0.0);
  std::vector<double> ewma(300, 0.0);
  GarchProxyAudit audit;
  const auto proxy = garch_proxy_series(zeros, ewma, 252, &audit);
  CHECK(audit.fits == 0);
  CHECK(audit.fallbacks == 300);
  for (double v : proxy) CHECK(v == 0.0);
  CHECK(kind_of([] { garch_proxy_series({}, {}); }) == ErrorKind::EmptySample);
}

TEST_CASE("composite proxy") {
  SUBCASE("proportional components reduce to the first") {
    const auto c1 = uniform(50, 0.005, 0.03, 1);
    std::vector<double> c2(c1), c3(c1);
    for (auto& x : c2) x *= 2.0;
    for (auto& x : c3) x *= 3.0;
    const auto out = composite_proxy(c1, c2, c3, index_range(0, 30), index_range(30, 20));
    for (int k = 0; k < 20; ++k) CHECK(out.v[k] == doctest::Approx(c1[30 + static_cast<std::size_t>(k)]).epsilon(1e-14));
  }
  SUBCASE("zero components hit the floor") {
    const std::vector<double> z(10, 0.0);
    const auto out = composite_proxy(z, z, z, index_range(0, 5), index_range(5, 5));
    for (int k = 0; k < 5; ++k) CHECK(out.v[k] == kVolFloor);
    CHECK(out.m1 == kVolFloor);
  }
  SUBCASE("hand-evaluated point") {
    const std::vector<double> c1{0.01, 0.01, 0.01, 0.01};
    const std::vector<double> c2{0.02, 0.02, 0.02, 0.04};
    const std::vector<double> c3{0.005, 0.005, 0.005, 0.005};
    const auto out = composite_proxy(c1, c2, c3, index_range(0, 3), {3});
    CHECK(out.m1 == 0.01);
    CHECK(out.m2 == 0.02);
    CHECK(out.m3 == 0.005);
    CHECK(out.v[0] == doctest::Approx(0.0133333333333333).epsilon(1e-13));
  }
  SUBCASE("rescaling one component leaves v unchanged") {
    const auto c1 = uniform(60, 0.005, 0.03, 2);
    const auto c2 = uniform(60, 0.005, 0.03, 3);
    const auto c3 = uniform(60, 0.005, 0.03, 4);
    auto c2s = c2;
    for (auto& x : c2s) x *= 7.5;
    const auto a = composite_proxy(c1, c2, c3, index_range(0, 40), index_range(40, 20));
    const auto b = composite_proxy(c1, c2s, c3, index_range(0, 40), index_range(40, 20));
    for (int k = 0; k < 20; ++k) CHECK(a.v[k] == doctest::Approx(b.v[k]).epsilon(1e-13));
  }
  CHECK(kind_of([] {
          const std::vector<double> c{1.0};
          composite_proxy(c, c, c, {}, {0});
        }) == ErrorKind::EmptyTrainWindow);
}

TEST_CASE("regime labels") {
  SUBCASE("constant series is mid everywhere") {
    const std::vector<double> v(20, 0.01);
    for (auto g : regime_labels(v, index_range(0, 10), index_range(10, 10))) CHECK(g == Regime::Mid);
  }
  SUBCASE("below the training minimum is low") {
    std::vector<double> v = uniform(20, 0.01, 0.02, 5);
    v.push_back(0.001);
    CHECK(regime_labels(v, index_range(0, 20), {20})[0] == Regime::Low);
  }
  SUBCASE("explicit thresholds on 1..100") {
    std::vector<double> v;
    for (int i = 1; i <= 100; ++i) v.push_back(i / 1000.0);
    const auto th = regime_thresholds(v, index_range(0, 100));
    CHECK(th.median == doctest::Approx(0.0505).epsilon(1e-14));
    CHECK(th.p80 == doctest::Approx(0.0802).epsilon(1e-14));
    v.push_back(0.09);
    v.push_back(th.median);
    v.push_back(th.p80);
    v.push_back(0.03);
    const auto g = regime_labels(v, index_range(0, 100), index_range(100, 4));
    CHECK(g == std::vector<Regime>{Regime::High, Regime::Mid, Regime::Mid, Regime::Low});
  }
  CHECK(kind_of([] {
          const std::vector<double> v{1.0};
          regime_labels(v, {}, {0});
        }) == ErrorKind::EmptyTrainWindow);
}

TEST_CASE("strict stress flags") {
  const auto vix = uniform(100, 0.005, 0.03, 6);
  const auto dd = uniform(100, -0.3, 0.0, 7);
  const auto train = index_range(0, 100);
  const auto th = strict_stress_thresholds(vix, dd, train);

  std::vector<double> v2 = vix, d2 = dd;
  const double vmax = *std::max_element(vix.begin(), vix.end());
  const double dmin = *std::min_element(dd.begin(), dd.end());
  v2.insert(v2.end(), {vmax, th.q90_vix, special::median(vix) * 0.99, th.q90_vix, std::nextafter(th.q90_vix, 0.0)});
  d2.insert(d2.end(), {dmin, th.q30_drawdown, dmin, std::nextafter(th.q30_drawdown, 1.0), th.q30_drawdown});
  const auto flags = strict_stress_flags(v2, d2, train, index_range(100, 5));
  CHECK(flags == std::vector<std::uint8_t>{1, 1, 0, 0, 0});
}

TEST_CASE("strict stress lies inside the above-median VIX set") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto vix = uniform(300, 0.005, 0.03, seed);
    const auto dd = uniform(300, -0.3, 0.0, seed + 100);
    const auto train = index_range(0, 200);
    const auto eval = index_range(200, 100);
    const auto flags = strict_stress_flags(vix, dd, train, eval);
    const auto th = regime_thresholds(vix, train);
    for (std::size_t k = 0; k < eval.size(); ++k) {
      if (flags[k]) CHECK(vix[eval[k]] >= th.median);
    }
  }
}

TEST_CASE("selection stress relaxation") {
  std::vector<double> train;
  for (int i = 1; i <= 101; ++i) train.push_back(i / 1000.0);  // percentile p -> (1 + 100p) / 1000
  const auto train_idx = index_range(0, 101);

  SUBCASE("no relaxation needed") {
    auto v = train;
    for (int k = 0; k < 168; ++k) v.push_back(k % 10 < 3 ? 0.09 : 0.02);
    const auto s = selection_stress_flags(v, train_idx, index_range(101, 168));
    CHECK(s.audit.percentile == 70.0);
    CHECK(s.audit.count == 51);
    CHECK_FALSE(s.audit.exhausted);
  }
  SUBCASE("walks down until enough dates are flagged") {
    // 5 dates at the 66th percentile level, 8 more at the 61st, the rest low.
    auto v = train;
    for (int k = 0; k < 168; ++k) v.push_back(k < 5 ? 0.067 : (k < 13 ? 0.062 : 0.03));
    const auto s = selection_stress_flags(v, train_idx, index_range(101, 168));
    CHECK(s.audit.percentile == 60.0);
    CHECK(s.audit.count == 13);
    CHECK(s.audit.threshold == doctest::Approx(0.061).epsilon(1e-12));
    CHECK_FALSE(s.audit.exhausted);
  }
  SUBCASE("exhaustion below the training minimum") {
    auto v = train;
    for (int k = 0; k < 168; ++k) v.push_back(0.0001);
    const auto s = selection_stress_flags(v, train_idx, index_range(101, 168));
    CHECK(s.audit.percentile == 50.0);
    CHECK(s.audit.count == 0);
    CHECK(s.audit.exhausted);
  }
}

TEST_CASE("thresholds ignore data past the training window") {
  const auto base = uniform(300, 0.005, 0.03, 8);
  const auto dd = uniform(300, -0.3, 0.0, 9);
  auto extended = base;
  auto dd_ext = dd;
  for (int k = 0; k < 50; ++k) {
    extended.push_back(0.5);
    dd_ext.push_back(-0.9);
  }
  const auto train = index_range(0, 200);
  const auto eval = index_range(200, 100);
  CHECK(regime_labels(base, train, eval) == regime_labels(extended, train, eval));
  CHECK(strict_stress_flags(base, dd, train, eval) == strict_stress_flags(extended, dd_ext, train, eval));
  CHECK(selection_stress_flags(base, train, eval).flags == selection_stress_flags(extended, train, eval).flags);
  const auto a = composite_proxy(base, dd, base, train, eval);
  const auto b = composite_proxy(extended, dd_ext, extended, train, eval);
  CHECK(a.v == b.v);
}

TEST_CASE("underreaction shrinks stressed dates only") {
  VolProxySeries p;
  p.v = Vector::Constant(3, 0.02);
  const std::vector<std::uint8_t> flags{1, 0, 1};
  const auto out = apply_underreaction(p, flags, 0.4);
  CHECK(out.v[0] == doctest::Approx(0.008).epsilon(1e-15));
  CHECK(out.v[1] == 0.02);
  CHECK(out.v[2] == doctest::Approx(0.008).epsilon(1e-15));

  const auto near_one = apply_underreaction(p, flags, 0.9999);
  CHECK(std::round(near_one.v[0] * 1000.0) == std::round(0.02 * 1000.0));

  CHECK(kind_of([&] { apply_underreaction(p, flags, 1.0); }) == ErrorKind::BadKappa);
  CHECK(kind_of([&] { apply_underreaction(p, flags, 0.0); }) == ErrorKind::BadKappa);

  VolProxySeries tiny;
  tiny.v = Vector::Constant(1, kVolFloor);
  CHECK(apply_underreaction(tiny, std::vector<std::uint8_t>{1}, 0.4).v[0] == kVolFloor);
}
