#include "rhocal/theory.hpp"

#include "rhocal/recalibration.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>

namespace rhocal::theory {

namespace {

const std::vector<double> kRhoGrid{0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};

struct Instance {
  std::vector<double> y, q, v;
  double q_test = 0.0;
  double v_test = 0.0;
};

Instance random_instance(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> vol(0.005, 0.05);
  std::normal_distribution<double> z;
  std::uniform_real_distribution<double> base(-0.04, -0.01);
  Instance in;
  in.y.resize(n);
  in.q.resize(n);
  in.v.resize(n);
  for (std::size_t s = 0; s < n; ++s) {
    in.v[s] = vol(rng);
    in.q[s] = base(rng);
    in.y[s] = in.q[s] + 1.6 * in.v[s] + in.v[s] * z(rng);
  }
  in.q_test = base(rng);
  in.v_test = vol(rng);
  return in;
}

// Calibrate on (y, q, v * mult_s) and apply at the test point with v_test * mult_t.
double recalibrated(const Instance& in, double rho, std::span<const double> mult, double mult_test,
                    const QuantileFn& quantile, double alpha, double* c_out = nullptr) {
  std::vector<double> u(in.y.size());
  for (std::size_t s = 0; s < u.size(); ++s) {
    u[s] = (in.y[s] - in.q[s]) / recal::proxy_power(in.v[s] * mult[s], rho);
  }
  const double c = quantile(u, alpha);
  if (c_out) *c_out = c;
  return in.q_test + c * recal::proxy_power(in.v_test * mult_test, rho);
}

class Timer {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

void record(Check& c, bool ok, double violation) {
  ++c.instances;
  if (!ok) {
    ++c.failures;
    c.passed = false;
  }
  c.worst = std::max(c.worst, violation);
}

const QuantileFn& resolve(const SuiteOptions& o) {
  static const QuantileFn fallback = default_quantile();
  return o.quantile ? o.quantile : fallback;
}

}  // namespace

QuantileFn default_quantile() {
  return [](std::span<const double> s, double a) { return recal::lower_quantile(s, a); };
}

bool Report::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
}

Check check_scale_invariance(std::uint64_t seed, const SuiteOptions& options) {
  Timer timer;
  Check out;
  out.name = "scale_invariance";
  const auto& quantile = resolve(options);
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> size(20, 300);
  for (std::size_t i = 0; i < options.invariance_instances; ++i) {
    const auto in = random_instance(rng, size(rng));
    const std::vector<double> ones(in.y.size(), 1.0);
    for (double rho : kRhoGrid) {
      const double reference = recalibrated(in, rho, ones, 1.0, quantile, options.alpha);
      for (double eta : {0.1, 1.0, 10.0}) {
        const std::vector<double> scaled(in.y.size(), eta);
        const double q = recalibrated(in, rho, scaled, eta, quantile, options.alpha);
        const double diff = std::abs(q - reference);
        record(out, diff <= 1e-10, diff);
      }
      // Elasticity of the adjustment: log|A(eta v)| - log|A(v)| = rho log eta.
      const double c = -0.01;
      const double gap = std::abs(std::log(std::abs(recal::adjustment(3.0 * in.v_test, c, rho))) -
                                  std::log(std::abs(recal::adjustment(in.v_test, c, rho))) - rho * std::log(3.0));
      record(out, gap <= 1e-12, gap);
    }
  }
  out.seconds = timer.seconds();
  out.detail = "max |forecast change| under uniform proxy rescaling";
  return out;
}

Check check_contrast(std::uint64_t seed, const SuiteOptions& options) {
  Timer timer;
  Check out;
  out.name = "contrast_ratio";
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> low(0.001, 0.05);
  std::uniform_real_distribution<double> ratio(1.01, 5.0);
  for (std::size_t i = 0; i < options.contrast_instances; ++i) {
    const double vl = low(rng);
    const double vh = vl * ratio(rng);
    bool ok = recal::contrast_ratio(vh, vl, 0.0) == 1.0 && recal::contrast_ratio(vh, vl, 1.0) == vh / vl;
    double prev = 0.0;
    for (double rho : kRhoGrid) {
      const double r = recal::contrast_ratio(vh, vl, rho);
      if (rho > 0.0 && !(r > prev)) ok = false;
      prev = r;
    }
    record(out, ok, ok ? 0.0 : 1.0);
  }
  out.seconds = timer.seconds();
  out.detail = "endpoints exact and strictly increasing in rho";
  return out;
}

Check check_distortion(std::uint64_t seed, const SuiteOptions& options, Report* report) {
  Timer timer;
  Check out;
  out.name = "distortion_curve";
  const std::vector<std::pair<std::string, eval::Law>> laws{{"gaussian", eval::Law::gaussian()},
                                                            {"student_t5", eval::Law::student_t(5.0)}};
  std::uint64_t stream = seed;
  for (const auto& [label, law] : laws) {
    const double q_star = law.quantile(options.alpha);
    for (double a : {0.25, 0.5, 1.0}) {
      for (double kappa : {0.2, 0.4, 0.8}) {
        const auto curve = eval::distortion_curve(law, options.alpha, a, kappa, kRhoGrid, options.mc_draws, ++stream);
        bool ok = curve.delta.front() == 0.0;
        double worst = std::abs(curve.delta.front());
        for (std::size_t j = 0; j < curve.rho.size(); ++j) {
          if (j > 0 && curve.delta[j] < curve.delta[j - 1]) {
            ok = false;
            worst = std::max(worst, curve.delta[j - 1] - curve.delta[j]);
          }
          const double shift = a * (1.0 - std::pow(kappa, curve.rho[j]));
          const auto [f_min, f_max] = law.density_range(q_star, q_star + shift);
          const double slack = 1e-12;
          if (curve.delta[j] < f_min * shift - slack || curve.delta[j] > f_max * shift + slack) {
            ok = false;
            worst = std::max(worst, std::max(f_min * shift - curve.delta[j], curve.delta[j] - f_max * shift));
          }
          if (!curve.mc_delta.empty()) {
            // Monte Carlo agreement within 4.5 standard errors.
            const double err = std::abs(curve.mc_delta[j] - curve.delta[j]);
            if (err > 4.5 * curve.se[j] + 1e-12) {
              ok = false;
              worst = std::max(worst, err);
            }
          }
        }
        record(out, ok, worst);
        if (report) {
          report->curves.push_back(curve);
          char buf[96];
          std::snprintf(buf, sizeof buf, "%s a=%g kappa=%g", label.c_str(), a, kappa);
          report->curve_labels.emplace_back(buf);
        }
      }
    }
  }
  out.seconds = timer.seconds();
  out.detail = "zero at rho=0, nondecreasing, within density bounds, Monte Carlo agrees";
  return out;
}

Check check_distortion_sign(std::uint64_t seed, const SuiteOptions& options) {
  Timer timer;
  Check out;
  out.name = "distortion_sign";
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> c_dist(-0.05, -0.001);
  std::uniform_real_distribution<double> v_dist(0.005, 0.05);
  std::uniform_real_distribution<double> k_dist(0.05, 0.95);
  std::uniform_real_distribution<double> q_dist(-0.05, -0.005);
  for (std::size_t i = 0; i < options.ordering_instances; ++i) {
    const double c = c_dist(rng), v = v_dist(rng), kappa = k_dist(rng), q = q_dist(rng);
    for (double rho : kRhoGrid) {
      const double clean = q + c * recal::proxy_power(v, rho);
      const double shrunk = q + c * recal::proxy_power(kappa * v, rho);
      const bool ok = rho == 0.0 ? shrunk == clean : shrunk > clean;
      record(out, ok, ok ? 0.0 : std::abs(shrunk - clean));
    }
  }
  out.seconds = timer.seconds();
  out.detail = "under-reacting proxy lifts the forecast for rho>0, identical at rho=0";
  return out;
}

Check check_heterogeneous_ordering(std::uint64_t seed, const SuiteOptions& options) {
  Timer timer;
  Check out;
  out.name = "heterogeneous_ordering";
  const auto& quantile = resolve(options);
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> size(20, 200);
  std::uniform_real_distribution<double> mult(0.3, 3.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> pick(0, kRhoGrid.size() - 1);
  std::size_t made = 0;
  while (made < options.ordering_instances) {
    const auto in = random_instance(rng, size(rng));
    const double rho = kRhoGrid[pick(rng)];
    std::vector<double> d(in.y.size());
    for (auto& x : d) x = mult(rng);
    const std::vector<double> ones(in.y.size(), 1.0);
    double c = 0.0;
    const double clean = recalibrated(in, rho, ones, 1.0, quantile, options.alpha, &c);
    if (!(c < 0.0)) continue;
    ++made;
    const auto [lo, hi] = std::minmax_element(d.begin(), d.end());
    const double d_below = *lo * (0.1 + 0.85 * unit(rng));
    const double d_above = *hi * (1.05 + 2.0 * unit(rng));
    const double lifted = recalibrated(in, rho, d, d_below, quantile, options.alpha);
    const double lowered = recalibrated(in, rho, d, d_above, quantile, options.alpha);
    record(out, lifted >= clean, std::max(0.0, clean - lifted));
    record(out, lowered <= clean, std::max(0.0, lowered - clean));
  }
  out.seconds = timer.seconds();
  out.detail = "test multiplier below all calibration multipliers never lowers the forecast, above never raises it";
  return out;
}

std::size_t idealized_screened_select(std::span<const double> distortion, std::span<const double> capital,
                                      double tol, std::vector<bool>* feasible) {
  if (distortion.size() != capital.size() || distortion.empty()) {
    throw Error(ErrorKind::EmptyCandidates, "idealized selector needs aligned nonempty curves");
  }
  std::size_t best = 0;
  bool any = false;
  if (feasible) feasible->assign(distortion.size(), false);
  for (std::size_t j = 0; j < distortion.size(); ++j) {
    if (distortion[j] > tol) continue;
    if (feasible) (*feasible)[j] = true;
    if (!any || capital[j] <= capital[best]) best = j;
    any = true;
  }
  return best;
}

Check check_screened_selector(std::uint64_t seed, const SuiteOptions& options) {
  Timer timer;
  Check out;
  out.name = "screened_selector";
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const std::size_t g = kRhoGrid.size();
  for (std::size_t i = 0; i < options.selector_instances; ++i) {
    std::vector<double> dist(g), cap(g);
    dist[0] = 0.0;
    cap[0] = 0.02 + 0.03 * unit(rng);
    for (std::size_t j = 1; j < g; ++j) {
      // Occasional flat steps exercise ties.
      dist[j] = dist[j - 1] + (unit(rng) < 0.2 ? 0.0 : 0.01 * unit(rng));
      cap[j] = cap[j - 1] - (unit(rng) < 0.2 ? 0.0 : 0.003 * unit(rng));
    }
    // Tolerances spanning infeasible-everywhere to feasible-everywhere.
    std::vector<double> taus(10);
    for (std::size_t k = 0; k < taus.size(); ++k) {
      taus[k] = -0.005 + (dist.back() + 0.01) * static_cast<double>(k) / 9.0;
    }
    bool ok = true;
    std::size_t prev = 0;
    for (std::size_t k = 0; k < taus.size(); ++k) {
      std::vector<bool> feasible;
      const std::size_t chosen = idealized_screened_select(dist, cap, taus[k], &feasible);
      if (k > 0 && kRhoGrid[chosen] < kRhoGrid[prev]) ok = false;
      prev = chosen;
      // Prefix: once infeasible, stays infeasible.
      for (std::size_t j = 1; j < g; ++j) {
        if (feasible[j] && !feasible[j - 1]) ok = false;
      }
    }
    record(out, ok, ok ? 0.0 : 1.0);
  }
  out.seconds = timer.seconds();
  out.detail = "selected rho nondecreasing in tolerance; feasible sets are prefixes";
  return out;
}

Report run_theory_suite(std::uint64_t seed, SuiteOptions options) {
  Report report;
  report.seed = seed;
  std::seed_seq seq{seed};
  std::vector<std::uint64_t> seeds(6);
  seq.generate(seeds.begin(), seeds.end());
  report.checks.push_back(check_scale_invariance(seeds[0], options));
  report.checks.push_back(check_contrast(seeds[1], options));
  report.checks.push_back(check_distortion(seeds[2], options, &report));
  report.checks.push_back(check_distortion_sign(seeds[3], options));
  report.checks.push_back(check_heterogeneous_ordering(seeds[4], options));
  report.checks.push_back(check_screened_selector(seeds[5], options));
  return report;
}

}  // namespace rhocal::theory
