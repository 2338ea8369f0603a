#include "rhocal/evaluation.hpp"

#include "rhocal/special.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace rhocal::eval {

namespace {

// x ln(x / y) with 0 ln 0 := 0.
double xlogy_ratio(double x, double p) { return x > 0.0 ? x * std::log(p) : 0.0; }

// Bernoulli log-likelihood of `ones` successes and `zeros` failures at rate p.
double bernoulli_loglik(double zeros, double ones, double p) {
  return xlogy_ratio(zeros, 1.0 - p) + xlogy_ratio(ones, p);
}

TestResult finish(double statistic, int dof) {
  TestResult r;
  r.statistic = std::max(statistic, 0.0);
  r.dof = dof;
  r.p_value = special::chi2_sf(r.statistic, dof);
  r.pass = r.p_value >= 0.05;
  return r;
}

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorKind::BadConfig, "alpha must lie in (0,1)");
}

}  // namespace

double exceedance(std::span<const std::uint8_t> hits) {
  if (hits.empty()) throw Error(ErrorKind::EmptySample, "exceedance of empty hit series");
  std::size_t x = 0;
  for (auto h : hits) x += h ? 1 : 0;
  return static_cast<double>(x) / static_cast<double>(hits.size());
}

SubsetRate stress_exceedance(std::span<const std::uint8_t> hits, std::span<const std::uint8_t> flags) {
  if (hits.size() != flags.size()) throw Error(ErrorKind::LengthMismatch, "stress flags not aligned with hits");
  SubsetRate out;
  std::size_t x = 0;
  for (std::size_t i = 0; i < hits.size(); ++i) {
    if (!flags[i]) continue;
    ++out.count;
    x += hits[i] ? 1 : 0;
  }
  if (out.count > 0) out.value = static_cast<double>(x) / static_cast<double>(out.count);
  return out;
}

double avg_capital(std::span<const double> q) {
  if (q.empty()) throw Error(ErrorKind::EmptySample, "avg_capital of empty forecast series");
  double sum = 0.0;
  for (double v : q) sum += std::max(-v, 0.0);
  return sum / static_cast<double>(q.size());
}

double tick_loss(std::span<const double> y, std::span<const double> q, double alpha) {
  if (y.size() != q.size()) throw Error(ErrorKind::LengthMismatch, "tick_loss: y and q differ in length");
  if (y.empty()) throw Error(ErrorKind::EmptySample, "tick_loss of empty series");
  double sum = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) sum += (alpha - (y[i] < q[i] ? 1.0 : 0.0)) * (y[i] - q[i]);
  return sum / static_cast<double>(y.size());
}

TestResult kupiec_uc(std::size_t n, std::size_t x, double alpha) {
  check_alpha(alpha);
  if (n == 0 || x > n) throw Error(ErrorKind::BadConfig, "kupiec_uc needs n >= 1 and 0 <= x <= n");
  const auto nx = static_cast<double>(x);
  const auto nn = static_cast<double>(n - x);
  const double p_hat = nx / static_cast<double>(n);
  const double lr = -2.0 * (bernoulli_loglik(nn, nx, alpha) - bernoulli_loglik(nn, nx, p_hat));
  return finish(lr, 1);
}

TestResult christoffersen_cc(std::span<const std::uint8_t> hits, double alpha) {
  if (hits.size() < 2) throw Error(ErrorKind::TooShort, "christoffersen_cc needs at least two hits");
  std::size_t x = 0;
  for (auto h : hits) x += h ? 1 : 0;
  const double uc = kupiec_uc(hits.size(), x, alpha).statistic;

  double n[2][2] = {{0.0, 0.0}, {0.0, 0.0}};
  for (std::size_t t = 1; t < hits.size(); ++t) n[hits[t - 1] ? 1 : 0][hits[t] ? 1 : 0] += 1.0;
  const double from0 = n[0][0] + n[0][1];
  const double from1 = n[1][0] + n[1][1];
  const double pi = (n[0][1] + n[1][1]) / (from0 + from1);
  const double pi0 = from0 > 0.0 ? n[0][1] / from0 : 0.0;
  const double pi1 = from1 > 0.0 ? n[1][1] / from1 : 0.0;
  const double restricted = bernoulli_loglik(n[0][0] + n[1][0], n[0][1] + n[1][1], pi);
  const double unrestricted = bernoulli_loglik(n[0][0], n[0][1], pi0) + bernoulli_loglik(n[1][0], n[1][1], pi1);
  const double ind = std::max(-2.0 * (restricted - unrestricted), 0.0);
  return finish(uc + ind, 2);
}

TestResult dq_test(std::span<const std::uint8_t> hits, std::span<const double> q, double alpha, int lags) {
  check_alpha(alpha);
  if (hits.size() != q.size()) throw Error(ErrorKind::LengthMismatch, "dq_test: hits and forecasts differ");
  if (lags < 0 || hits.size() <= static_cast<std::size_t>(lags) + 10) {
    throw Error(ErrorKind::TooShort, "dq_test needs more than lags + 10 observations");
  }
  const auto L = static_cast<std::size_t>(lags);
  const auto rows = static_cast<Eigen::Index>(hits.size() - L);
  const Eigen::Index cols = lags + 2;
  Matrix X(rows, cols);
  Vector y(rows);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const std::size_t t = static_cast<std::size_t>(r) + L;
    X(r, 0) = 1.0;
    for (std::size_t j = 1; j <= L; ++j) X(r, static_cast<Eigen::Index>(j)) = hits[t - j] ? 1.0 : 0.0;
    X(r, cols - 1) = q[t];
    y[r] = (hits[t] ? 1.0 : 0.0) - alpha;
  }
  const Eigen::CompleteOrthogonalDecomposition<Matrix> cod(X);
  const Vector b = cod.solve(y);
  const Vector fitted = X * b;
  TestResult r = finish(fitted.squaredNorm() / (alpha * (1.0 - alpha)), lags + 2);
  r.rank = static_cast<int>(cod.rank());
  r.degenerate = cod.rank() < cols;
  return r;
}

MetricsSummary summarize(std::span<const double> y, std::span<const double> q, std::span<const std::uint8_t> hits,
                         std::span<const std::uint8_t> strict_flags, double alpha) {
  if (y.size() != q.size() || y.size() != hits.size()) {
    throw Error(ErrorKind::LengthMismatch, "summarize: series lengths differ");
  }
  MetricsSummary m;
  m.n = y.size();
  m.exceedance = exceedance(hits);
  std::size_t x = 0;
  for (auto h : hits) x += h ? 1 : 0;
  m.uc = kupiec_uc(m.n, x, alpha);
  m.avg_capital = avg_capital(q);
  m.tick_loss = tick_loss(y, q, alpha);
  if (!strict_flags.empty()) {
    const auto s = stress_exceedance(hits, strict_flags);
    m.strict_exceedance = s.value;
    m.strict_count = s.count;
    if (s.value) {
      m.stress_gap = *s.value - alpha;
      double cap = 0.0;
      for (std::size_t i = 0; i < q.size(); ++i) {
        if (strict_flags[i]) cap += std::max(-q[i], 0.0);
      }
      m.stressed_avg_capital = cap / static_cast<double>(s.count);
    }
  }
  if (m.n >= 2) m.cc = christoffersen_cc(hits, alpha);
  if (m.n > 14) m.dq = dq_test(hits, q, alpha);
  return m;
}

Law Law::student_t(double dof) {
  if (!(dof > 0.0)) throw Error(ErrorKind::BadDistribution, "Student-t law needs dof > 0");
  return {Family::StudentT, dof};
}

double Law::cdf(double x) const {
  return family == Family::Gaussian ? special::normal_cdf(x) : special::student_t_cdf(x, dof);
}

double Law::pdf(double x) const {
  return family == Family::Gaussian ? special::normal_pdf(x) : special::student_t_pdf(x, dof);
}

double Law::quantile(double p) const {
  return family == Family::Gaussian ? special::normal_quantile(p) : special::student_t_quantile(p, dof);
}

std::pair<double, double> Law::density_range(double lo, double hi) const {
  if (lo > hi) std::swap(lo, hi);
  const double f_lo = pdf(lo);
  const double f_hi = pdf(hi);
  const double f_max = (lo <= 0.0 && hi >= 0.0) ? pdf(0.0) : std::max(f_lo, f_hi);
  return {std::min(f_lo, f_hi), f_max};
}

DistortionCurve distortion_curve(const Law& law, double alpha, double a, double kappa,
                                 std::span<const double> rho_grid, std::size_t draws, std::uint64_t seed) {
  check_alpha(alpha);
  if (law.family == Law::Family::StudentT && !(law.dof > 0.0)) {
    throw Error(ErrorKind::BadDistribution, "Student-t law needs dof > 0");
  }
  if (!(a > 0.0)) throw Error(ErrorKind::BadConfig, "distortion_curve needs a > 0");
  if (!(kappa > 0.0 && kappa <= 1.0)) throw Error(ErrorKind::BadKappa, "kappa must lie in (0,1]");

  DistortionCurve out;
  out.kappa = kappa;
  out.a = a;
  out.alpha = alpha;
  const double q_star = law.quantile(alpha);
  // F(q*) stands in for alpha so the rho = 0 entry is exactly zero.
  const double f_star = law.cdf(q_star);

  std::vector<double> sample;
  if (draws > 0) {
    std::mt19937_64 rng(seed);
    sample.resize(draws);
    if (law.family == Law::Family::Gaussian) {
      std::normal_distribution<double> dist;
      for (auto& x : sample) x = dist(rng);
    } else {
      std::student_t_distribution<double> dist(law.dof);
      for (auto& x : sample) x = dist(rng);
    }
    std::sort(sample.begin(), sample.end());
  }

  for (double rho : rho_grid) {
    const double shift = a * (1.0 - std::pow(kappa, rho));
    out.rho.push_back(rho);
    out.delta.push_back(law.cdf(q_star + shift) - f_star);
    if (draws > 0) {
      const auto below = std::upper_bound(sample.begin(), sample.end(), q_star + shift) - sample.begin();
      const double p = static_cast<double>(below) / static_cast<double>(draws);
      out.mc_delta.push_back(p - alpha);
      out.se.push_back(std::sqrt(std::max(p * (1.0 - p), 1e-300) / static_cast<double>(draws)));
    }
  }
  return out;
}

}  // namespace rhocal::eval
