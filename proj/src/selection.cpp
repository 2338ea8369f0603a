#include "rhocal/selection.hpp"

#include <cmath>
#include <limits>
#include <tuple>

namespace rhocal::select {

namespace {

Eigen::Map<const Vector> as_vector(std::span<const double> x) {
  return {x.data(), static_cast<Eigen::Index>(x.size())};
}

template <typename Objective>
Selection argmin(std::span<const CandidateEvaluation> candidates, Objective objective) {
  if (candidates.empty()) throw Error(ErrorKind::EmptyCandidates, "no candidates to select from");
  std::size_t best = 0;
  double best_obj = objective(candidates[0]);
  for (std::size_t i = 1; i < candidates.size(); ++i) {
    const double obj = objective(candidates[i]);
    if (obj < best_obj || (obj == best_obj && rule_less(candidates[i].rule, candidates[best].rule))) {
      best = i;
      best_obj = obj;
    }
  }
  return {candidates[best].rule, best, 0};
}

double stress_violation(const CandidateEvaluation& c, const SelectorConfig& cfg) {
  const double stress = c.stress_count > 0 ? std::max(0.0, c.stress_exceed - cfg.alpha - cfg.tau_stress) : 0.0;
  const double overall = std::max(0.0, std::abs(c.overall_exceed - cfg.alpha) - cfg.tau_overall);
  return stress + overall;
}

bool is_feasible(const CandidateEvaluation& c, const SelectorConfig& cfg) {
  return c.stress_count > 0 && c.stress_exceed <= cfg.alpha + cfg.tau_stress &&
         std::abs(c.overall_exceed - cfg.alpha) <= cfg.tau_overall;
}

Selection screened(std::span<const CandidateEvaluation> candidates, const SelectorConfig& cfg) {
  if (candidates.empty()) throw Error(ErrorKind::EmptyCandidates, "no candidates to select from");
  auto base = [&](const CandidateEvaluation& c) {
    return cfg.w_pinball * c.stress_pinball + cfg.w_capital * c.avg_capital;
  };
  std::size_t feasible = 0;
  for (const auto& c : candidates) feasible += is_feasible(c, cfg) ? 1 : 0;
  Selection out = feasible > 0
                      ? argmin(candidates,
                               [&](const CandidateEvaluation& c) {
                                 return is_feasible(c, cfg) ? base(c)
                                                            : std::numeric_limits<double>::infinity();
                               })
                      : argmin(candidates, [&](const CandidateEvaluation& c) {
                          return base(c) + cfg.penalty * stress_violation(c, cfg);
                        });
  out.feasible_count = feasible;
  return out;
}

}  // namespace

bool rule_less(const RecalRule& a, const RecalRule& b) {
  return std::tuple(a.rho_low(), a.rho_mid(), a.rho_high()) <
         std::tuple(b.rho_low(), b.rho_mid(), b.rho_high());
}

CandidateEvaluation evaluate_candidate(const RecalRule& rule, const Block& fit, const Block& eval,
                                       std::span<const std::uint8_t> stress_flags, double alpha) {
  if (fit.size() == 0 || eval.size() == 0) {
    throw Error(ErrorKind::EmptySample, "evaluate_candidate: empty fit or evaluation block");
  }
  if (!stress_flags.empty() && stress_flags.size() != eval.size()) {
    throw Error(ErrorKind::LengthMismatch, "stress flags not aligned with evaluation block");
  }
  const auto cal = recal::calibrate(rule, as_vector(fit.y), as_vector(fit.q), as_vector(fit.v), alpha,
                                    rule.is_tuple() ? fit.g : std::span<const Regime>{});
  CandidateEvaluation out;
  out.rule = rule;
  out.c = cal.c;
  double capital = 0.0;
  std::size_t hits = 0;
  std::size_t stress_hits = 0;
  double stress_pin = 0.0;
  for (std::size_t s = 0; s < eval.size(); ++s) {
    const std::optional<Regime> g = rule.is_tuple() ? std::optional<Regime>(eval.g[s]) : std::nullopt;
    const double q = recal::apply(cal, eval.q[s], eval.v[s], g);
    const bool hit = eval.y[s] <= q;
    capital += std::max(-q, 0.0);
    hits += hit ? 1 : 0;
    if (!stress_flags.empty() && stress_flags[s]) {
      ++out.stress_count;
      stress_hits += hit ? 1 : 0;
      stress_pin += (alpha - (eval.y[s] < q ? 1.0 : 0.0)) * (eval.y[s] - q);
    }
  }
  const auto n = static_cast<double>(eval.size());
  out.avg_capital = capital / n;
  out.overall_exceed = static_cast<double>(hits) / n;
  if (out.stress_count > 0) {
    out.stress_exceed = static_cast<double>(stress_hits) / static_cast<double>(out.stress_count);
    out.stress_pinball = stress_pin / static_cast<double>(out.stress_count);
  }
  out.objective = out.avg_capital;
  return out;
}

Selection select_global_avg(std::span<const CandidateEvaluation> candidates) {
  auto out = argmin(candidates, [](const CandidateEvaluation& c) { return c.avg_capital; });
  out.feasible_count = candidates.size();
  return out;
}

Selection select_global_stress(std::span<const CandidateEvaluation> candidates, const SelectorConfig& config) {
  return screened(candidates, config);
}

std::vector<RecalRule> enumerate_monotone_tuples(std::span<const double> component_grid) {
  if (component_grid.empty()) throw Error(ErrorKind::EmptyGrid, "empty tuple component grid");
  std::vector<RecalRule> out;
  const std::size_t g = component_grid.size();
  for (std::size_t l = 0; l < g; ++l) {
    for (std::size_t m = 0; m <= l; ++m) {
      for (std::size_t h = 0; h <= m; ++h) {
        out.push_back(RecalRule::tuple(component_grid[l], component_grid[m], component_grid[h]));
      }
    }
  }
  return out;
}

Selection select_regime(std::span<const CandidateEvaluation> candidates, RegimeMode mode,
                        const SelectorConfig& config) {
  if (mode == RegimeMode::Stress) return screened(candidates, config);
  auto out = argmin(candidates, [&](const CandidateEvaluation& c) {
    const double dl = c.rule.rho_low() - c.rule.rho_mid();
    const double dh = c.rule.rho_mid() - c.rule.rho_high();
    return c.avg_capital + config.lambda_smooth * (dl * dl + dh * dh);
  });
  out.feasible_count = candidates.size();
  return out;
}

}  // namespace rhocal::select
