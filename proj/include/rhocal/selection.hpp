#pragma once

#include "rhocal/recalibration.hpp"
#include "rhocal/state_model.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace rhocal::select {

using recal::RecalRule;
using state::Regime;

struct SelectorConfig {
  double alpha = 0.05;
  std::vector<double> rho_grid{0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
  std::vector<double> tuple_grid{0.0, 0.25, 0.5, 0.75, 1.0};
  double tau_stress = 0.03;
  double tau_overall = 0.02;
  double w_pinball = 1.0;
  double w_capital = 0.5;
  double penalty = 100.0;
  double lambda_smooth = 0.1;
  state::SelectionStressConfig stress;
};

/// Non-owning view of a contiguous block of (Y, baseline q, proxy v, regime).
struct Block {
  std::span<const double> y;
  std::span<const double> q;
  std::span<const double> v;
  std::span<const Regime> g;

  std::size_t size() const { return y.size(); }
};

struct CandidateEvaluation {
  RecalRule rule = RecalRule::scalar(0.0);
  double c = 0.0;
  double avg_capital = 0.0;
  double overall_exceed = 0.0;
  double stress_exceed = 0.0;
  double stress_pinball = 0.0;
  std::size_t stress_count = 0;
  bool feasible = true;
  double objective = 0.0;
};

/// Fits c on `fit`, applies it over `eval` and scores the forecasts.
/// `stress_flags` is aligned with `eval`; an empty flag set leaves the stress
/// metrics at zero with stress_count = 0.
CandidateEvaluation evaluate_candidate(const RecalRule& rule, const Block& fit, const Block& eval,
                                       std::span<const std::uint8_t> stress_flags, double alpha);

struct Selection {
  RecalRule rule = RecalRule::scalar(0.0);
  std::size_t index = 0;
  std::size_t feasible_count = 0;
};

Selection select_global_avg(std::span<const CandidateEvaluation> candidates);
Selection select_global_stress(std::span<const CandidateEvaluation> candidates, const SelectorConfig& config);

std::vector<RecalRule> enumerate_monotone_tuples(std::span<const double> component_grid);

enum class RegimeMode { Average, Stress };

/// Average mode: capital plus a quadratic smoothness penalty across adjacent
/// regimes. Stress mode: the screened objective of select_global_stress, with
/// candidates scored on the high-regime subset by the caller.
Selection select_regime(std::span<const CandidateEvaluation> candidates, RegimeMode mode,
                        const SelectorConfig& config);

/// Lexicographic order on (rho_low, rho_mid, rho_high); the tie-break everywhere.
bool rule_less(const RecalRule& a, const RecalRule& b);

}  // namespace rhocal::select
