#include "rhocal/engine.hpp"

#include "rhocal/state_model.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>

namespace rhocal::engine {

namespace {

constexpr std::array<std::pair<RecalMethod, std::string_view>, 7> kMethodNames{{
    {RecalMethod::Base, "base"},
    {RecalMethod::Rho0, "rho0"},
    {RecalMethod::Rho1, "rho1"},
    {RecalMethod::GlobalAvg, "global_avg"},
    {RecalMethod::GlobalStress, "global_stress"},
    {RecalMethod::RegimeAvg, "regime_avg"},
    {RecalMethod::RegimeStress, "regime_stress"},
}};

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

struct Columns {
  std::vector<double> y, roll_vol, garch_proxy, vix, drawdown, ewma;
  Matrix predictors;
};

Columns extract(const FeaturePanel& panel) {
  Columns c;
  const std::size_t n = panel.size();
  c.y.resize(n);
  c.roll_vol.resize(n);
  c.garch_proxy.resize(n);
  c.vix.resize(n);
  c.drawdown.resize(n);
  c.ewma.resize(n);
  c.predictors.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(kNumPredictors));
  for (std::size_t i = 0; i < n; ++i) {
    const auto& r = panel.rows[i];
    c.y[i] = r.y;
    c.roll_vol[i] = r.roll_vol_20;
    c.garch_proxy[i] = r.garch_vol_proxy;
    c.vix[i] = r.vix_daily;
    c.drawdown[i] = r.drawdown_60;
    c.ewma[i] = r.ewma_vol_20;
    const auto p = r.predictors();
    for (std::size_t j = 0; j < kNumPredictors; ++j) {
      c.predictors(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = p[j];
    }
  }
  return c;
}

template <typename T>
std::span<const T> slice(const std::vector<T>& v, std::size_t first, std::size_t count) {
  return std::span<const T>(v).subspan(first, count);
}

// Everything frozen for one origin that does not depend on the baseline.
struct OriginState {
  std::size_t train_first = 0;
  std::size_t span_first = 0;  // first fit row
  std::vector<Regime> regimes;             // over the span
  std::vector<std::uint8_t> strict;        // over the span
  state::SelectionStress selection;        // over the eval block
  std::vector<double> v_clean, v_under;    // over the span
};

OriginState freeze_state(const Columns& col, std::size_t test_row, const RunSpec& spec) {
  const auto& L = spec.layout;
  OriginState s;
  s.train_first = test_row - L.history();
  s.span_first = s.train_first + L.train;
  const auto train_idx = state::index_range(s.train_first, L.train);
  const auto span_idx = state::index_range(s.span_first, L.span());
  const auto eval_idx = state::index_range(s.span_first + L.fit, L.eval);

  s.regimes = state::regime_labels(col.vix, train_idx, span_idx);
  s.strict = state::strict_stress_flags(col.vix, col.drawdown, train_idx, span_idx);
  s.selection = state::selection_stress_flags(col.vix, train_idx, eval_idx, spec.selector.stress);
  const auto proxy = state::composite_proxy(col.roll_vol, col.garch_proxy, col.vix, train_idx, span_idx);
  s.v_clean.assign(proxy.v.data(), proxy.v.data() + proxy.v.size());
  const bool needs_under = std::find(spec.scenarios.begin(), spec.scenarios.end(), Scenario::Underreact) !=
                           spec.scenarios.end();
  if (needs_under) {
    const auto under = state::apply_underreaction(proxy, s.strict, spec.kappa);
    s.v_under.assign(under.v.data(), under.v.data() + under.v.size());
  }
  return s;
}

baseline::BaselineForecast forecast_baseline(Method method, const Columns& col, const OriginState& s,
                                             const RunSpec& spec, std::uint64_t seed) {
  const auto& L = spec.layout;
  const auto train = slice(col.y, s.train_first, L.train);
  const std::size_t horizon = L.span();
  switch (method) {
    case Method::HS:
      return baseline::hs_forecast(train, horizon, spec.alpha);
    case Method::FHS:
      return baseline::fhs_forecast(train, slice(col.ewma, s.train_first, L.train),
                                    slice(col.ewma, s.span_first, horizon), spec.alpha);
    case Method::GPQ:
      return baseline::gpq_forecast(train, slice(col.garch_proxy, s.train_first, L.train),
                                    slice(col.garch_proxy, s.span_first, horizon), spec.alpha);
    case Method::QR:
      return baseline::qr_forecast(
          col.predictors.middleRows(static_cast<Eigen::Index>(s.train_first), static_cast<Eigen::Index>(L.train)),
          train,
          col.predictors.middleRows(static_cast<Eigen::Index>(s.span_first), static_cast<Eigen::Index>(horizon)),
          spec.alpha);
    case Method::GARCH_T:
      return baseline::garch_t_forecast(train, horizon, spec.alpha);
    case Method::GJR_GARCH_T:
      return baseline::gjr_garch_t_forecast(train, horizon, spec.alpha);
    case Method::AS_CAVIAR:
      return baseline::as_caviar_forecast(train, slice(col.y, s.span_first, horizon), spec.alpha, seed,
                                          spec.caviar);
  }
  throw Error(ErrorKind::BadConfig, "unknown baseline");
}

struct Chosen {
  RecalRule rule = RecalRule::scalar(0.0);
  std::size_t feasible = 0;
  std::size_t stress_count = 0;
};

// Rule selection for one (origin, baseline, scenario) over every requested method.
class Selector {
 public:
  Selector(const RunSpec& spec, const OriginState& s, std::span<const double> y, std::span<const double> q,
           std::span<const double> v)
      : spec_(spec), s_(s) {
    const auto& L = spec.layout;
    fit_ = {y.subspan(0, L.fit), q.subspan(0, L.fit), v.subspan(0, L.fit),
            std::span<const Regime>(s.regimes).subspan(0, L.fit)};
    eval_ = {y.subspan(L.fit, L.eval), q.subspan(L.fit, L.eval), v.subspan(L.fit, L.eval),
             std::span<const Regime>(s.regimes).subspan(L.fit, L.eval)};
  }

  Chosen choose(RecalMethod m) {
    switch (m) {
      case RecalMethod::Base:
      case RecalMethod::Rho0:
        return {};
      case RecalMethod::Rho1:
        return {RecalRule::scalar(1.0), 0, 0};
      case RecalMethod::GlobalAvg: {
        const auto& c = scalar_candidates();
        const auto sel = select::select_global_avg(c);
        return {sel.rule, sel.feasible_count, s_.selection.audit.count};
      }
      case RecalMethod::GlobalStress: {
        const auto& c = scalar_candidates();
        const auto sel = select::select_global_stress(c, spec_.selector);
        return {sel.rule, sel.feasible_count, s_.selection.audit.count};
      }
      case RecalMethod::RegimeAvg: {
        const auto c = tuple_candidates({});
        const auto sel = select::select_regime(c, select::RegimeMode::Average, spec_.selector);
        return {sel.rule, sel.feasible_count, 0};
      }
      case RecalMethod::RegimeStress: {
        std::vector<std::uint8_t> high(eval_.size());
        std::size_t count = 0;
        for (std::size_t i = 0; i < eval_.size(); ++i) {
          high[i] = eval_.g[i] == Regime::High ? 1 : 0;
          count += high[i];
        }
        if (count == 0) {
          high = s_.selection.flags;
          count = static_cast<std::size_t>(std::count(high.begin(), high.end(), std::uint8_t{1}));
        }
        const auto c = tuple_candidates(high);
        const auto sel = select::select_regime(c, select::RegimeMode::Stress, spec_.selector);
        return {sel.rule, sel.feasible_count, count};
      }
    }
    return {};
  }

  const select::Block& fit_block() const { return fit_; }

 private:
  const std::vector<select::CandidateEvaluation>& scalar_candidates() {
    if (scalar_.empty()) {
      for (double rho : spec_.selector.rho_grid) {
        scalar_.push_back(select::evaluate_candidate(RecalRule::scalar(rho), fit_, eval_, s_.selection.flags,
                                                     spec_.alpha));
      }
    }
    return scalar_;
  }

  std::vector<select::CandidateEvaluation> tuple_candidates(std::span<const std::uint8_t> flags) const {
    std::vector<select::CandidateEvaluation> out;
    for (const auto& rule : select::enumerate_monotone_tuples(spec_.selector.tuple_grid)) {
      out.push_back(select::evaluate_candidate(rule, fit_, eval_, flags, spec_.alpha));
    }
    return out;
  }

  const RunSpec& spec_;
  const OriginState& s_;
  select::Block fit_;
  select::Block eval_;
  std::vector<select::CandidateEvaluation> scalar_;
};

// Records for one origin, ordered by (baseline, method, scenario) as in the spec.
std::vector<ForecastRecord> run_origin(const FeaturePanel& panel, const Columns& col, std::size_t test_row,
                                       const RunSpec& spec) {
  const auto& L = spec.layout;
  const OriginState s = freeze_state(col, test_row, spec);
  const std::size_t horizon = L.span();
  const std::size_t calib_off = L.select();
  const std::size_t test_off = horizon - 1;
  const auto& row = panel.rows[test_row];
  const auto y_span = slice(col.y, s.span_first, horizon);
  const std::uint64_t seed = origin_seed(spec.seed, panel.asset_id, row.date);

  std::vector<ForecastRecord> out;
  out.reserve(spec.baselines.size() * spec.methods.size() * spec.scenarios.size());
  for (Method b : spec.baselines) {
    const auto base = forecast_baseline(b, col, s, spec, seed);
    const std::span<const double> q(base.q.data(), static_cast<std::size_t>(base.q.size()));
    for (Scenario sc : spec.scenarios) {
      const std::span<const double> v = sc == Scenario::Clean ? s.v_clean : s.v_under;
      Selector selector(spec, s, y_span, q, v);
      std::vector<ForecastRecord> per_method;
      for (RecalMethod m : spec.methods) {
        ForecastRecord r;
        r.asset = panel.asset_id;
        r.date = row.date;
        r.y = row.y;
        r.baseline_q = q[test_off];
        r.method = m;
        r.baseline = b;
        r.scenario = sc;
        r.v = v[test_off];
        r.regime = s.regimes[test_off];
        r.strict_stress = s.strict[test_off];
        r.row = test_row;
        r.baseline_fallback = base.diagnostics.fallback;
        r.stress_percentile = s.selection.audit.percentile;
        if (m == RecalMethod::Base) {
          r.adjusted_q = r.baseline_q;
        } else {
          const Chosen chosen = selector.choose(m);
          const auto& rule = chosen.rule;
          const std::span<const Regime> g_calib(s.regimes.data() + calib_off, L.calib);
          const Eigen::Map<const Vector> yc(y_span.data() + calib_off, static_cast<Eigen::Index>(L.calib));
          const Eigen::Map<const Vector> qc(q.data() + calib_off, static_cast<Eigen::Index>(L.calib));
          const Eigen::Map<const Vector> vc(v.data() + calib_off, static_cast<Eigen::Index>(L.calib));
          const auto cal = recal::calibrate(rule, yc, qc, vc, spec.alpha,
                                            rule.is_tuple() ? g_calib : std::span<const Regime>{});
          const std::optional<Regime> g =
              rule.is_tuple() ? std::optional<Regime>(r.regime) : std::nullopt;
          r.rho_low = rule.rho_low();
          r.rho_mid = rule.rho_mid();
          r.rho_high = rule.rho_high();
          r.rho_eff = rule.exponent(g);
          r.c = cal.c;
          r.adjusted_q = recal::apply(cal, r.baseline_q, r.v, g);
          r.feasible_count = chosen.feasible;
          r.stress_count = chosen.stress_count;
        }
        r.shift = r.adjusted_q - r.baseline_q;
        r.hit = r.y <= r.adjusted_q ? 1 : 0;
        per_method.push_back(std::move(r));
      }
      for (auto& r : per_method) out.push_back(std::move(r));
    }
  }
  // Reorder from (baseline, scenario, method) to (baseline, method, scenario).
  std::vector<ForecastRecord> ordered;
  ordered.reserve(out.size());
  const std::size_t nm = spec.methods.size();
  const std::size_t ns = spec.scenarios.size();
  for (std::size_t b = 0; b < spec.baselines.size(); ++b) {
    for (std::size_t m = 0; m < nm; ++m) {
      for (std::size_t sc = 0; sc < ns; ++sc) ordered.push_back(std::move(out[(b * ns + sc) * nm + m]));
    }
  }
  return ordered;
}

template <typename T>
void check_nonempty(const std::vector<T>& v, const char* what) {
  if (v.empty()) throw Error(ErrorKind::BadConfig, std::string("run spec has no ") + what);
}

}  // namespace

void WindowLayout::validate() const {
  if (train == 0 || fit == 0 || eval == 0 || calib == 0 || test != 1) {
    throw Error(ErrorKind::BadConfig, "window layout needs positive blocks and a single test row");
  }
}

std::vector<std::size_t> plan_origins(std::size_t panel_len, const WindowLayout& layout) {
  layout.validate();
  std::vector<std::size_t> out;
  for (std::size_t t = layout.history(); t < panel_len; ++t) out.push_back(t);
  return out;
}

std::string_view to_string(RecalMethod m) {
  for (const auto& [k, name] : kMethodNames) {
    if (k == m) return name;
  }
  return "?";
}

std::string_view to_string(Scenario s) { return s == Scenario::Clean ? "clean" : "underreact"; }

RecalMethod parse_recal_method(std::string_view name) {
  for (const auto& [k, n] : kMethodNames) {
    if (n == name) return k;
  }
  throw Error(ErrorKind::BadConfig, "unknown method: " + std::string(name));
}

Scenario parse_scenario(std::string_view name) {
  if (name == "clean") return Scenario::Clean;
  if (name == "underreact") return Scenario::Underreact;
  throw Error(ErrorKind::BadConfig, "unknown scenario: " + std::string(name));
}

const std::vector<RecalMethod>& all_recal_methods() {
  static const std::vector<RecalMethod> methods = [] {
    std::vector<RecalMethod> out;
    for (const auto& entry : kMethodNames) out.push_back(entry.first);
    return out;
  }();
  return methods;
}

std::string CellKey::label() const {
  std::string out = asset;
  out += '/';
  out += baseline::to_string(baseline);
  out += '/';
  out += to_string(method);
  out += '/';
  out += to_string(scenario);
  return out;
}

std::uint64_t origin_seed(std::uint64_t seed, std::string_view asset, Date date) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (unsigned char ch : asset) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  const auto days = static_cast<std::uint64_t>(std::chrono::sys_days(date).time_since_epoch().count());
  return splitmix(splitmix(seed ^ h) ^ days);
}

std::vector<Cell> run_backtest(const FeaturePanel& panel, const RunSpec& spec) {
  spec.layout.validate();
  check_nonempty(spec.baselines, "baselines");
  check_nonempty(spec.methods, "methods");
  check_nonempty(spec.scenarios, "scenarios");
  if (!(spec.alpha > 0.0 && spec.alpha < 0.5)) throw Error(ErrorKind::BadConfig, "alpha must lie in (0, 0.5)");
  if (!(spec.kappa > 0.0 && spec.kappa < 1.0)) throw Error(ErrorKind::BadKappa, "kappa must lie in (0,1)");

  const auto origins = plan_origins(panel.size(), spec.layout);
  if (origins.empty()) throw Error(ErrorKind::TooShort, "panel too short for a single origin");
  const Columns col = extract(panel);

  std::vector<std::vector<ForecastRecord>> per_origin(origins.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    for (std::size_t i = next++; i < origins.size(); i = next++) {
      try {
        per_origin[i] = run_origin(panel, col, origins[i], spec);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = origins.size();
      }
    }
  };
  const unsigned workers = std::max(1u, std::min<unsigned>(spec.workers, static_cast<unsigned>(origins.size())));
  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  if (failure) std::rethrow_exception(failure);

  std::vector<Cell> cells;
  for (Method b : spec.baselines) {
    for (RecalMethod m : spec.methods) {
      for (Scenario sc : spec.scenarios) {
        Cell cell;
        cell.key = {panel.asset_id, b, m, sc};
        cell.records.reserve(origins.size());
        cells.push_back(std::move(cell));
      }
    }
  }
  for (auto& recs : per_origin) {
    for (std::size_t k = 0; k < recs.size(); ++k) cells[k].records.push_back(std::move(recs[k]));
  }
  return cells;
}

std::vector<ForecastRecord> pool_records(const std::vector<std::vector<ForecastRecord>>& streams) {
  std::vector<ForecastRecord> out;
  for (const auto& s : streams) out.insert(out.end(), s.begin(), s.end());
  std::stable_sort(out.begin(), out.end(), [](const ForecastRecord& a, const ForecastRecord& b) {
    if (a.date != b.date) return a.date < b.date;
    return a.asset < b.asset;
  });
  return out;
}

}  // namespace rhocal::engine
