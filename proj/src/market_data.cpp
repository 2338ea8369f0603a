#include "rhocal/market_data.hpp"

#include "rhocal/state_model.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

namespace rhocal {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

double parse_number(std::string_view field, std::size_t line_no) {
  double value = 0.0;
  const auto* end = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(field.data(), end, value);
  if (ec != std::errc{} || ptr != end || !std::isfinite(value)) {
    throw Error(ErrorKind::MalformedRow,
                "line " + std::to_string(line_no) + ": bad number '" + std::string(field) + "'");
  }
  return value;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IngestError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Splits CSV text into a header->column map and data lines (with 1-based line numbers).
struct CsvTable {
  std::map<std::string, std::size_t, std::less<>> columns;
  std::vector<std::pair<std::size_t, std::vector<std::string_view>>> rows;
};

CsvTable split_table(std::string_view text) {
  CsvTable table;
  std::size_t line_no = 0;
  bool header = true;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    const auto line = trim(text.substr(0, nl));
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (line.empty()) continue;
    auto fields = split(line);
    if (header) {
      for (std::size_t i = 0; i < fields.size(); ++i) table.columns.emplace(std::string(fields[i]), i);
      header = false;
      continue;
    }
    table.rows.emplace_back(line_no, std::move(fields));
  }
  return table;
}

std::size_t require_column(const CsvTable& table, std::string_view name) {
  const auto it = table.columns.find(name);
  if (it == table.columns.end()) {
    throw Error(ErrorKind::MalformedRow, "missing column '" + std::string(name) + "'");
  }
  return it->second;
}

std::string_view field_at(const std::vector<std::string_view>& fields, std::size_t col,
                          std::size_t line_no) {
  if (col >= fields.size()) {
    throw Error(ErrorKind::MalformedRow, "line " + std::to_string(line_no) + ": too few fields");
  }
  return fields[col];
}

double sample_sd(const double* x, std::size_t n) {
  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) mean += x[i];
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) ss += (x[i] - mean) * (x[i] - mean);
  return std::sqrt(ss / static_cast<double>(n - 1));
}

}  // namespace

std::array<double, kNumPredictors> FeatureRow::predictors() const {
  return {r_lag0,      r_lag1,      r_lag2,    r_lag3,         r_lag5,
          roll_vol_20, ewma_vol_20, parkinson, garman_klass,   vix_daily,
          vix_pct_change, drawdown_60, log_volume, volume_z_20, garch_vol_proxy};
}

const std::array<std::string_view, kNumPredictors>& predictor_names() {
  static const std::array<std::string_view, kNumPredictors> names{
      "r_lag0",      "r_lag1",      "r_lag2",    "r_lag3",       "r_lag5",
      "roll_vol_20", "ewma_vol_20", "parkinson", "garman_klass", "vix_daily",
      "vix_pct_change", "drawdown_60", "log_volume", "volume_z_20", "garch_vol_proxy"};
  return names;
}

Vector FeaturePanel::column(double FeatureRow::*field) const {
  Vector out(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) out[static_cast<Eigen::Index>(i)] = rows[i].*field;
  return out;
}

FeaturePanel FeaturePanel::head(std::size_t n) const {
  FeaturePanel out{asset_id, {}};
  out.rows.assign(rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(std::min(n, rows.size())));
  return out;
}

AssetSeries parse_ohlcv_csv(std::string_view text, std::string asset_id) {
  const CsvTable table = split_table(text);
  const std::size_t c_date = require_column(table, "date");
  const std::size_t c_open = require_column(table, "open");
  const std::size_t c_high = require_column(table, "high");
  const std::size_t c_low = require_column(table, "low");
  const std::size_t c_close = require_column(table, "close");
  const std::size_t c_volume = require_column(table, "volume");
  const auto vix_it = table.columns.find("vix");
  const bool with_vix = vix_it != table.columns.end();

  struct Raw {
    Bar bar;
    double vix;
  };
  std::vector<Raw> raw;
  raw.reserve(table.rows.size());
  for (const auto& [line_no, f] : table.rows) {
    Raw r{};
    r.bar.date = parse_date(field_at(f, c_date, line_no));
    r.bar.open = parse_number(field_at(f, c_open, line_no), line_no);
    r.bar.high = parse_number(field_at(f, c_high, line_no), line_no);
    r.bar.low = parse_number(field_at(f, c_low, line_no), line_no);
    r.bar.close = parse_number(field_at(f, c_close, line_no), line_no);
    r.bar.volume = parse_number(field_at(f, c_volume, line_no), line_no);
    r.vix = with_vix ? parse_number(field_at(f, vix_it->second, line_no), line_no) : 0.0;
    if (r.bar.open <= 0.0 || r.bar.high <= 0.0 || r.bar.low <= 0.0 || r.bar.close <= 0.0 ||
        r.bar.volume < 0.0 || (with_vix && r.vix <= 0.0)) {
      throw Error(ErrorKind::MalformedRow,
                  "line " + std::to_string(line_no) + ": nonpositive price, vix or negative volume");
    }
    raw.push_back(r);
  }
  if (raw.empty()) throw Error(ErrorKind::EmptySeries, "no data rows");

  std::stable_sort(raw.begin(), raw.end(), [](const Raw& a, const Raw& b) {
    if (a.bar.date != b.bar.date) return a.bar.date < b.bar.date;
    return a.bar.volume < b.bar.volume;
  });

  AssetSeries out{std::move(asset_id), {}, {}};
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (i + 1 < raw.size() && raw[i + 1].bar.date == raw[i].bar.date) continue;  // keep last
    Bar b = raw[i].bar;
    if (b.high < b.low) {
      throw Error(ErrorKind::OhlcViolation, format_date(b.date) + ": high < low");
    }
    b.high = std::max({b.high, b.open, b.close});
    b.low = std::min({b.low, b.open, b.close});
    out.bars.push_back(b);
    if (with_vix) out.vix.push_back(raw[i].vix);
  }
  return out;
}

AssetSeries ingest_csv(const std::filesystem::path& path, std::string asset_id) {
  return parse_ohlcv_csv(read_file(path), std::move(asset_id));
}

std::string to_csv(const AssetSeries& series) {
  std::string out = series.has_vix() ? "date,open,high,low,close,volume,vix\n"
                                     : "date,open,high,low,close,volume\n";
  for (std::size_t i = 0; i < series.bars.size(); ++i) {
    const Bar& b = series.bars[i];
    out += format_date(b.date);
    for (double x : {b.open, b.high, b.low, b.close, b.volume}) {
      out += ',';
      out += format_double(x);
    }
    if (series.has_vix()) {
      out += ',';
      out += format_double(series.vix[i]);
    }
    out += '\n';
  }
  return out;
}

std::vector<VixPoint> parse_vix_csv(std::string_view text) {
  const CsvTable table = split_table(text);
  const std::size_t c_date = require_column(table, "date");
  const std::size_t c_vix = require_column(table, "vix");
  std::vector<VixPoint> out;
  out.reserve(table.rows.size());
  for (const auto& [line_no, f] : table.rows) {
    VixPoint p{parse_date(field_at(f, c_date, line_no)),
               parse_number(field_at(f, c_vix, line_no), line_no)};
    if (p.level <= 0.0) {
      throw Error(ErrorKind::MalformedRow, "line " + std::to_string(line_no) + ": vix <= 0");
    }
    out.push_back(p);
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const VixPoint& a, const VixPoint& b) { return a.date < b.date; });
  return out;
}

std::vector<VixPoint> read_vix_csv(const std::filesystem::path& path) {
  return parse_vix_csv(read_file(path));
}

AssetSeries merge_vix(const AssetSeries& series, const std::vector<VixPoint>& vix) {
  std::map<Date, double> by_date;
  for (const auto& p : vix) by_date[p.date] = p.level;  // last duplicate wins
  AssetSeries out{series.asset_id, {}, {}};
  for (const Bar& b : series.bars) {
    const auto it = by_date.find(b.date);
    if (it == by_date.end()) continue;
    out.bars.push_back(b);
    out.vix.push_back(it->second);
  }
  if (out.bars.empty()) {
    throw Error(ErrorKind::NoOverlap, series.asset_id + ": no common dates with VIX");
  }
  return out;
}

AssetSeries merge_vix(const AssetSeries& series, const std::filesystem::path& vix_csv) {
  return merge_vix(series, read_vix_csv(vix_csv));
}

std::vector<double> log_returns(const AssetSeries& series) {
  if (series.bars.size() < 2) throw Error(ErrorKind::TooShort, "log_returns needs >= 2 bars");
  std::vector<double> r(series.bars.size() - 1);
  for (std::size_t i = 1; i < series.bars.size(); ++i) {
    r[i - 1] = std::log(series.bars[i].close / series.bars[i - 1].close);
  }
  return r;
}

FeaturePanel build_features(const AssetSeries& series) {
  constexpr std::size_t kMinBars = 70;
  constexpr std::size_t kRollWindow = 20;
  constexpr std::size_t kDrawdownWindow = 60;
  constexpr double kEwmaSpan = 20.0;
  const std::size_t n = series.bars.size();
  if (n < kMinBars) throw Error(ErrorKind::TooShort, "build_features needs >= 70 bars");
  if (!series.has_vix()) throw Error(ErrorKind::BadConfig, series.asset_id + ": VIX not merged");

  const auto& bars = series.bars;
  // ret[t] is the return into bar t; ret[0] is unused.
  std::vector<double> ret(n, 0.0);
  for (std::size_t t = 1; t < n; ++t) ret[t] = std::log(bars[t].close / bars[t - 1].close);

  // EWMA of squared returns demeaned by their own EWMA, seeded at the first return.
  const double decay = 1.0 - 2.0 / (kEwmaSpan + 1.0);
  std::vector<double> ewma_vol(n, 0.0);
  {
    double mean = ret[1];
    double var = 0.0;
    ewma_vol[1] = 0.0;
    for (std::size_t t = 2; t < n; ++t) {
      mean = decay * mean + (1.0 - decay) * ret[t];
      const double dev = ret[t] - mean;
      var = decay * var + (1.0 - decay) * dev * dev;
      ewma_vol[t] = std::sqrt(var);
    }
  }

  std::vector<double> log_vol(n);
  for (std::size_t t = 0; t < n; ++t) {
    log_vol[t] = bars[t].volume > 0.0 ? std::log(bars[t].volume) : std::nan("");
  }

  const double ln2 = std::numbers::ln2;
  FeaturePanel panel{series.asset_id, {}};
  panel.rows.reserve(n);
  for (std::size_t t = kDrawdownWindow - 1; t + 1 < n; ++t) {
    FeatureRow row;
    row.date = bars[t].date;
    row.bar_index = t;
    row.y = ret[t + 1];
    row.r_lag0 = ret[t];
    row.r_lag1 = ret[t - 1];
    row.r_lag2 = ret[t - 2];
    row.r_lag3 = ret[t - 3];
    row.r_lag5 = ret[t - 5];
    row.roll_vol_20 = sample_sd(&ret[t + 1 - kRollWindow], kRollWindow);
    row.ewma_vol_20 = ewma_vol[t];

    const double hl = std::log(bars[t].high / bars[t].low);
    const double co = std::log(bars[t].close / bars[t].open);
    row.parkinson = std::sqrt(hl * hl / (4.0 * ln2));
    row.garman_klass = std::sqrt(std::max(0.0, 0.5 * hl * hl - (2.0 * ln2 - 1.0) * co * co));

    row.vix_daily = state::vix_to_daily(series.vix[t]);
    row.vix_pct_change = series.vix[t] / series.vix[t - 1] - 1.0;

    double peak = 0.0;
    for (std::size_t j = 0; j < kDrawdownWindow; ++j) peak = std::max(peak, bars[t - j].close);
    row.drawdown_60 = bars[t].close / peak - 1.0;

    row.log_volume = log_vol[t];
    const double* lv = &log_vol[t + 1 - kRollWindow];
    double lv_mean = 0.0;
    for (std::size_t j = 0; j < kRollWindow; ++j) lv_mean += lv[j];
    lv_mean /= static_cast<double>(kRollWindow);
    const double lv_sd = sample_sd(lv, kRollWindow);
    // A rounding-level sd means the window is flat.
    const bool flat = !(lv_sd > 1e-12 * std::max(1.0, std::abs(lv_mean)));
    row.volume_z_20 = flat ? 0.0 : (log_vol[t] - lv_mean) / lv_sd;

    const bool complete = std::isfinite(row.y) && std::isfinite(row.log_volume) &&
                          std::isfinite(lv_mean) && std::isfinite(row.volume_z_20) &&
                          std::isfinite(row.roll_vol_20) && std::isfinite(row.vix_pct_change);
    if (!complete) continue;
    panel.rows.push_back(row);
  }
  return panel;
}

}  // namespace rhocal
