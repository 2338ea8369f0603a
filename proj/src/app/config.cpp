#include "rhocal/app/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace rhocal::app {

namespace {

using nlohmann::json;

[[noreturn]] void bad(const std::string& msg) { throw Error(ErrorKind::BadConfig, msg); }

// Reads keys from one JSON object and rejects whatever was not consumed.
class Reader {
 public:
  Reader(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) bad(where() + " must be an object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    const auto it = obj_.find(key);
    if (it == obj_.end()) return;
    used_.insert(key);
    try {
      out = it->template get<T>();
    } catch (const json::exception&) {
      bad(where(key) + " has the wrong type");
    }
  }

  void get_path(const char* key, std::filesystem::path& out, const std::filesystem::path& base) {
    std::string raw;
    if (!has(key)) return;
    get(key, raw);
    out = std::filesystem::path(raw).is_relative() && !base.empty() ? base / raw : std::filesystem::path(raw);
  }

  const json* child(const char* key) {
    const auto it = obj_.find(key);
    if (it == obj_.end()) return nullptr;
    used_.insert(key);
    return &*it;
  }

  bool has(const char* key) const { return obj_.contains(key); }

  std::string where(const std::string& key = {}) const {
    if (key.empty()) return path_.empty() ? "config" : path_;
    return path_.empty() ? key : path_ + "." + key;
  }

  void finish() const {
    for (const auto& [key, value] : obj_.items()) {
      if (!used_.contains(key)) bad("unknown key " + where(key));
    }
  }

 private:
  const json& obj_;
  std::string path_;
  std::set<std::string> used_;
};

SynthConfig parse_synth(const json& j, std::optional<std::uint64_t>& seed) {
  SynthConfig c;
  Reader r(j, "data.synth");
  r.get("assets", c.asset_ids);
  r.get("length", c.length);
  if (r.has("start")) {
    std::string start;
    r.get("start", start);
    try {
      c.start = parse_date(start);
    } catch (const Error&) {
      bad("data.synth.start is not an ISO date");
    }
  }
  r.get("regime_vols", c.regime_vols);
  r.get("regime_drifts", c.regime_drifts);
  r.get("transition", c.transition);
  r.get("student_dof", c.student_dof);
  r.get("asset_vol_scale", c.asset_vol_scale);
  r.get("common_factor_weight", c.common_factor_weight);
  r.get("vix_bias", c.vix_bias);
  r.get("vix_noise", c.vix_noise);
  r.get("volume_base", c.volume_base);
  r.get("volume_noise", c.volume_noise);
  r.get("volume_vol_elasticity", c.volume_vol_elasticity);
  r.get("intraday_range", c.intraday_range);
  r.get("start_price", c.start_price);
  if (r.has("seed")) {
    std::uint64_t s = 0;
    r.get("seed", s);
    seed = s;
  }
  r.finish();
  return c;
}

DataSource parse_data(const json& j, const std::filesystem::path& base) {
  DataSource d;
  Reader r(j, "data");
  std::string kind = "synth";
  r.get("source", kind);
  if (kind == "synth") {
    d.kind = SourceKind::Synth;
  } else if (kind == "csv") {
    d.kind = SourceKind::Csv;
  } else if (kind == "remote") {
    d.kind = SourceKind::Remote;
  } else {
    bad("data.source must be synth, csv or remote");
  }
  if (const json* s = r.child("synth")) d.synth = parse_synth(*s, d.synth_seed);
  if (const json* c = r.child("csv")) {
    Reader cr(*c, "data.csv");
    if (const json* assets = cr.child("assets")) {
      if (!assets->is_array()) bad("data.csv.assets must be an array");
      for (const auto& a : *assets) {
        Reader ar(a, "data.csv.assets[]");
        CsvAsset asset;
        ar.get("id", asset.id);
        ar.get_path("path", asset.path, base);
        ar.finish();
        if (asset.id.empty() || asset.path.empty()) bad("data.csv.assets entries need id and path");
        d.csv_assets.push_back(std::move(asset));
      }
    }
    cr.get_path("vix", d.vix_path, base);
    cr.finish();
  }
  if (const json* rm = r.child("remote")) {
    Reader rr(*rm, "data.remote");
    rr.get("url_template", d.remote.url_template);
    rr.get("vix_url", d.remote.vix_url);
    rr.get_path("cache_dir", d.remote.cache_dir, base);
    rr.get("timeout_seconds", d.remote.timeout_seconds);
    rr.get("assets", d.remote_assets);
    rr.finish();
  }
  r.finish();

  if (d.kind == SourceKind::Csv && (d.csv_assets.empty() || d.vix_path.empty())) {
    bad("csv source needs data.csv.assets and data.csv.vix");
  }
  if (d.kind == SourceKind::Remote) {
    if (d.remote.url_template.find("{symbol}") == std::string::npos &&
        d.remote.url_template.find("{asset}") == std::string::npos) {
      bad("data.remote.url_template must contain {symbol}");
    }
    if (d.remote.vix_url.empty() || d.remote_assets.empty()) bad("remote source needs vix_url and assets");
  }
  return d;
}

template <typename T, typename Parse>
std::vector<T> parse_names(Reader& r, const char* key, std::vector<T> fallback, Parse parse) {
  if (!r.has(key)) return fallback;
  std::vector<std::string> names;
  r.get(key, names);
  std::vector<T> out;
  for (const auto& n : names) {
    const T v = parse(n);
    if (std::find(out.begin(), out.end(), v) == out.end()) out.push_back(v);
  }
  if (out.empty()) bad(std::string(key) + " must not be empty");
  return out;
}

}  // namespace

RunConfig parse_config(const json& doc, const std::filesystem::path& base_dir) {
  RunConfig c;
  auto& spec = c.spec;
  Reader r(doc, "");
  if (const json* d = r.child("data")) c.data = parse_data(*d, base_dir);
  r.get("alpha", spec.alpha);
  r.get("kappa", spec.kappa);
  r.get("seed", spec.seed);
  r.get("garch_lookback", c.garch_lookback);
  r.get_path("out", c.out, base_dir);
  spec.baselines = parse_names(r, "baselines", spec.baselines, baseline::parse_method);
  spec.methods = parse_names(r, "methods", spec.methods, engine::parse_recal_method);
  spec.scenarios = parse_names(r, "scenarios", spec.scenarios, engine::parse_scenario);

  if (const json* l = r.child("layout")) {
    Reader lr(*l, "layout");
    lr.get("train", spec.layout.train);
    lr.get("fit", spec.layout.fit);
    lr.get("eval", spec.layout.eval);
    lr.get("calib", spec.layout.calib);
    lr.finish();
  }
  auto& sel = spec.selector;
  if (const json* s = r.child("selector")) {
    Reader sr(*s, "selector");
    sr.get("rho_grid", sel.rho_grid);
    sr.get("tuple_grid", sel.tuple_grid);
    sr.get("tau_stress", sel.tau_stress);
    sr.get("tau_overall", sel.tau_overall);
    sr.get("w_pinball", sel.w_pinball);
    sr.get("w_capital", sel.w_capital);
    sr.get("penalty", sel.penalty);
    sr.get("lambda_smooth", sel.lambda_smooth);
    if (const json* st = sr.child("stress")) {
      Reader tr(*st, "selector.stress");
      tr.get("start_percentile", sel.stress.start_percentile);
      tr.get("step", sel.stress.step);
      tr.get("floor_percentile", sel.stress.floor_percentile);
      tr.get("min_count", sel.stress.min_count);
      tr.finish();
    }
    sr.finish();
  }
  if (const json* cv = r.child("caviar")) {
    Reader cr(*cv, "caviar");
    cr.get("starts", spec.caviar.starts);
    cr.get("max_iterations", spec.caviar.max_iterations);
    cr.finish();
  }
  r.finish();

  // Value checks.
  if (!(spec.alpha > 0.0 && spec.alpha < 0.5)) bad("alpha must lie in (0, 0.5)");
  if (!(spec.kappa > 0.0 && spec.kappa < 1.0)) bad("kappa must lie in (0, 1)");
  spec.layout.validate();
  if (c.garch_lookback < 10) bad("garch_lookback must be at least 10");
  sel.alpha = spec.alpha;
  for (const auto* grid : {&sel.rho_grid, &sel.tuple_grid}) {
    if (grid->empty()) bad("selector grids must not be empty");
    for (double rho : *grid) {
      if (!(rho >= 0.0 && rho <= 1.0)) bad("selector grid values must lie in [0, 1]");
    }
    if (!std::is_sorted(grid->begin(), grid->end())) bad("selector grids must be sorted ascending");
  }
  if (sel.tau_stress < 0.0 || sel.tau_overall < 0.0) bad("selector tolerances must be nonnegative");
  if (sel.stress.step <= 0.0 || sel.stress.floor_percentile > sel.stress.start_percentile) {
    bad("selector.stress relaxation must step down from start to floor");
  }
  if (spec.caviar.starts < 1 || spec.caviar.max_iterations < 1) bad("caviar starts and iterations must be >= 1");
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) bad("cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  json doc;
  try {
    doc = json::parse(ss.str());
  } catch (const json::parse_error& e) {
    bad("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return parse_config(doc, path.parent_path());
}

json to_json(const RunConfig& c) {
  const auto& s = c.spec;
  json j;
  json data;
  switch (c.data.kind) {
    case SourceKind::Synth: data["source"] = "synth"; break;
    case SourceKind::Csv: data["source"] = "csv"; break;
    case SourceKind::Remote: data["source"] = "remote"; break;
  }
  const auto& y = c.data.synth;
  json synth{{"assets", y.asset_ids},
             {"length", y.length},
             {"start", format_date(y.start)},
             {"regime_vols", y.regime_vols},
             {"regime_drifts", y.regime_drifts},
             {"transition", y.transition},
             {"student_dof", y.student_dof},
             {"asset_vol_scale", y.asset_vol_scale},
             {"common_factor_weight", y.common_factor_weight},
             {"vix_bias", y.vix_bias},
             {"vix_noise", y.vix_noise},
             {"volume_base", y.volume_base},
             {"volume_noise", y.volume_noise},
             {"volume_vol_elasticity", y.volume_vol_elasticity},
             {"intraday_range", y.intraday_range},
             {"start_price", y.start_price}};
  if (c.data.synth_seed) synth["seed"] = *c.data.synth_seed;
  data["synth"] = synth;
  json assets = json::array();
  for (const auto& a : c.data.csv_assets) assets.push_back({{"id", a.id}, {"path", a.path.string()}});
  data["csv"] = {{"assets", assets}, {"vix", c.data.vix_path.string()}};
  data["remote"] = {{"url_template", c.data.remote.url_template},
                    {"vix_url", c.data.remote.vix_url},
                    {"cache_dir", c.data.remote.cache_dir.string()},
                    {"timeout_seconds", c.data.remote.timeout_seconds},
                    {"assets", c.data.remote_assets}};
  j["data"] = data;
  j["alpha"] = s.alpha;
  j["kappa"] = s.kappa;
  j["seed"] = s.seed;
  j["garch_lookback"] = c.garch_lookback;
  j["out"] = c.out.string();
  auto names = [](const auto& items) {
    json arr = json::array();
    for (const auto& v : items) arr.push_back(std::string(to_string(v)));
    return arr;
  };
  j["baselines"] = names(s.baselines);
  j["methods"] = names(s.methods);
  j["scenarios"] = names(s.scenarios);
  j["layout"] = {{"train", s.layout.train}, {"fit", s.layout.fit}, {"eval", s.layout.eval}, {"calib", s.layout.calib}};
  const auto& sel = s.selector;
  j["selector"] = {{"rho_grid", sel.rho_grid},
                   {"tuple_grid", sel.tuple_grid},
                   {"tau_stress", sel.tau_stress},
                   {"tau_overall", sel.tau_overall},
                   {"w_pinball", sel.w_pinball},
                   {"w_capital", sel.w_capital},
                   {"penalty", sel.penalty},
                   {"lambda_smooth", sel.lambda_smooth},
                   {"stress",
                    {{"start_percentile", sel.stress.start_percentile},
                     {"step", sel.stress.step},
                     {"floor_percentile", sel.stress.floor_percentile},
                     {"min_count", sel.stress.min_count}}}};
  j["caviar"] = {{"starts", s.caviar.starts}, {"max_iterations", s.caviar.max_iterations}};
  return j;
}

json default_config_json() { return to_json(parse_config(json::object())); }

}  // namespace rhocal::app
