#include "rhocal/app/commands.hpp"

#include "rhocal/app/fetch.hpp"
#include "rhocal/app/io.hpp"
#include "rhocal/state_model.hpp"

#include <CLI11.hpp>
#include <fnmatch.h>

#include <algorithm>
#include <atomic>
#include <map>
#include <ostream>
#include <set>
#include <thread>

#ifndef RHOCAL_VERSION
#define RHOCAL_VERSION "dev"
#endif

namespace rhocal::app {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr int kSchemaVersion = 1;

bool glob_match(const std::string& pattern, const std::string& text) {
  return ::fnmatch(pattern.c_str(), text.c_str(), 0) == 0;
}

json manifest_header(const std::string& command) {
  return {{"schema_version", kSchemaVersion}, {"tool", "rhocal"}, {"version", RHOCAL_VERSION}, {"command", command}};
}

std::vector<AssetSeries> load_remote(const RunConfig& config) {
  const auto& rm = config.data.remote;
  std::vector<std::pair<std::string, std::string>> bodies;
  for (const auto& asset : config.data.remote_assets) {
    bodies.emplace_back(asset, http_get(expand_url(rm.url_template, asset), rm.timeout_seconds));
  }
  const std::string vix_body = http_get(rm.vix_url, rm.timeout_seconds);

  // Parse everything before caching so malformed payloads leave no trace either.
  const auto vix = parse_vix_csv(vix_body);
  std::vector<AssetSeries> out;
  for (const auto& [asset, body] : bodies) out.push_back(merge_vix(parse_ohlcv_csv(body, asset), vix));
  for (const auto& [asset, body] : bodies) write_if_changed(rm.cache_dir / (asset + ".csv"), body);
  write_if_changed(rm.cache_dir / "VIX.csv", vix_body);
  return out;
}

template <typename F>
void parallel_for(std::size_t n, unsigned workers, F&& body) {
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex m;
  auto work = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(m);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const unsigned k = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(n)));
  if (k == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < k; ++w) pool.emplace_back(work);
  }
  if (failure) std::rethrow_exception(failure);
}

bool is_selector(engine::RecalMethod m) {
  return m != engine::RecalMethod::Base && m != engine::RecalMethod::Rho0 && m != engine::RecalMethod::Rho1;
}

json cell_audit(const engine::Cell& cell) {
  std::size_t fallbacks = 0;
  for (const auto& r : cell.records) fallbacks += r.baseline_fallback ? 1 : 0;
  json audit{{"baseline_fallbacks", fallbacks}};
  if (is_selector(cell.key.method) && !cell.records.empty()) {
    double feasible = 0.0, stress = 0.0, pct = 0.0;
    std::size_t none_feasible = 0;
    for (const auto& r : cell.records) {
      feasible += static_cast<double>(r.feasible_count);
      stress += static_cast<double>(r.stress_count);
      pct += r.stress_percentile;
      none_feasible += r.feasible_count == 0 ? 1 : 0;
    }
    const auto n = static_cast<double>(cell.records.size());
    audit["selector"] = {{"mean_feasible_count", feasible / n},
                         {"origins_without_feasible", none_feasible},
                         {"mean_stress_count", stress / n},
                         {"mean_stress_percentile", pct / n}};
  }
  return audit;
}

json read_json_file(const fs::path& path) {
  try {
    return json::parse(read_file(path));
  } catch (const json::parse_error&) {
    throw Error(ErrorKind::MissingRun, path.string() + " is not valid JSON");
  }
}

// Manifest-listed files of a run, verified against their checksums.
std::map<std::string, fs::path> verified_files(const fs::path& run_dir) {
  const fs::path manifest = run_dir / "manifest.json";
  if (!fs::is_regular_file(manifest)) throw Error(ErrorKind::MissingRun, "no manifest.json in " + run_dir.string());
  const json m = read_json_file(manifest);
  std::map<std::string, fs::path> out;
  for (const auto& entry : m.value("files", json::array())) {
    const std::string rel = entry.at("path").get<std::string>();
    const fs::path p = run_dir / rel;
    if (!fs::is_regular_file(p)) throw Error(ErrorKind::MissingRun, "manifest lists missing file " + rel);
    if (sha256_hex(read_file(p)) != entry.at("sha256").get<std::string>()) {
      throw Error(ErrorKind::MissingRun, "checksum mismatch for " + rel);
    }
    out.emplace(rel, p);
  }
  return out;
}

void register_in_manifest(const fs::path& dir, const std::string& command, const std::vector<fs::path>& files) {
  const fs::path path = dir / "manifest.json";
  json m = fs::is_regular_file(path) ? read_json_file(path) : manifest_header(command);
  json listed = json::array();
  std::set<std::string> replaced;
  for (const auto& f : files) replaced.insert(fs::relative(f, dir).generic_string());
  for (const auto& e : m.value("files", json::array())) {
    if (!replaced.contains(e.at("path").get<std::string>())) listed.push_back(e);
  }
  for (const auto& f : files) listed.push_back(file_entry(dir, f));
  m["files"] = listed;
  atomic_write(path, dump(m));
}

std::string fmt(const json& v) {
  if (v.is_null()) return "";
  if (v.is_number_float()) return format_double(v.get<double>());
  return v.dump();
}

std::string fixed4(const json& v) {
  if (v.is_null()) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v.get<double>());
  return buf;
}

}  // namespace

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::BadConfig:
    case ErrorKind::Usage:
    case ErrorKind::BadKappa:
    case ErrorKind::EmptyGrid:
      return kExitUsage;
    default:
      return kExitData;
  }
}

std::vector<AssetSeries> load_panels(const RunConfig& config) {
  const auto& d = config.data;
  switch (d.kind) {
    case SourceKind::Synth: {
      // The configured length counts usable feature rows, so the warm-up is generated on top.
      SynthConfig synth = d.synth;
      synth.length += static_cast<int>(kWarmupBars);
      return synth_generate(synth, d.synth_seed.value_or(config.spec.seed)).assets;
    }
    case SourceKind::Csv: {
      const auto vix = read_vix_csv(d.vix_path);
      std::vector<AssetSeries> out;
      for (const auto& a : d.csv_assets) out.push_back(merge_vix(ingest_csv(a.path, a.id), vix));
      return out;
    }
    case SourceKind::Remote:
      return load_remote(config);
  }
  return {};
}

int cmd_ingest(const RunConfig& config, const fs::path& out, std::ostream& log) {
  const auto panels = load_panels(config);
  json checksums = json::object();
  std::size_t written = 0;
  for (const auto& series : panels) {
    const std::string csv = to_csv(series);
    const fs::path path = out / "panels" / (series.asset_id + ".csv");
    if (write_if_changed(path, csv)) ++written;
    checksums[series.asset_id] = {{"file", series.asset_id + ".csv"}, {"sha256", sha256_hex(csv)},
                                  {"rows", series.bars.size()}};
  }
  if (write_if_changed(out / "panels" / "checksums.json", dump(checksums))) ++written;
  log << "ingest: " << panels.size() << " asset(s), " << written << " file(s) written, "
      << (written == 0 ? "cache up to date" : "cache updated") << "\n";
  return kExitOk;
}

int cmd_backtest(const RunConfig& config, const BacktestOptions& options, std::ostream& log) {
  const auto panels = load_panels(config);
  const auto& spec = config.spec;

  // Which (baseline, method, scenario) triples survive the cell filter, per asset.
  struct Job {
    const AssetSeries* series;
    engine::RunSpec spec;
    std::vector<engine::Cell> cells;
    std::string error;
  };
  std::vector<Job> jobs;
  for (const auto& series : panels) {
    Job job{&series, spec, {}, {}};
    std::vector<baseline::Method> bs;
    std::vector<engine::RecalMethod> ms;
    std::vector<engine::Scenario> ss;
    for (auto b : spec.baselines) {
      for (auto m : spec.methods) {
        for (auto s : spec.scenarios) {
          if (!glob_match(options.cells, engine::CellKey{series.asset_id, b, m, s}.label())) continue;
          if (std::find(bs.begin(), bs.end(), b) == bs.end()) bs.push_back(b);
          if (std::find(ms.begin(), ms.end(), m) == ms.end()) ms.push_back(m);
          if (std::find(ss.begin(), ss.end(), s) == ss.end()) ss.push_back(s);
        }
      }
    }
    if (bs.empty()) continue;
    job.spec.baselines = bs;
    job.spec.methods = ms;
    job.spec.scenarios = ss;
    jobs.push_back(std::move(job));
  }
  if (jobs.empty()) throw Error(ErrorKind::Usage, "cell filter '" + options.cells + "' matches nothing");

  // Features and the GARCH-style proxy are per asset; assets run in parallel.
  std::vector<FeaturePanel> features(jobs.size());
  parallel_for(jobs.size(), options.workers, [&](std::size_t i) {
    try {
      features[i] = state::attach_garch_proxy(build_features(*jobs[i].series), *jobs[i].series, config.garch_lookback);
    } catch (const Error& e) {
      jobs[i].error = e.what();
    }
  });
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    if (!jobs[i].error.empty()) continue;
    auto run_spec = jobs[i].spec;
    run_spec.workers = options.workers;
    try {
      jobs[i].cells = engine::run_backtest(features[i], run_spec);
    } catch (const Error& e) {
      jobs[i].error = e.what();
    }
    log << "backtest: " << jobs[i].series->asset_id << (jobs[i].error.empty() ? " done" : " failed: " + jobs[i].error)
        << "\n";
  }

  const fs::path out = options.out;
  fs::create_directories(out / "records");
  std::vector<fs::path> files;
  json cells = json::array();
  json failures = json::array();
  std::map<std::tuple<int, int, int>, std::vector<std::vector<engine::ForecastRecord>>> pooled;
  for (const auto& job : jobs) {
    if (!job.error.empty()) {
      failures.push_back({{"asset", job.series->asset_id}, {"error", job.error}});
      continue;
    }
    for (const auto& cell : job.cells) {
      if (!glob_match(options.cells, cell.key.label())) continue;
      const std::string name = record_file_name(cell.key);
      const fs::path path = out / "records" / name;
      atomic_write(path, records_to_csv(cell.records));
      files.push_back(path);
      cells.push_back({{"asset", cell.key.asset},
                       {"baseline", baseline::to_string(cell.key.baseline)},
                       {"method", engine::to_string(cell.key.method)},
                       {"scenario", engine::to_string(cell.key.scenario)},
                       {"records", "records/" + name},
                       {"metrics", to_json(summarize_records(cell.records, spec.alpha))},
                       {"audit", cell_audit(cell)}});
      pooled[{static_cast<int>(cell.key.baseline), static_cast<int>(cell.key.method),
              static_cast<int>(cell.key.scenario)}]
          .push_back(cell.records);
    }
  }
  json pooled_json = json::array();
  for (const auto& [key, streams] : pooled) {
    const auto records = engine::pool_records(streams);
    pooled_json.push_back({{"baseline", baseline::to_string(static_cast<baseline::Method>(std::get<0>(key)))},
                           {"method", engine::to_string(static_cast<engine::RecalMethod>(std::get<1>(key)))},
                           {"scenario", engine::to_string(static_cast<engine::Scenario>(std::get<2>(key)))},
                           {"assets", streams.size()},
                           {"metrics", to_json(summarize_records(records, spec.alpha))}});
  }
  const json summary{{"schema_version", kSchemaVersion},
                     {"alpha", spec.alpha},
                     {"kappa", spec.kappa},
                     {"seed", spec.seed},
                     {"cells", cells},
                     {"pooled", pooled_json},
                     {"failures", failures}};
  atomic_write(out / "summary.json", dump(summary));
  files.push_back(out / "summary.json");

  json manifest = manifest_header("backtest");
  manifest["seed"] = spec.seed;
  manifest["config"] = to_json(config);
  manifest["config"]["out"] = ".";
  json listed = json::array();
  for (const auto& f : files) listed.push_back(file_entry(out, f));
  manifest["files"] = listed;
  atomic_write(out / "manifest.json", dump(manifest));
  log << "backtest: " << cells.size() << " cell(s) written to " << out.string() << "\n";
  return failures.empty() ? kExitOk : kExitData;
}

int cmd_report(const fs::path& run_dir, std::ostream& log) {
  const auto files = verified_files(run_dir);
  const auto summary_it = files.find("summary.json");
  const auto theory_it = files.find("theory.json");
  if (summary_it == files.end() && theory_it == files.end()) {
    throw Error(ErrorKind::MissingRun, "manifest lists neither summary.json nor theory.json");
  }
  const fs::path dir = run_dir / "report";
  std::vector<fs::path> written;
  auto emit = [&](const std::string& name, const std::string& content) {
    atomic_write(dir / name, content);
    written.push_back(dir / name);
  };
  std::string md = "# Backtest report\n";

  if (summary_it != files.end()) {
    const json summary = read_json_file(summary_it->second);
    const auto& cells = summary.at("cells");
    const auto& pooled = summary.at("pooled");

    // Pooled exceedance per (baseline, method, scenario).
    std::string bars = "baseline,method,scenario,exceedance,strict_exceedance,avg_capital,n\n";
    for (const auto& p : pooled) {
      const auto& m = p.at("metrics");
      bars += p.at("baseline").get<std::string>() + "," + p.at("method").get<std::string>() + "," +
              p.at("scenario").get<std::string>() + "," + fmt(m.at("exceedance")) + "," +
              fmt(m.at("strict_exceedance")) + "," + fmt(m.at("avg_capital")) + "," + fmt(m.at("n")) + "\n";
    }
    emit("exceedance_bars.csv", bars);

    // Heatmap per scenario: rows (asset, baseline), one column per method.
    std::vector<std::string> methods, scenarios;
    std::vector<std::pair<std::string, std::string>> rows;
    std::map<std::tuple<std::string, std::string, std::string, std::string>, json> value;
    for (const auto& c : cells) {
      const auto asset = c.at("asset").get<std::string>();
      const auto base = c.at("baseline").get<std::string>();
      const auto method = c.at("method").get<std::string>();
      const auto scen = c.at("scenario").get<std::string>();
      if (std::find(methods.begin(), methods.end(), method) == methods.end()) methods.push_back(method);
      if (std::find(scenarios.begin(), scenarios.end(), scen) == scenarios.end()) scenarios.push_back(scen);
      if (std::find(rows.begin(), rows.end(), std::pair(asset, base)) == rows.end()) rows.emplace_back(asset, base);
      value[{asset, base, method, scen}] = c.at("metrics").at("exceedance");
    }
    for (const auto& scen : scenarios) {
      std::string heat = "asset,baseline";
      for (const auto& m : methods) heat += "," + m;
      heat += "\n";
      for (const auto& [asset, base] : rows) {
        heat += asset + "," + base;
        for (const auto& m : methods) {
          const auto it = value.find({asset, base, m, scen});
          heat += "," + (it == value.end() ? std::string() : fmt(it->second));
        }
        heat += "\n";
      }
      emit("heatmap_" + scen + ".csv", heat);
    }

    std::string scatter = "asset,baseline,method,scenario,exceedance,avg_capital\n";
    for (const auto& c : cells) {
      scatter += c.at("asset").get<std::string>() + "," + c.at("baseline").get<std::string>() + "," +
                 c.at("method").get<std::string>() + "," + c.at("scenario").get<std::string>() + "," +
                 fmt(c.at("metrics").at("exceedance")) + "," + fmt(c.at("metrics").at("avg_capital")) + "\n";
    }
    emit("scatter.csv", scatter);

    for (const auto& scen : scenarios) {
      md += "\n## Pooled results, " + scen + " proxies\n\n";
      md += "| baseline | method | exceedance | strict-stress exceedance | stress gap | avg capital | UC p | CC p | DQ p |\n";
      md += "|---|---|---|---|---|---|---|---|---|\n";
      for (const auto& p : pooled) {
        if (p.at("scenario") != scen) continue;
        const auto& m = p.at("metrics");
        md += "| " + p.at("baseline").get<std::string>() + " | " + p.at("method").get<std::string>() + " | " +
              fixed4(m.at("exceedance")) + " | " + fixed4(m.at("strict_exceedance")) + " | " +
              fixed4(m.at("stress_gap")) + " | " + fixed4(m.at("avg_capital")) + " | " +
              fixed4(m.at("uc").at("p_value")) + " | " + fixed4(m.at("cc").at("p_value")) + " | " +
              (m.at("dq").is_null() ? std::string("n/a") : fixed4(m.at("dq").at("p_value"))) + " |\n";
      }
    }
  }

  if (theory_it != files.end()) {
    const json theory = read_json_file(theory_it->second);
    const auto& curves = theory.at("curves");
    std::string csv = "rho";
    for (const auto& c : curves) csv += "," + c.at("label").get<std::string>();
    csv += "\n";
    const std::size_t points = curves.empty() ? 0 : curves.at(0).at("rho").size();
    for (std::size_t j = 0; j < points; ++j) {
      csv += fmt(curves.at(0).at("rho").at(j));
      for (const auto& c : curves) csv += "," + fmt(c.at("delta").at(j));
      csv += "\n";
    }
    emit("distortion.csv", csv);
    md += "\n## Theory checks (seed " + fmt(theory.at("seed")) + ")\n\n| check | instances | result |\n|---|---|---|\n";
    for (const auto& c : theory.at("checks")) {
      md += "| " + c.at("name").get<std::string>() + " | " + fmt(c.at("instances")) + " | " +
            (c.at("passed").get<bool>() ? "pass" : "FAIL") + " |\n";
    }
  }
  emit("summary.md", md);
  json manifest = manifest_header("report");
  json listed = json::array();
  for (const auto& f : written) listed.push_back(file_entry(dir, f));
  manifest["files"] = listed;
  atomic_write(dir / "manifest.json", dump(manifest));
  log << "report: " << written.size() << " file(s) written to " << dir.string() << "\n";
  return kExitOk;
}

int cmd_verify_theory(std::uint64_t seed, const std::optional<fs::path>& out, std::ostream& log,
                      const theory::SuiteOptions& options) {
  const auto report = theory::run_theory_suite(seed, options);
  for (const auto& c : report.checks) {
    char line[160];
    std::snprintf(line, sizeof line, "%-24s %-4s instances=%-6zu failures=%-4zu worst=%.3g (%.2fs)\n",
                  c.name.c_str(), c.passed ? "PASS" : "FAIL", c.instances, c.failures, c.worst, c.seconds);
    log << line;
  }
  log << (report.passed() ? "theory suite: PASS\n" : "theory suite: FAIL\n");
  if (out) {
    json checks = json::array();
    for (const auto& c : report.checks) {
      checks.push_back({{"name", c.name},
                        {"passed", c.passed},
                        {"instances", c.instances},
                        {"failures", c.failures},
                        {"worst", c.worst},
                        {"detail", c.detail}});
    }
    json curves = json::array();
    for (std::size_t i = 0; i < report.curves.size(); ++i) {
      const auto& c = report.curves[i];
      curves.push_back({{"label", report.curve_labels[i]},
                        {"kappa", c.kappa},
                        {"a", c.a},
                        {"alpha", c.alpha},
                        {"rho", c.rho},
                        {"delta", c.delta},
                        {"mc_delta", c.mc_delta},
                        {"se", c.se}});
    }
    const json doc{{"schema_version", kSchemaVersion},
                   {"seed", seed},
                   {"passed", report.passed()},
                   {"checks", checks},
                   {"curves", curves}};
    atomic_write(*out / "theory.json", dump(doc));
    register_in_manifest(*out, "verify-theory", {*out / "theory.json"});
  }
  return report.passed() ? kExitOk : kExitVerifyFailed;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Proxy-reliance controlled VaR recalibration backtests", "rhocal"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(RHOCAL_VERSION));

  std::string config_path, out_dir, cells = "*";
  std::optional<std::uint64_t> seed;
  unsigned workers = std::max(1u, std::thread::hardware_concurrency());

  auto* ingest = app.add_subcommand("ingest", "Fetch/clean market data into canonical panel CSVs");
  ingest->add_option("--config", config_path, "JSON run config")->required();
  ingest->add_option("--out", out_dir, "Output directory (defaults to the config's out)");
  ingest->add_option("--seed", seed, "Seed for synthetic sources");

  auto* backtest = app.add_subcommand("backtest", "Run the rolling backtest and write records, summary, manifest");
  backtest->add_option("--config", config_path, "JSON run config")->required();
  backtest->add_option("--out", out_dir, "Run directory (defaults to the config's out)");
  backtest->add_option("--seed", seed, "Run seed");
  backtest->add_option("--workers", workers, "Worker threads")->check(CLI::PositiveNumber);
  backtest->add_option("--cells", cells, "Glob over asset/baseline/method/scenario");

  auto* report = app.add_subcommand("report", "Emit plot-data CSVs and a markdown summary for a run");
  report->add_option("--out", out_dir, "Run directory")->required();

  auto* verify = app.add_subcommand("verify-theory", "Run the theory verification suite");
  verify->add_option("--seed", seed, "Suite seed");
  verify->add_option("--out", out_dir, "Directory for theory.json");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*report) return cmd_report(out_dir, out);
    if (*verify) {
      const std::optional<fs::path> dir = out_dir.empty() ? std::nullopt : std::optional<fs::path>(out_dir);
      return cmd_verify_theory(seed.value_or(0), dir, out);
    }
    RunConfig config = load_config(config_path);
    if (seed) config.spec.seed = *seed;
    const fs::path dir = out_dir.empty() ? config.out : fs::path(out_dir);
    if (*ingest) return cmd_ingest(config, dir, out);
    return cmd_backtest(config, {dir, workers, cells}, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
}

}  // namespace rhocal::app
