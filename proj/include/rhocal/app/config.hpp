#pragma once

#include "rhocal/engine.hpp"
#include "rhocal/market_data.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace rhocal::app {

enum class SourceKind { Synth, Csv, Remote };

struct CsvAsset {
  std::string id;
  std::filesystem::path path;
};

struct RemoteSource {
  std::string url_template;  // "{symbol}" is replaced by the asset id
  std::string vix_url;
  std::filesystem::path cache_dir = "cache";
  int timeout_seconds = 30;
};

struct DataSource {
  SourceKind kind = SourceKind::Synth;
  SynthConfig synth;
  std::optional<std::uint64_t> synth_seed;  // defaults to the run seed
  std::vector<CsvAsset> csv_assets;
  std::filesystem::path vix_path;
  RemoteSource remote;
  std::vector<std::string> remote_assets;
};

struct RunConfig {
  DataSource data;
  engine::RunSpec spec;
  std::size_t garch_lookback = 252;
  std::filesystem::path out = "run";
};

/// Parses the JSON config. Every key is optional; unknown keys, wrong types
/// and invalid values throw BadConfig. Relative paths resolve against `base_dir`.
RunConfig parse_config(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& path);

/// Fully defaulted JSON form; parse_config(to_json(c)) reproduces c.
nlohmann::json to_json(const RunConfig& config);
nlohmann::json default_config_json();

}  // namespace rhocal::app
