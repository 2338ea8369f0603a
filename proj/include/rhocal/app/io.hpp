#pragma once

#include "rhocal/engine.hpp"
#include "rhocal/evaluation.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace rhocal::app {

std::string sha256_hex(std::string_view bytes);
std::string read_file(const std::filesystem::path& path);

/// Writes to a sibling temp file and renames it into place.
void atomic_write(const std::filesystem::path& path, std::string_view content);

/// Writes only when the content differs from what is on disk; returns true
/// when the file changed.
bool write_if_changed(const std::filesystem::path& path, std::string_view content);

inline constexpr std::string_view kRecordHeader =
    "asset,date,y,baseline_q,adjusted_q,shift,hit,method,baseline,scenario,rho_low,rho_mid,rho_high,rho_eff,c,v,"
    "regime,strict_stress";

std::string records_to_csv(const std::vector<engine::ForecastRecord>& records);
/// Inverse of records_to_csv for the CSV columns; audit fields stay default.
std::vector<engine::ForecastRecord> records_from_csv(std::string_view text);

/// File name for a cell's record CSV: asset__baseline__method__scenario.csv.
std::string record_file_name(const engine::CellKey& key);

nlohmann::json to_json(const eval::TestResult& r);
nlohmann::json to_json(const eval::MetricsSummary& m);

/// Metrics over a record stream in stream order.
eval::MetricsSummary summarize_records(const std::vector<engine::ForecastRecord>& records, double alpha);

/// Manifest entry for a file under `root`.
nlohmann::json file_entry(const std::filesystem::path& root, const std::filesystem::path& file);

/// Serializes JSON with a trailing newline and stable formatting.
std::string dump(const nlohmann::json& j);

}  // namespace rhocal::app
