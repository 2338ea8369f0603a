#pragma once

#include "rhocal/market_data.hpp"

#include <chrono>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

namespace rhocal::testing {

inline Date day(int offset) {
  using namespace std::chrono;
  return year_month_day{sys_days{year{2020} / January / 1} + days{offset}};
}

/// Bars from closes with open = previous close and a symmetric range; VIX
/// attached when `vix` is nonempty.
inline AssetSeries series_from_closes(const std::vector<double>& closes, std::vector<double> vix = {},
                                      double range = 0.01) {
  AssetSeries s;
  s.asset_id = "T";
  for (std::size_t i = 0; i < closes.size(); ++i) {
    Bar b;
    b.date = day(static_cast<int>(i));
    b.close = closes[i];
    b.open = i == 0 ? closes[i] : closes[i - 1];
    b.high = std::max(b.open, b.close) * (1.0 + range);
    b.low = std::min(b.open, b.close) * (1.0 - range);
    b.volume = 1e6 * (1.0 + 0.1 * static_cast<double>(i % 7));
    s.bars.push_back(b);
  }
  if (vix.empty() && !closes.empty()) vix.assign(closes.size(), 20.0);
  s.vix = std::move(vix);
  return s;
}

inline std::vector<double> gaussian(std::size_t n, double sd, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d(0.0, sd);
  std::vector<double> out(n);
  for (auto& x : out) x = d(rng);
  return out;
}

/// Scratch directory removed on destruction.
struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& tag) {
    static std::mt19937_64 rng(std::random_device{}());
    path = std::filesystem::temp_directory_path() / ("rhocal_" + tag + "_" + std::to_string(rng() % 1000000007));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
};

}  // namespace rhocal::testing
