#include "rhocal/app/io.hpp"

#include <openssl/evp.h>

#include <charconv>
#include <fstream>
#include <memory>
#include <sstream>

namespace rhocal::app {

namespace {

using nlohmann::json;

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

double to_double(std::string_view s) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw Error(ErrorKind::MalformedRow, "bad number in record CSV: " + std::string(s));
  }
  return v;
}

state::Regime parse_regime(std::string_view s) {
  if (s == "low") return state::Regime::Low;
  if (s == "mid") return state::Regime::Mid;
  if (s == "high") return state::Regime::High;
  throw Error(ErrorKind::MalformedRow, "bad regime in record CSV: " + std::string(s));
}

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), digest, &len) != 1) {
    throw std::runtime_error("sha256 failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned i = 0; i < len; ++i) {
    out += kHex[digest[i] >> 4];
    out += kHex[digest[i] & 0xf];
  }
  return out;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IngestError, "cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void atomic_write(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::IngestError, "cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error(ErrorKind::IngestError, "short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

bool write_if_changed(const std::filesystem::path& path, std::string_view content) {
  std::error_code ec;
  if (std::filesystem::is_regular_file(path, ec) && std::filesystem::file_size(path, ec) == content.size() &&
      read_file(path) == content) {
    return false;
  }
  atomic_write(path, content);
  return true;
}

std::string records_to_csv(const std::vector<engine::ForecastRecord>& records) {
  std::string out(kRecordHeader);
  out += '\n';
  for (const auto& r : records) {
    const std::string fields[] = {r.asset,
                                  format_date(r.date),
                                  format_double(r.y),
                                  format_double(r.baseline_q),
                                  format_double(r.adjusted_q),
                                  format_double(r.shift),
                                  r.hit ? "1" : "0",
                                  std::string(to_string(r.method)),
                                  std::string(baseline::to_string(r.baseline)),
                                  std::string(to_string(r.scenario)),
                                  format_double(r.rho_low),
                                  format_double(r.rho_mid),
                                  format_double(r.rho_high),
                                  format_double(r.rho_eff),
                                  format_double(r.c),
                                  format_double(r.v),
                                  std::string(state::to_string(r.regime)),
                                  r.strict_stress ? "1" : "0"};
    bool first = true;
    for (const auto& f : fields) {
      if (!first) out += ',';
      out += f;
      first = false;
    }
    out += '\n';
  }
  return out;
}

std::vector<engine::ForecastRecord> records_from_csv(std::string_view text) {
  std::vector<engine::ForecastRecord> out;
  std::size_t pos = 0;
  bool header = true;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    auto line = text.substr(pos, end - pos);
    pos = end + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    if (header) {
      if (line != kRecordHeader) throw Error(ErrorKind::MalformedRow, "unexpected record CSV header");
      header = false;
      continue;
    }
    const auto f = split(line, ',');
    if (f.size() != 18) throw Error(ErrorKind::MalformedRow, "record CSV row needs 18 fields");
    engine::ForecastRecord r;
    r.asset = std::string(f[0]);
    r.date = parse_date(f[1]);
    r.y = to_double(f[2]);
    r.baseline_q = to_double(f[3]);
    r.adjusted_q = to_double(f[4]);
    r.shift = to_double(f[5]);
    r.hit = f[6] == "1" ? 1 : 0;
    r.method = engine::parse_recal_method(f[7]);
    r.baseline = baseline::parse_method(f[8]);
    r.scenario = engine::parse_scenario(f[9]);
    r.rho_low = to_double(f[10]);
    r.rho_mid = to_double(f[11]);
    r.rho_high = to_double(f[12]);
    r.rho_eff = to_double(f[13]);
    r.c = to_double(f[14]);
    r.v = to_double(f[15]);
    r.regime = parse_regime(f[16]);
    r.strict_stress = f[17] == "1" ? 1 : 0;
    out.push_back(std::move(r));
  }
  return out;
}

std::string record_file_name(const engine::CellKey& key) {
  std::string out = key.asset;
  out += "__";
  out += baseline::to_string(key.baseline);
  out += "__";
  out += to_string(key.method);
  out += "__";
  out += to_string(key.scenario);
  out += ".csv";
  return out;
}

json to_json(const eval::TestResult& r) {
  json j{{"statistic", r.statistic}, {"p_value", r.p_value}, {"dof", r.dof}, {"pass", r.pass}};
  if (r.rank > 0) {
    j["rank"] = r.rank;
    j["rank_deficient"] = r.degenerate;
  }
  return j;
}

json to_json(const eval::MetricsSummary& m) {
  return {{"n", m.n},
          {"exceedance", m.exceedance},
          {"strict_exceedance", optional_number(m.strict_exceedance)},
          {"strict_count", m.strict_count},
          {"stress_gap", optional_number(m.stress_gap)},
          {"avg_capital", m.avg_capital},
          {"stressed_avg_capital", optional_number(m.stressed_avg_capital)},
          {"tick_loss", m.tick_loss},
          {"uc", to_json(m.uc)},
          {"cc", to_json(m.cc)},
          {"dq", m.dq ? to_json(*m.dq) : json(nullptr)}};
}

eval::MetricsSummary summarize_records(const std::vector<engine::ForecastRecord>& records, double alpha) {
  std::vector<double> y, q;
  std::vector<std::uint8_t> hits, strict;
  y.reserve(records.size());
  for (const auto& r : records) {
    y.push_back(r.y);
    q.push_back(r.adjusted_q);
    hits.push_back(r.hit);
    strict.push_back(r.strict_stress);
  }
  return eval::summarize(y, q, hits, strict, alpha);
}

json file_entry(const std::filesystem::path& root, const std::filesystem::path& file) {
  const std::string bytes = read_file(file);
  return {{"path", std::filesystem::relative(file, root).generic_string()},
          {"sha256", sha256_hex(bytes)},
          {"bytes", bytes.size()}};
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

}  // namespace rhocal::app
