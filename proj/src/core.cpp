#include "rhocal/core.hpp"

#include <charconv>
#include <cstdio>

namespace rhocal {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::MalformedRow: return "MalformedRow";
    case ErrorKind::EmptySeries: return "EmptySeries";
    case ErrorKind::OhlcViolation: return "OhlcViolation";
    case ErrorKind::NoOverlap: return "NoOverlap";
    case ErrorKind::TooShort: return "TooShort";
    case ErrorKind::BadConfig: return "BadConfig";
    case ErrorKind::NonpositiveInput: return "NonpositiveInput";
    case ErrorKind::EmptyTrainWindow: return "EmptyTrainWindow";
    case ErrorKind::BadKappa: return "BadKappa";
    case ErrorKind::EmptyTrain: return "EmptyTrain";
    case ErrorKind::EmptySample: return "EmptySample";
    case ErrorKind::MissingRegime: return "MissingRegime";
    case ErrorKind::NonpositiveProxy: return "NonpositiveProxy";
    case ErrorKind::BadOrdering: return "BadOrdering";
    case ErrorKind::EmptyCandidates: return "EmptyCandidates";
    case ErrorKind::EmptyGrid: return "EmptyGrid";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::BadDistribution: return "BadDistribution";
    case ErrorKind::DegenerateDesign: return "DegenerateDesign";
    case ErrorKind::IngestError: return "IngestError";
    case ErrorKind::MissingRun: return "MissingRun";
    case ErrorKind::Usage: return "Usage";
  }
  return "Unknown";
}

namespace {

int parse_int(std::string_view s, std::string_view whole) {
  int value = 0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, value);
  if (ec != std::errc{} || ptr != end) {
    throw Error(ErrorKind::MalformedRow, "bad date '" + std::string(whole) + "'");
  }
  return value;
}

}  // namespace

Date parse_date(std::string_view text) {
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') {
    throw Error(ErrorKind::MalformedRow, "bad date '" + std::string(text) + "'");
  }
  using namespace std::chrono;
  const Date d{year{parse_int(text.substr(0, 4), text)},
               month{static_cast<unsigned>(parse_int(text.substr(5, 2), text))},
               day{static_cast<unsigned>(parse_int(text.substr(8, 2), text))}};
  if (!d.ok()) throw Error(ErrorKind::MalformedRow, "invalid date '" + std::string(text) + "'");
  return d;
}

std::string format_date(Date d) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(d.year()),
                static_cast<unsigned>(d.month()), static_cast<unsigned>(d.day()));
  return buf;
}

std::string format_double(double x) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, ptr);
}

}  // namespace rhocal
