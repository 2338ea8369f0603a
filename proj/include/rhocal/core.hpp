#pragma once

#include <Eigen/Dense>

#include <chrono>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace rhocal {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Date = std::chrono::year_month_day;

/// Positivity floor shared by every volatility-like quantity.
inline constexpr double kVolFloor = 1e-8;

enum class ErrorKind {
  MalformedRow,
  EmptySeries,
  OhlcViolation,
  NoOverlap,
  TooShort,
  BadConfig,
  NonpositiveInput,
  EmptyTrainWindow,
  BadKappa,
  EmptyTrain,
  EmptySample,
  MissingRegime,
  NonpositiveProxy,
  BadOrdering,
  EmptyCandidates,
  EmptyGrid,
  LengthMismatch,
  BadDistribution,
  DegenerateDesign,
  IngestError,
  MissingRun,
  Usage,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

// ISO-8601 (YYYY-MM-DD) conversions. parse_date throws MalformedRow.
Date parse_date(std::string_view text);
std::string format_date(Date d);

/// Shortest text that round-trips to the same double.
std::string format_double(double x);

}  // namespace rhocal
