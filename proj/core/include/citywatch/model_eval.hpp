#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "citywatch/forecasters.hpp"
#include "citywatch/timeseries.hpp"

namespace citywatch {

double mse(std::span<const double> actual, std::span<const double> predicted);

struct MapeResult {
  double percent = 0.0;
  std::size_t skipped_zero_targets = 0;
};

/// Pairs with a zero target are skipped and counted; AllTargetsZero when
/// nothing is left to score.
MapeResult mape(std::span<const double> actual, std::span<const double> predicted);

/// Pattern class each model family is suited to.
std::string pattern_class(ForecasterKind kind);

struct ModelRow {
  std::string name;
  std::string pattern_class;
  std::size_t train_len = 0;
  std::optional<double> test_mse;       // empty when the model failed
  std::optional<double> test_mape_pct;  // empty when failed or all targets zero
  std::size_t mape_skipped_zero_targets = 0;
  double fit_seconds = 0.0;
  std::optional<std::string> error;
};

struct ModelReport {
  std::vector<ModelRow> rows;
  /// Successful rows by ascending test MSE, ties broken by name; failed
  /// rows follow in config order.
  std::vector<std::string> ranking;
};

inline constexpr const char* kPersistenceName = "persistence(baseline)";

/// Fits each config on the chronological training split and scores
/// teacher-forced one-step forecasts on the test split. The persistence
/// baseline (moving average, w = 1) is always appended. Per-model failures
/// are recorded in the row.
ModelReport compare_models(std::span<const ForecasterConfig> configs, const TimeSeries& series,
                           double train_fraction);

/// Wall-clock fit times vary between runs, so they are only written when
/// asked for; without them both renderings are byte-reproducible.
std::string to_json(const ModelReport& report, bool include_timings = false);
/// Aligned text table, one row per model.
std::string to_table(const ModelReport& report, bool include_timings = false);

}  // namespace citywatch
