#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "citywatch/time.hpp"

namespace citywatch {

/// Uniformly spaced series with an explicit missing mask. Missing slots
/// hold NaN in values(); every present value is finite.
class TimeSeries {
 public:
  TimeSeries(Instant start, Seconds interval, std::vector<double> values,
             std::vector<bool> missing);

  /// All values present.
  static TimeSeries dense(Instant start, Seconds interval, std::vector<double> values);

  std::size_t size() const noexcept { return values_.size(); }
  Instant start() const noexcept { return start_; }
  Seconds interval() const noexcept { return interval_; }
  Instant end() const noexcept { return time_at(size() - 1); }
  Instant time_at(std::size_t i) const noexcept {
    return start_ + interval_ * static_cast<Seconds::rep>(i);
  }

  std::span<const double> values() const noexcept { return values_; }
  const std::vector<bool>& missing_mask() const noexcept { return missing_; }
  double value(std::size_t i) const { return values_.at(i); }
  bool is_missing(std::size_t i) const { return missing_.at(i); }
  std::optional<double> at(std::size_t i) const {
    return is_missing(i) ? std::nullopt : std::optional<double>(values_[i]);
  }
  std::size_t missing_count() const noexcept;
  bool has_missing() const noexcept { return missing_count() > 0; }

  TimeSeries slice(std::size_t first, std::size_t count) const;

  /// Index of the bucket containing t, or nullopt when t lies outside.
  std::optional<std::size_t> index_of(Instant t) const noexcept;

  /// Missing slots compare equal regardless of their placeholder value.
  bool operator==(const TimeSeries& other) const;

 private:
  Instant start_;
  Seconds interval_;
  std::vector<double> values_;
  std::vector<bool> missing_;
};

// ---------------------------------------------------------------------------
// Preparation

std::pair<TimeSeries, TimeSeries> split(const TimeSeries& series, double train_fraction);

struct Window {
  std::vector<double> inputs;
  double target = 0.0;
};

std::vector<Window> sliding_windows(const TimeSeries& series, std::size_t num_timesteps);
std::vector<Window> sliding_windows(std::span<const double> values, std::size_t num_timesteps);

/// Fills interior missing runs no longer than max_run by linear
/// interpolation. Longer runs and runs touching either end stay missing.
TimeSeries interpolate_short_gaps(const TimeSeries& series, std::size_t max_run = 2);

/// Min-max scaling onto [0, 1].
struct Scaler {
  double min = 0.0;
  double max = 0.0;

  double apply(double x) const noexcept;
  double invert(double scaled) const noexcept;
  TimeSeries apply(const TimeSeries& series) const;
  TimeSeries invert(const TimeSeries& series) const;
};

Scaler fit_scaler(const TimeSeries& series);

// ---------------------------------------------------------------------------
// Seasonality and stationarity

inline constexpr double kSeasonalAcfThreshold = 0.3;
inline constexpr double kStationaryDriftThreshold = 0.5;
inline constexpr std::size_t kDriftSegments = 4;

struct DiagnosticsReport {
  bool seasonal = false;
  std::optional<std::size_t> dominant_period;
  double acf_at_period = 0.0;
  bool stationary = true;
  double segment_mean_drift = 0.0;
  double segment_var_drift = 0.0;
};

/// Lag autocorrelation with missing values excluded pairwise: the mean
/// lagged product over complete pairs divided by the variance over all
/// present points, clamped to [-1, 1]. Zero for constant input.
double autocorrelation(const TimeSeries& series, std::size_t lag);

DiagnosticsReport diagnose(const TimeSeries& series, std::span<const std::size_t> candidate_periods);

std::string to_json(const DiagnosticsReport& report);

// ---------------------------------------------------------------------------
// Series file: {"start", "interval_seconds", "values": [number|null]}

std::string to_json(const TimeSeries& series);
TimeSeries series_from_json(const std::string& text);
void write_series_file(const TimeSeries& series, const std::string& path);
TimeSeries read_series_file(const std::string& path);

}  // namespace citywatch
