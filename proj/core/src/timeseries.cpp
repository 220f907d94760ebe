#include "citywatch/timeseries.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "citywatch/error.hpp"
#include "stats.hpp"

namespace citywatch {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<double> present_values(const TimeSeries& series, std::size_t first, std::size_t last) {
  std::vector<double> out;
  out.reserve(last - first);
  for (std::size_t i = first; i < last; ++i) {
    if (!series.is_missing(i)) out.push_back(series.value(i));
  }
  return out;
}

}  // namespace

TimeSeries::TimeSeries(Instant start, Seconds interval, std::vector<double> values,
                       std::vector<bool> missing)
    : start_(start), interval_(interval), values_(std::move(values)), missing_(std::move(missing)) {
  if (values_.empty()) fail(ErrorCode::EmptyInput, "time series must hold at least one value");
  if (values_.size() != missing_.size()) {
    fail(ErrorCode::LengthMismatch, "values and missing mask differ in length");
  }
  if (interval_ <= Seconds::zero()) fail(ErrorCode::InvalidArgument, "interval must be positive");
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (missing_[i]) {
      values_[i] = kNaN;
    } else if (!std::isfinite(values_[i])) {
      fail(ErrorCode::InvalidArgument, "present values must be finite");
    }
  }
}

TimeSeries TimeSeries::dense(Instant start, Seconds interval, std::vector<double> values) {
  std::vector<bool> missing(values.size(), false);
  return TimeSeries(start, interval, std::move(values), std::move(missing));
}

std::size_t TimeSeries::missing_count() const noexcept {
  return static_cast<std::size_t>(std::count(missing_.begin(), missing_.end(), true));
}

TimeSeries TimeSeries::slice(std::size_t first, std::size_t count) const {
  if (count == 0 || first + count > size()) {
    fail(ErrorCode::InvalidArgument, "slice out of range");
  }
  std::vector<double> values(values_.begin() + static_cast<std::ptrdiff_t>(first),
                             values_.begin() + static_cast<std::ptrdiff_t>(first + count));
  std::vector<bool> missing(missing_.begin() + static_cast<std::ptrdiff_t>(first),
                            missing_.begin() + static_cast<std::ptrdiff_t>(first + count));
  return TimeSeries(time_at(first), interval_, std::move(values), std::move(missing));
}

bool TimeSeries::operator==(const TimeSeries& other) const {
  if (start_ != other.start_ || interval_ != other.interval_ || missing_ != other.missing_) {
    return false;
  }
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!missing_[i] && values_[i] != other.values_[i]) return false;
  }
  return true;
}

std::optional<std::size_t> TimeSeries::index_of(Instant t) const noexcept {
  if (t < start_) return std::nullopt;
  const auto offset = (t - start_) / interval_;
  if (offset < 0 || static_cast<std::size_t>(offset) >= size()) return std::nullopt;
  return static_cast<std::size_t>(offset);
}

std::pair<TimeSeries, TimeSeries> split(const TimeSeries& series, double train_fraction) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    fail(ErrorCode::InvalidArgument, "train fraction must lie in (0, 1)");
  }
  const std::size_t n = series.size();
  if (n < 2) fail(ErrorCode::DegenerateSplit, "split needs at least two points");
  // The epsilon keeps products such as 0.7 * 10 from rounding up to 8.
  const auto train_len =
      static_cast<std::size_t>(std::ceil(train_fraction * static_cast<double>(n) - 1e-9));
  if (train_len == 0 || train_len >= n) {
    fail(ErrorCode::DegenerateSplit, "split leaves one side empty (train " +
                                         std::to_string(train_len) + " of " + std::to_string(n) +
                                         ")");
  }
  return {series.slice(0, train_len), series.slice(train_len, n - train_len)};
}

std::vector<Window> sliding_windows(std::span<const double> values, std::size_t num_timesteps) {
  if (num_timesteps == 0) fail(ErrorCode::InvalidArgument, "num_timesteps must be at least 1");
  if (values.size() <= num_timesteps) {
    fail(ErrorCode::SeriesTooShort, "series of length " + std::to_string(values.size()) +
                                        " yields no window of " + std::to_string(num_timesteps));
  }
  for (double v : values) {
    if (!std::isfinite(v)) fail(ErrorCode::MissingValuesPresent, "windowing needs a gap-free series");
  }
  std::vector<Window> out;
  out.reserve(values.size() - num_timesteps);
  for (std::size_t i = 0; i + num_timesteps < values.size(); ++i) {
    Window w;
    w.inputs.assign(values.begin() + static_cast<std::ptrdiff_t>(i),
                    values.begin() + static_cast<std::ptrdiff_t>(i + num_timesteps));
    w.target = values[i + num_timesteps];
    out.push_back(std::move(w));
  }
  return out;
}

std::vector<Window> sliding_windows(const TimeSeries& series, std::size_t num_timesteps) {
  if (series.size() > num_timesteps && series.has_missing()) {
    fail(ErrorCode::MissingValuesPresent, "windowing needs a gap-free series");
  }
  return sliding_windows(series.values(), num_timesteps);
}

TimeSeries interpolate_short_gaps(const TimeSeries& series, std::size_t max_run) {
  std::vector<double> values(series.values().begin(), series.values().end());
  std::vector<bool> missing = series.missing_mask();
  std::size_t i = 0;
  while (i < values.size()) {
    if (!missing[i]) {
      ++i;
      continue;
    }
    std::size_t run_end = i;
    while (run_end < values.size() && missing[run_end]) ++run_end;
    const std::size_t run = run_end - i;
    if (i > 0 && run_end < values.size() && run <= max_run) {
      const double left = values[i - 1];
      const double right = values[run_end];
      for (std::size_t k = i; k < run_end; ++k) {
        const double frac = static_cast<double>(k - i + 1) / static_cast<double>(run + 1);
        values[k] = left + (right - left) * frac;
        missing[k] = false;
      }
    }
    i = run_end;
  }
  return TimeSeries(series.start(), series.interval(), std::move(values), std::move(missing));
}

double Scaler::apply(double x) const noexcept {
  const double range = max - min;
  return range > 0.0 ? (x - min) / range : 0.0;
}

double Scaler::invert(double scaled) const noexcept { return min + scaled * (max - min); }

TimeSeries Scaler::apply(const TimeSeries& series) const {
  std::vector<double> values(series.values().begin(), series.values().end());
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!series.is_missing(i)) values[i] = apply(values[i]);
  }
  return TimeSeries(series.start(), series.interval(), std::move(values), series.missing_mask());
}

TimeSeries Scaler::invert(const TimeSeries& series) const {
  std::vector<double> values(series.values().begin(), series.values().end());
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!series.is_missing(i)) values[i] = invert(values[i]);
  }
  return TimeSeries(series.start(), series.interval(), std::move(values), series.missing_mask());
}

Scaler fit_scaler(const TimeSeries& series) {
  Scaler s;
  bool any = false;
  for (std::size_t i = 0; i < series.size(); ++i) {
    if (series.is_missing(i)) continue;
    const double v = series.value(i);
    if (!any) {
      s.min = s.max = v;
      any = true;
    } else {
      s.min = std::min(s.min, v);
      s.max = std::max(s.max, v);
    }
  }
  if (!any) fail(ErrorCode::AllMissing, "cannot fit a scaler on an all-missing series");
  return s;
}

double autocorrelation(const TimeSeries& series, std::size_t lag) {
  const std::vector<double> present = present_values(series, 0, series.size());
  if (present.size() < 2) return 0.0;
  const double m = detail::mean(present);
  double var = 0.0;
  for (double v : present) var += (v - m) * (v - m);
  var /= static_cast<double>(present.size());
  if (var <= 0.0) return 0.0;

  double cov = 0.0;
  std::size_t pairs = 0;
  for (std::size_t t = 0; t + lag < series.size(); ++t) {
    if (series.is_missing(t) || series.is_missing(t + lag)) continue;
    cov += (series.value(t) - m) * (series.value(t + lag) - m);
    ++pairs;
  }
  if (pairs == 0) return 0.0;
  return std::clamp(cov / static_cast<double>(pairs) / var, -1.0, 1.0);
}

DiagnosticsReport diagnose(const TimeSeries& series, std::span<const std::size_t> candidate_periods) {
  if (candidate_periods.empty()) fail(ErrorCode::InvalidArgument, "no candidate periods given");
  std::size_t longest = 0;
  for (std::size_t p : candidate_periods) {
    if (p < 2) fail(ErrorCode::InvalidArgument, "candidate periods must be at least 2");
    longest = std::max(longest, p);
  }
  if (series.size() < 3 * longest) {
    fail(ErrorCode::SeriesTooShort, "diagnostics need at least three times the longest period");
  }

  DiagnosticsReport report;
  std::size_t best_period = candidate_periods.front();
  double best_acf = -std::numeric_limits<double>::infinity();
  for (std::size_t p : candidate_periods) {
    const double acf = autocorrelation(series, p);
    if (acf > best_acf) {
      best_acf = acf;
      best_period = p;
    }
  }
  report.acf_at_period = best_acf;
  report.seasonal = best_acf >= kSeasonalAcfThreshold;
  if (report.seasonal) report.dominant_period = best_period;

  const std::vector<double> all = present_values(series, 0, series.size());
  const double global_sd = detail::population_stddev(all);
  std::vector<double> seg_means;
  std::vector<double> seg_sds;
  const std::size_t n = series.size();
  for (std::size_t k = 0; k < kDriftSegments; ++k) {
    const std::vector<double> seg =
        present_values(series, k * n / kDriftSegments, (k + 1) * n / kDriftSegments);
    if (seg.empty()) continue;
    seg_means.push_back(detail::mean(seg));
    seg_sds.push_back(detail::population_stddev(seg));
  }
  auto max_spread = [](const std::vector<double>& xs) {
    if (xs.empty()) return 0.0;
    const auto [lo, hi] = std::minmax_element(xs.begin(), xs.end());
    return *hi - *lo;
  };
  if (global_sd > 0.0) {
    report.segment_mean_drift = max_spread(seg_means) / global_sd;
    report.segment_var_drift = max_spread(seg_sds) / global_sd;
  }
  report.stationary = report.segment_mean_drift < kStationaryDriftThreshold &&
                      report.segment_var_drift < kStationaryDriftThreshold;
  return report;
}

std::string to_json(const DiagnosticsReport& report) {
  nlohmann::ordered_json j;
  j["seasonal"] = report.seasonal;
  j["dominant_period"] = report.dominant_period ? nlohmann::ordered_json(*report.dominant_period)
                                                : nlohmann::ordered_json(nullptr);
  j["acf_at_period"] = report.acf_at_period;
  j["stationary"] = report.stationary;
  j["segment_mean_drift"] = report.segment_mean_drift;
  j["segment_var_drift"] = report.segment_var_drift;
  return j.dump();
}

std::string to_json(const TimeSeries& series) {
  nlohmann::ordered_json j;
  j["start"] = format_iso8601(series.start());
  j["interval_seconds"] = series.interval().count();
  auto values = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < series.size(); ++i) {
    if (series.is_missing(i)) {
      values.push_back(nullptr);
    } else {
      values.push_back(series.value(i));
    }
  }
  j["values"] = std::move(values);
  return j.dump();
}

TimeSeries series_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::ParseFailure, std::string("series JSON: ") + e.what());
  }
  try {
    const auto start = parse_iso8601(j.at("start").get<std::string>());
    if (!start) fail(ErrorCode::ParseFailure, "series JSON: bad start timestamp");
    const Seconds interval{j.at("interval_seconds").get<std::int64_t>()};
    std::vector<double> values;
    std::vector<bool> missing;
    for (const auto& v : j.at("values")) {
      if (v.is_null()) {
        values.push_back(kNaN);
        missing.push_back(true);
      } else {
        values.push_back(v.get<double>());
        missing.push_back(false);
      }
    }
    return TimeSeries(*start, interval, std::move(values), std::move(missing));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::ParseFailure, std::string("series JSON: ") + e.what());
  }
}

void write_series_file(const TimeSeries& series, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::IoFailure, "cannot open " + path + " for writing");
  out << to_json(series) << '\n';
  if (!out) fail(ErrorCode::IoFailure, "write failed: " + path);
}

TimeSeries read_series_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoFailure, "cannot open " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return series_from_json(buffer.str());
}

}  // namespace citywatch
