#include "citywatch/surge_detector.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "citywatch/error.hpp"
#include "stats.hpp"

namespace citywatch {
namespace {

using ojson = nlohmann::ordered_json;

// Deviations this small are floating-point noise, not signal.
double tolerance(double reference) { return 1e-9 * std::max(1.0, std::abs(reference)); }

double exceedance(const ConfidenceBand& band, double x) {
  return std::max(band.lower() - x, x - band.upper());
}

Severity grade(const ConfidenceBand& band, double outside) {
  return outside > 2.0 * band.half_width() ? Severity::Critical : Severity::Warning;
}

// Windows over series[first..]; expected[k] belongs to series index first + k.
std::vector<AnomalyAlert> score_windows(const TimeSeries& series, std::size_t first,
                                        std::span<const double> expected, double stddev, double z,
                                        std::size_t window, AlertKind kind,
                                        const std::string& source) {
  std::vector<AnomalyAlert> alerts;
  for (std::size_t begin = first; begin < series.size(); begin += window) {
    const std::size_t end = std::min(series.size(), begin + window);
    double observed = 0.0;
    double predicted = 0.0;
    std::size_t present = 0;
    for (std::size_t i = begin; i < end; ++i) {
      if (series.is_missing(i)) continue;
      observed += series.value(i);
      predicted += expected[i - first];
      ++present;
    }
    if (present == 0) continue;
    observed /= static_cast<double>(present);
    predicted /= static_cast<double>(present);
    const ConfidenceBand band{predicted, stddev, present, z};
    const double outside = exceedance(band, observed);
    if (outside <= tolerance(predicted)) continue;
    AnomalyAlert alert;
    alert.timestamp = series.time_at(begin);
    alert.kind = kind;
    alert.observed = observed;
    alert.expected = predicted;
    alert.band = band;
    alert.severity = grade(band, outside);
    alert.source = source;
    alert.span = end - begin;
    alerts.push_back(std::move(alert));
  }
  return alerts;
}

std::size_t scored_offset(const TimeSeries& series, const FittedForecaster& model) {
  if (series.interval() != model.interval()) {
    fail(ErrorCode::TimeBaseMismatch, "series interval differs from the model's");
  }
  if (series.start() == model.next_time()) return 0;
  if (series.start() == model.train_start()) return model.train_length();
  if (series.start() > model.next_time()) {
    fail(ErrorCode::TimeBaseMismatch, "scored series does not continue the training range");
  }
  const auto offset = series.index_of(model.next_time());
  if (!offset || (model.next_time() - series.start()) % series.interval() != Seconds::zero()) {
    fail(ErrorCode::TimeBaseMismatch, "scored series is not aligned with the training range");
  }
  return *offset;
}

}  // namespace

double z_score(double confidence) {
  for (const auto& [level, z] : kZTable) {
    if (std::abs(level - confidence) < 1e-12) return z;
  }
  fail(ErrorCode::UnsupportedConfidence,
       "confidence " + std::to_string(confidence) + " is not one of the tabulated levels");
}

double ConfidenceBand::half_width() const noexcept {
  return n == 0 ? 0.0 : z * stddev / std::sqrt(static_cast<double>(n));
}

ConfidenceBand confidence_interval(std::span<const double> window, double confidence) {
  if (window.empty()) fail(ErrorCode::EmptyInput, "confidence interval of an empty window");
  for (double v : window) {
    if (!std::isfinite(v)) fail(ErrorCode::InvalidArgument, "window values must be finite");
  }
  return ConfidenceBand{detail::mean(window), detail::sample_stddev(window), window.size(),
                        z_score(confidence)};
}

std::string_view to_string(AlertKind kind) noexcept {
  switch (kind) {
    case AlertKind::Surge: return "Surge";
    case AlertKind::Dropout: return "Dropout";
    case AlertKind::IdentityFlood: return "IdentityFlood";
    case AlertKind::Intrusion: return "Intrusion";
  }
  return "Unknown";
}

std::string_view to_string(Severity severity) noexcept {
  return severity == Severity::Critical ? "Critical" : "Warning";
}

std::optional<AlertKind> parse_alert_kind(std::string_view name) {
  if (name == "Surge") return AlertKind::Surge;
  if (name == "Dropout") return AlertKind::Dropout;
  if (name == "IdentityFlood") return AlertKind::IdentityFlood;
  if (name == "Intrusion") return AlertKind::Intrusion;
  return std::nullopt;
}

void sort_alerts(std::vector<AnomalyAlert>& alerts) {
  std::stable_sort(alerts.begin(), alerts.end(), [](const AnomalyAlert& a, const AnomalyAlert& b) {
    if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
    if (a.source != b.source) return a.source < b.source;
    return a.kind < b.kind;
  });
}

std::string to_json_line(const AnomalyAlert& alert) {
  ojson j;
  j["ts"] = format_iso8601(alert.timestamp);
  j["kind"] = std::string(to_string(alert.kind));
  j["observed"] = alert.observed;
  j["expected"] = alert.expected;
  j["lower"] = alert.band ? ojson(alert.band->lower()) : ojson(nullptr);
  j["upper"] = alert.band ? ojson(alert.band->upper()) : ojson(nullptr);
  j["severity"] = std::string(to_string(alert.severity));
  j["source"] = alert.source;
  j["span"] = alert.span;
  if (alert.packet_class) j["class"] = *alert.packet_class;
  if (alert.ambiguous) j["ambiguous"] = *alert.ambiguous;
  return j.dump();
}

AnomalyAlert alert_from_json_line(std::string_view line) {
  try {
    const nlohmann::json j = nlohmann::json::parse(line);
    AnomalyAlert a;
    const auto ts = parse_iso8601(j.at("ts").get<std::string>());
    const auto kind = parse_alert_kind(j.at("kind").get<std::string>());
    if (!ts || !kind) fail(ErrorCode::ParseFailure, "alert line has a bad ts or kind");
    a.timestamp = *ts;
    a.kind = *kind;
    a.observed = j.at("observed").get<double>();
    a.expected = j.at("expected").get<double>();
    a.severity = j.at("severity").get<std::string>() == "Critical" ? Severity::Critical
                                                                    : Severity::Warning;
    a.source = j.at("source").get<std::string>();
    a.span = j.value("span", std::size_t{1});
    if (!j.at("lower").is_null() && !j.at("upper").is_null()) {
      // Only the bounds survive serialization; keep them as a z = 1, n = 1 band.
      const double lower = j["lower"].get<double>();
      const double upper = j["upper"].get<double>();
      a.band = ConfidenceBand{(lower + upper) / 2.0, (upper - lower) / 2.0, 1, 1.0};
    }
    if (j.contains("class")) a.packet_class = j["class"].get<std::string>();
    if (j.contains("ambiguous")) a.ambiguous = j["ambiguous"].get<bool>();
    return a;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::ParseFailure, std::string("alert line: ") + e.what());
  }
}

std::string to_json_lines(std::span<const AnomalyAlert> alerts) {
  std::string out;
  for (const auto& a : alerts) {
    out += to_json_line(a);
    out.push_back('\n');
  }
  return out;
}

std::vector<AnomalyAlert> read_alerts_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoFailure, "cannot open " + path);
  std::vector<AnomalyAlert> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    out.push_back(alert_from_json_line(line));
  }
  return out;
}

std::optional<DetectionMode> parse_detection_mode(std::string_view name) {
  if (name == "mean_shift") return DetectionMode::MeanShift;
  if (name == "residual") return DetectionMode::Residual;
  return std::nullopt;
}

std::vector<AnomalyAlert> detect_surges(const TimeSeries& series, const FittedForecaster& model,
                                        const SurgeOptions& options) {
  const double z = z_score(options.confidence);
  if (options.window == 0) fail(ErrorCode::InvalidArgument, "window must be at least 1");
  const std::size_t first = scored_offset(series, model);
  if (first >= series.size()) return {};

  const bool residual_mode = options.mode == DetectionMode::Residual;
  const double stddev = residual_mode ? model.result().residual_std : model.result().train_std;
  const double gate = z * stddev;

  OnlinePredictor predictor(model);
  std::vector<double> expected;
  expected.reserve(series.size() - first);
  std::vector<AnomalyAlert> alerts;
  for (std::size_t i = first; i < series.size(); ++i) {
    const double pred = predictor.predict();
    expected.push_back(pred);
    const auto obs = series.at(i);
    if (!obs) {
      predictor.observe(std::nullopt);
      continue;
    }
    const double deviation = std::abs(*obs - pred);
    const bool beyond = deviation - gate > tolerance(pred);
    predictor.observe(beyond ? std::nullopt : obs);
    if (residual_mode && beyond) {
      AnomalyAlert alert;
      alert.timestamp = series.time_at(i);
      alert.kind = AlertKind::Surge;
      alert.observed = *obs;
      alert.expected = pred;
      alert.band = ConfidenceBand{pred, stddev, 1, z};
      alert.severity = grade(*alert.band, deviation - gate);
      alert.source = options.source;
      alerts.push_back(std::move(alert));
    }
  }
  if (!residual_mode) {
    alerts = score_windows(series, first, expected, stddev, z, options.window, AlertKind::Surge,
                           options.source);
  }
  sort_alerts(alerts);
  return alerts;
}

std::vector<AnomalyAlert> detect_dropout(const TimeSeries& series, const DropoutOptions& options) {
  if (options.gap_threshold == 0) fail(ErrorCode::InvalidArgument, "gap threshold must be >= 1");
  auto silent = [&](std::size_t i) {
    return series.is_missing(i) || (options.zero_is_silence && series.value(i) == 0.0);
  };
  std::vector<AnomalyAlert> alerts;
  std::size_t i = 0;
  while (i < series.size()) {
    if (!silent(i)) {
      ++i;
      continue;
    }
    std::size_t end = i;
    while (end < series.size() && silent(end)) ++end;
    const std::size_t run = end - i;
    if (run >= options.gap_threshold) {
      AnomalyAlert alert;
      alert.timestamp = series.time_at(i);
      alert.kind = AlertKind::Dropout;
      alert.observed = static_cast<double>(run);
      alert.expected = 0.0;
      alert.severity = run >= 2 * options.gap_threshold ? Severity::Critical : Severity::Warning;
      alert.source = options.source;
      alert.span = run;
      alerts.push_back(std::move(alert));
    }
    i = end;
  }
  return alerts;
}

std::vector<AnomalyAlert> detect_identity_flood(const TimeSeries& new_ids,
                                                const IdentityFloodOptions& options) {
  const double z = z_score(options.confidence);
  if (options.window == 0) fail(ErrorCode::InvalidArgument, "window must be at least 1");
  const auto [train, test] = split(new_ids, options.train_fraction);
  std::vector<double> history;
  for (std::size_t i = 0; i < train.size(); ++i) {
    if (!train.is_missing(i)) history.push_back(train.value(i));
  }
  const double baseline = detail::mean(history);
  const double stddev = detail::sample_stddev(history);
  const std::vector<double> expected(test.size(), baseline);
  auto alerts = score_windows(new_ids, train.size(), expected, stddev, z, options.window,
                              AlertKind::IdentityFlood, options.source);
  sort_alerts(alerts);
  return alerts;
}

}  // namespace citywatch
