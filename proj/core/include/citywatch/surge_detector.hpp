#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "citywatch/forecasters.hpp"
#include "citywatch/time.hpp"
#include "citywatch/timeseries.hpp"

namespace citywatch {

// ---------------------------------------------------------------------------
// Z table: closed set of confidence levels, no interpolation.

inline constexpr std::array<std::pair<double, double>, 7> kZTable = {{
    {0.80, 1.282},
    {0.85, 1.440},
    {0.90, 1.645},
    {0.95, 1.960},
    {0.99, 2.576},
    {0.995, 2.807},
    {0.999, 3.291},
}};

/// Throws UnsupportedConfidence for anything but the seven table keys.
double z_score(double confidence);

/// mean +/- z * stddev / sqrt(n)
struct ConfidenceBand {
  double mean = 0.0;
  double stddev = 0.0;
  std::size_t n = 1;
  double z = 0.0;

  double half_width() const noexcept;
  double lower() const noexcept { return mean - half_width(); }
  double upper() const noexcept { return mean + half_width(); }
  bool contains(double x) const noexcept { return x >= lower() && x <= upper(); }
};

/// Sample standard deviation (n - 1); a single observation has s = 0.
ConfidenceBand confidence_interval(std::span<const double> window, double confidence);

// ---------------------------------------------------------------------------
// Alerts

enum class AlertKind { Surge, Dropout, IdentityFlood, Intrusion };
enum class Severity { Warning, Critical };

std::string_view to_string(AlertKind kind) noexcept;
std::string_view to_string(Severity severity) noexcept;
std::optional<AlertKind> parse_alert_kind(std::string_view name);

struct AnomalyAlert {
  Instant timestamp{};
  AlertKind kind = AlertKind::Surge;
  double observed = 0.0;
  double expected = 0.0;
  std::optional<ConfidenceBand> band;
  Severity severity = Severity::Warning;
  std::string source;
  std::size_t span = 1;  // intervals covered, starting at timestamp
  // Intrusion rows only.
  std::optional<std::string> packet_class;
  std::optional<bool> ambiguous;
};

/// Orders by (timestamp, source, kind); stable otherwise.
void sort_alerts(std::vector<AnomalyAlert>& alerts);

/// One JSON object, fields in fixed order: ts, kind, observed, expected,
/// lower, upper, severity, source, span[, class, ambiguous].
std::string to_json_line(const AnomalyAlert& alert);
AnomalyAlert alert_from_json_line(std::string_view line);
std::string to_json_lines(std::span<const AnomalyAlert> alerts);
std::vector<AnomalyAlert> read_alerts_file(const std::string& path);

// ---------------------------------------------------------------------------
// Detectors

enum class DetectionMode { MeanShift, Residual };

std::optional<DetectionMode> parse_detection_mode(std::string_view name);

struct SurgeOptions {
  double confidence = 0.95;
  DetectionMode mode = DetectionMode::MeanShift;
  std::size_t window = 4;  // points per window in mean-shift mode
  std::string source = "series";
};

/// Scores the points of `series` that lie after the model's training range
/// (a series that starts at the training start has its prefix skipped).
///
/// mean_shift: consecutive windows of `window` points; expected window mean
/// is the mean of the one-step forecasts, s is the training standard
/// deviation and n the number of present points. A window mean outside the
/// band raises a Surge.
///
/// residual: a point whose |observed - forecast| exceeds z * residual_std
/// raises a Surge.
///
/// Observations beyond the point threshold (z * s or z * residual_std) and
/// missing points do not update the predictor; it continues on its own
/// forecast. Severity is Critical when the distance outside the band
/// exceeds twice its half-width.
std::vector<AnomalyAlert> detect_surges(const TimeSeries& series, const FittedForecaster& model,
                                        const SurgeOptions& options = {});

struct DropoutOptions {
  std::size_t gap_threshold = 3;
  bool zero_is_silence = false;
  std::string source = "series";
};

/// One Dropout per maximal silent run of at least gap_threshold buckets,
/// stamped at the run start; observed is the run length.
std::vector<AnomalyAlert> detect_dropout(const TimeSeries& series, const DropoutOptions& options = {});

struct IdentityFloodOptions {
  double confidence = 0.95;
  std::size_t window = 4;
  double train_fraction = 0.5;
  std::string source = "gateway";
};

/// Mean-shift scoring of a never-seen-identities-per-interval series
/// against its training prefix mean and standard deviation.
std::vector<AnomalyAlert> detect_identity_flood(const TimeSeries& new_ids,
                                                const IdentityFloodOptions& options = {});

}  // namespace citywatch
