#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "citywatch/surge_detector.hpp"
#include "citywatch/time.hpp"

namespace citywatch {

enum class DeviceKind { Streetlight, Camera, WaterSensor };
enum class AttackKind { UdpFlood, SilenceAfterOverflow, Sybil };

std::string_view to_string(DeviceKind kind) noexcept;
std::optional<DeviceKind> parse_device_kind(std::string_view name);
std::string_view to_string(AttackKind kind) noexcept;
std::optional<AttackKind> parse_attack_kind(std::string_view name);

/// Flows per interval follow
///   base_rate + diurnal_amplitude * sin(2 pi t / period_day) + N(0, noise_std),
/// floored at 0. Streetlights run the sinusoid inverted: busy at night.
struct DeviceSpec {
  std::string id;
  DeviceKind kind = DeviceKind::Camera;
  double base_rate = 1.0;
  double diurnal_amplitude = 0.0;
  double noise_std = 0.0;

  bool operator==(const DeviceSpec&) const = default;
};

struct AttackScript {
  AttackKind kind = AttackKind::UdpFlood;
  std::string target_id;
  std::size_t start = 0;  // interval indices, [start, end)
  std::size_t end = 0;
  double magnitude = 10.0;           // UdpFlood rate multiplier
  std::size_t fake_id_count = 20;    // Sybil identities per interval

  bool operator==(const AttackScript&) const = default;
};

struct SimConfig {
  std::uint64_t seed = 42;
  std::size_t duration = 336;  // two weeks of hours
  Seconds interval{3600};
  Instant start = Instant{std::chrono::sys_days{std::chrono::year{2021} / 5 / 17}};
  std::string gateway_id = "10.20.0.1";
  std::vector<DeviceSpec> fleet;
  std::vector<AttackScript> attacks;

  /// Day length in intervals.
  double period_day() const noexcept;

  bool operator==(const SimConfig&) const = default;
};

enum class Scenario { Baseline, Flood, Silence, Sybil, Mixed };

std::optional<Scenario> parse_scenario(std::string_view name);
/// Three-device fleet over two weeks of hourly intervals; attacks sit in the
/// second week so the first week is clean training data.
SimConfig default_sim_config(Scenario scenario = Scenario::Flood);

/// Throws InvalidArgument for a bad fleet or interval and InvalidScript for
/// attack windows that are empty, out of range, overlap on one target, or
/// name an unknown device.
void validate(const SimConfig& config);

/// Starts from the preset named by "scenario" (baseline when absent) and
/// applies the remaining keys. Unknown keys are rejected.
SimConfig sim_config_from_json(const std::string& text);
std::string to_json(const SimConfig& config);

struct LabelRow {
  std::size_t interval_index = 0;
  std::string device_id;
  AttackKind kind = AttackKind::UdpFlood;

  bool operator==(const LabelRow&) const = default;
};

struct LabelSet {
  Instant start{};
  Seconds interval{3600};
  std::size_t duration = 0;
  std::string gateway_id;
  std::vector<LabelRow> rows;  // sorted by (interval_index, device_id)
};

struct LabeledTrace {
  std::string flows_csv;       // flow_ingest schema
  std::string events_jsonl;    // event log
  std::string labels_csv;      // interval_index,device_id,attack_kind
  std::string cc4_train_jsonl; // labelled events for the intrusion classifier
  std::string manifest_json;   // time base and the generating config
  LabelSet labels;
  /// Generated flow count per device and interval; empty while silenced.
  std::map<std::string, std::vector<std::optional<double>>> rates;
};

/// Identical config (seed included) gives byte-identical output.
LabeledTrace generate_trace(const SimConfig& config);

/// Writes flows.csv, events.jsonl, labels.csv, cc4_train.jsonl,
/// manifest.json and schema.json into `dir`, creating it if needed.
void write_trace(const LabeledTrace& trace, const std::string& dir);

/// Reads labels.csv and manifest.json from a trace directory.
LabelSet read_labels(const std::string& dir);

struct KindCounts {
  std::size_t true_positives = 0;
  std::size_t false_positives = 0;
};

struct DetectionScore {
  std::optional<double> precision;  // none without alerts
  std::optional<double> recall;     // none without labels
  std::size_t true_positives = 0;
  std::size_t false_positives = 0;
  std::size_t labels_detected = 0;
  std::size_t labels_missed = 0;
  std::map<std::string, KindCounts> per_alert_kind;
  std::map<std::string, std::size_t> missed_per_attack_kind;
};

/// Whether an alert kind can legitimately report an attack kind.
bool compatible(AlertKind alert, AttackKind attack) noexcept;

/// An alert covers intervals [index, index + span). It is a true positive
/// when a covered interval carries a compatible label for its source (an
/// alert from the gateway matches any device). Recall counts labels covered
/// by at least one compatible alert. Alerts off the trace grid throw
/// TimeBaseMismatch.
DetectionScore score_detections(std::span<const AnomalyAlert> alerts, const LabelSet& labels);

std::string to_json(const DetectionScore& score);

}  // namespace citywatch
