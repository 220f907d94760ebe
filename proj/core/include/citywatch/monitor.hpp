#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "citywatch/forecasters.hpp"
#include "citywatch/surge_detector.hpp"
#include "citywatch/time.hpp"
#include "citywatch/timeseries.hpp"

namespace citywatch {

/// One unit of per-source activity, e.g. a flow row (amount 1) or an event
/// carrying a packet count.
struct SourceObservation {
  Instant timestamp{};
  std::string source_id;
  double amount = 1.0;
};

struct MonitorOptions {
  Seconds interval{3600};
  ForecasterConfig model;  // Holt-Winters, daily period on hourly buckets
  double train_fraction = 0.5;
  /// A source is monitored only when it is present in at least this share
  /// of the training buckets; short-lived identities are left to the
  /// identity-flood detector.
  double established_fraction = 0.5;
  bool surges = true;
  bool dropouts = true;
  bool identity_floods = true;
  SurgeOptions surge;
  DropoutOptions dropout;
  IdentityFloodOptions identity;
};

struct SkippedSource {
  std::string source_id;
  std::string reason;
};

struct MonitorResult {
  Instant start{};
  std::size_t buckets = 0;
  std::map<std::string, TimeSeries> rates;  // every source, common time base
  std::optional<TimeSeries> new_identities;  // first-seen sources per bucket
  std::vector<std::string> monitored;
  std::vector<SkippedSource> skipped;
  std::vector<AnomalyAlert> alerts;  // sorted
};

/// Floors t onto the interval grid counted from the Unix epoch.
Instant align_to_interval(Instant t, Seconds interval);

/// Buckets observations per source on a shared, epoch-aligned time base,
/// fits the configured forecaster on each established source's training
/// prefix, and runs surge and dropout detection per source plus
/// identity-flood detection on the count of first-seen sources. Alerts name
/// the source they concern; identity floods use options.identity.source.
MonitorResult monitor_sources(std::span<const SourceObservation> observations,
                              const MonitorOptions& options);

}  // namespace citywatch
