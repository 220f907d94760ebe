#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <map>
#include <queue>
#include <set>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "citywatch/cc4.hpp"
#include "citywatch/flow_ingest.hpp"
#include "citywatch/monitor.hpp"
#include "citywatch/surge_detector.hpp"

namespace citywatch {

struct PipelineOptions {
  Seconds interval{3600};
  /// Records older than (latest timestamp seen - skew_intervals * interval)
  /// are late: counted and dropped.
  std::size_t skew_intervals = 5;
  /// Unknown records raise Intrusion alerts too.
  bool strict = false;
  /// Per-source rate detectors run at end of input.
  bool rate_detectors = true;
  /// Numeric field summed per source and interval; records without it
  /// count as 1.
  std::string rate_field = "packets";
  MonitorOptions monitor;
};

struct PipelineCounts {
  std::size_t records_in = 0;
  std::size_t classified = 0;
  std::size_t dropped_malformed = 0;
  std::size_t dropped_late = 0;
  std::size_t dropped_duplicate = 0;
  std::map<PacketClass, std::size_t> by_class;
  std::size_t alerts_emitted = 0;
};

std::string to_json(const PipelineCounts& counts);

using AlertSink = std::function<void(const AnomalyAlert&)>;

/// collect -> cleanse -> symbolize -> classify -> emit, single-threaded.
/// Records are released from a bounded-skew reorder buffer in
/// (timestamp, source, arrival) order. Alerts reach the sink in
/// (timestamp, source, kind) order; with rate detectors enabled they are
/// held until finish(), since the rate models need the whole training
/// prefix. A throwing sink aborts with SinkFailure.
class StreamPipeline {
 public:
  StreamPipeline(SymbolSchema schema, CC4Network network, PipelineOptions options, AlertSink sink);

  /// Parses one JSON line; parse and schema failures are counted as malformed.
  void push_line(std::string_view line);
  void push(EventLogRecord record);
  /// Drains the buffer, runs the rate detectors, and flushes all alerts.
  void finish();

  const PipelineCounts& counts() const noexcept { return counts_; }

 private:
  using Key = std::tuple<Instant, std::string, std::size_t>;
  struct Pending {
    Key key;
    EventLogRecord record;
    bool operator>(const Pending& other) const { return key > other.key; }
  };

  void accept(EventLogRecord record);
  void release_before(Instant watermark);
  void process(const EventLogRecord& record);
  void emit(const AnomalyAlert& alert);

  SymbolSchema schema_;
  CC4Network network_;
  PipelineOptions options_;
  AlertSink sink_;
  PipelineCounts counts_;

  std::priority_queue<Pending, std::vector<Pending>, std::greater<>> buffer_;
  std::set<std::string> dedupe_;  // keyed by serialized record
  std::multimap<Instant, std::string> dedupe_by_time_;
  std::optional<Instant> latest_;
  std::size_t arrivals_ = 0;
  std::vector<AnomalyAlert> held_;
  std::vector<SourceObservation> observations_;
  bool finished_ = false;
};

/// Reads JSON Lines from `in` through a pipeline and returns the counts.
PipelineCounts run_pipeline(std::istream& in, const SymbolSchema& schema, const CC4Network& network,
                            const PipelineOptions& options, const AlertSink& sink);

/// Flow-log adapter: proto from the flow id (6 tcp, 17 udp, 1 icmp),
/// port_class from the destination port, bytes from the forward packet
/// length mean, packets 1, status "ok".
EventLogRecord event_from_flow(const FlowRecord& flow);

}  // namespace citywatch
