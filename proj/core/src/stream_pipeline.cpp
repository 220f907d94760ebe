#include "citywatch/stream_pipeline.hpp"

#include <istream>
#include <sstream>

#include <json.hpp>

#include "citywatch/error.hpp"

namespace citywatch {
namespace {

std::string port_class(long port) {
  if (port < 1024) return "well_known";
  if (port < 49152) return "registered";
  return "dynamic";
}

std::vector<std::string> split_dash(const std::string& s) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : s) {
    if (c == '-') {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  parts.push_back(cur);
  return parts;
}

}  // namespace

std::string to_json(const PipelineCounts& counts) {
  nlohmann::ordered_json j;
  j["records_in"] = counts.records_in;
  j["classified"] = counts.classified;
  j["dropped_malformed"] = counts.dropped_malformed;
  j["dropped_late"] = counts.dropped_late;
  j["dropped_duplicate"] = counts.dropped_duplicate;
  nlohmann::ordered_json classes;
  for (PacketClass c : {PacketClass::Known, PacketClass::Unknown, PacketClass::Attack}) {
    const auto it = counts.by_class.find(c);
    classes[std::string(to_string(c))] = it == counts.by_class.end() ? 0 : it->second;
  }
  j["by_class"] = std::move(classes);
  j["alerts_emitted"] = counts.alerts_emitted;
  return j.dump();
}

StreamPipeline::StreamPipeline(SymbolSchema schema, CC4Network network, PipelineOptions options,
                               AlertSink sink)
    : schema_(std::move(schema)),
      network_(std::move(network)),
      options_(std::move(options)),
      sink_(std::move(sink)) {
  if (options_.interval <= Seconds::zero()) {
    fail(ErrorCode::InvalidArgument, "interval must be positive");
  }
  if (schema_.total_bits() != network_.width()) {
    fail(ErrorCode::WidthMismatch, "schema encodes " + std::to_string(schema_.total_bits()) +
                                       " bits, network expects " +
                                       std::to_string(network_.width()));
  }
  options_.monitor.interval = options_.interval;
}

void StreamPipeline::push_line(std::string_view line) {
  if (line.find_first_not_of(" \t\r") == std::string_view::npos) return;
  EventLogRecord record;
  try {
    record = event_from_json_line(line);
  } catch (const Error&) {
    ++counts_.records_in;
    ++counts_.dropped_malformed;
    return;
  }
  push(std::move(record));
}

void StreamPipeline::push(EventLogRecord record) {
  if (finished_) fail(ErrorCode::InvalidArgument, "pipeline already finished");
  ++counts_.records_in;
  record.label.reset();
  try {
    symbolize(record, schema_);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::SchemaMismatch) throw;
    ++counts_.dropped_malformed;
    return;
  }
  accept(std::move(record));
}

void StreamPipeline::accept(EventLogRecord record) {
  const Seconds skew = options_.interval * static_cast<Seconds::rep>(options_.skew_intervals);
  if (latest_ && record.timestamp < *latest_ - skew) {
    ++counts_.dropped_late;
    return;
  }
  std::string key = to_json_line(record);
  if (!dedupe_.insert(key).second) {
    ++counts_.dropped_duplicate;
    return;
  }
  dedupe_by_time_.emplace(record.timestamp, std::move(key));
  if (!latest_ || record.timestamp > *latest_) latest_ = record.timestamp;
  Key order{record.timestamp, record.source_id, arrivals_++};
  buffer_.push(Pending{std::move(order), std::move(record)});

  const Instant watermark = *latest_ - skew;
  release_before(watermark);
  // Keys older than the watermark can never match again: such records are late.
  while (!dedupe_by_time_.empty() && dedupe_by_time_.begin()->first < watermark) {
    dedupe_.erase(dedupe_by_time_.begin()->second);
    dedupe_by_time_.erase(dedupe_by_time_.begin());
  }
}

void StreamPipeline::release_before(Instant watermark) {
  while (!buffer_.empty() && std::get<0>(buffer_.top().key) < watermark) {
    const EventLogRecord record = buffer_.top().record;
    buffer_.pop();
    process(record);
  }
}

void StreamPipeline::process(const EventLogRecord& record) {
  const Symbolized sym = symbolize(record, schema_);
  const Classification c = network_.classify(sym.bits);
  ++counts_.classified;
  ++counts_.by_class[c.cls];

  if (options_.rate_detectors) {
    double amount = 1.0;
    const auto it = record.fields.find(options_.rate_field);
    if (it != record.fields.end()) {
      if (const auto* v = std::get_if<double>(&it->second)) amount = *v;
    }
    observations_.push_back({record.timestamp, record.source_id, amount});
  }

  const bool raise = c.cls == PacketClass::Attack || (options_.strict && c.cls == PacketClass::Unknown);
  if (!raise) return;
  AnomalyAlert alert;
  alert.timestamp = record.timestamp;
  alert.kind = AlertKind::Intrusion;
  alert.observed = static_cast<double>(c.scores.at(c.cls));
  alert.expected = 0.0;
  alert.severity = c.cls == PacketClass::Attack ? Severity::Critical : Severity::Warning;
  alert.source = record.source_id;
  alert.packet_class = std::string(to_string(c.cls));
  alert.ambiguous = c.ambiguous;
  if (options_.rate_detectors) {
    held_.push_back(std::move(alert));
  } else {
    emit(alert);
  }
}

void StreamPipeline::emit(const AnomalyAlert& alert) {
  try {
    sink_(alert);
  } catch (const std::exception& e) {
    std::ostringstream msg;
    msg << "alert sink failed after " << counts_.alerts_emitted << " alerts (" << e.what()
        << "); counts " << to_json(counts_);
    fail(ErrorCode::SinkFailure, msg.str());
  }
  ++counts_.alerts_emitted;
}

void StreamPipeline::finish() {
  if (finished_) return;
  finished_ = true;
  while (!buffer_.empty()) {
    const EventLogRecord record = buffer_.top().record;
    buffer_.pop();
    process(record);
  }
  if (options_.rate_detectors && !observations_.empty()) {
    MonitorResult m = monitor_sources(observations_, options_.monitor);
    held_.insert(held_.end(), m.alerts.begin(), m.alerts.end());
  }
  sort_alerts(held_);
  for (const auto& alert : held_) emit(alert);
  held_.clear();
}

PipelineCounts run_pipeline(std::istream& in, const SymbolSchema& schema, const CC4Network& network,
                            const PipelineOptions& options, const AlertSink& sink) {
  StreamPipeline pipeline(schema, network, options, sink);
  std::string line;
  while (std::getline(in, line)) pipeline.push_line(line);
  pipeline.finish();
  return pipeline.counts();
}

EventLogRecord event_from_flow(const FlowRecord& flow) {
  EventLogRecord r;
  r.timestamp = flow.timestamp;
  r.source_id = flow.source_id();
  const auto parts = split_dash(flow.flow_id);
  std::string proto = parts.back();
  if (proto == "6") proto = "tcp";
  else if (proto == "17") proto = "udp";
  else if (proto == "1") proto = "icmp";
  long dport = 0;
  if (parts.size() >= 5) {
    try {
      dport = std::stol(parts[parts.size() - 2]);
    } catch (const std::exception&) {
      dport = 0;
    }
  }
  r.fields["proto"] = proto;
  r.fields["port_class"] = port_class(dport);
  r.fields["bytes"] = flow.fwd_pkt_len_mean.value_or(0.0);
  r.fields["packets"] = 1.0;
  r.fields["status"] = std::string("ok");
  return r;
}

}  // namespace citywatch
