#include <doctest.h>

#include <random>
#include <sstream>

#include "citywatch/city_sim.hpp"
#include "citywatch/error.hpp"
#include "citywatch/stream_pipeline.hpp"
#include "generators.hpp"

using namespace citywatch;

namespace {

CC4Network network_from(const LabeledTrace& trace, const SymbolSchema& schema) {
  std::vector<std::pair<BitVector, PacketClass>> samples;
  std::istringstream in(trace.cc4_train_jsonl);
  std::string line;
  while (std::getline(in, line)) {
    const auto r = event_from_json_line(line);
    samples.emplace_back(symbolize(r, schema).bits, *r.label);
  }
  return CC4Network::train(samples, 2);
}

struct Run {
  PipelineCounts counts;
  std::vector<AnomalyAlert> alerts;
};

Run run(const std::string& jsonl, const CC4Network& net, PipelineOptions opts) {
  Run r;
  std::istringstream in(jsonl);
  r.counts = run_pipeline(in, default_event_schema(), net, opts,
                          [&](const AnomalyAlert& a) { r.alerts.push_back(a); });
  return r;
}

EventLogRecord event(Instant t, std::string src, double packets, std::string proto = "tcp") {
  EventLogRecord r;
  r.timestamp = t;
  r.source_id = std::move(src);
  r.fields["bytes"] = 2000.0;
  r.fields["packets"] = packets;
  r.fields["port_class"] = std::string("well_known");
  r.fields["proto"] = std::move(proto);
  r.fields["status"] = std::string("ok");
  return r;
}

std::size_t accounted(const PipelineCounts& c) {
  return c.classified + c.dropped_malformed + c.dropped_late + c.dropped_duplicate;
}

}  // namespace

TEST_CASE("flood trace: intrusions only inside the scripted window") {
  const auto cfg = default_sim_config(Scenario::Flood);
  const auto trace = generate_trace(cfg);
  const auto net = network_from(trace, default_event_schema());
  PipelineOptions opts;
  opts.rate_detectors = false;
  const auto r = run(trace.events_jsonl, net, opts);
  const auto& atk = cfg.attacks.at(0);
  CHECK(r.counts.records_in == accounted(r.counts));
  CHECK(r.counts.dropped_malformed == 0);
  REQUIRE_FALSE(r.alerts.empty());
  for (const auto& a : r.alerts) {
    CHECK(a.kind == AlertKind::Intrusion);
    const auto idx = static_cast<std::size_t>((a.timestamp - cfg.start) / cfg.interval);
    CHECK(idx >= atk.start);
    CHECK(idx < atk.end);
    CHECK(a.source == atk.target_id);
    CHECK(a.severity == Severity::Critical);
    CHECK(a.packet_class == std::string("Attack"));
  }
  CHECK(r.counts.alerts_emitted == r.alerts.size());
}

TEST_CASE("baseline trace raises no intrusions") {
  const auto trace = generate_trace(default_sim_config(Scenario::Baseline));
  const auto net = network_from(trace, default_event_schema());
  PipelineOptions opts;
  opts.rate_detectors = false;
  const auto r = run(trace.events_jsonl, net, opts);
  CHECK(r.alerts.empty());
  const auto attack = r.counts.by_class.find(PacketClass::Attack);
  CHECK((attack == r.counts.by_class.end() || attack->second == 0));
}

TEST_CASE("pipeline output is deterministic and ordered") {
  const auto trace = generate_trace(default_sim_config(Scenario::Mixed));
  const auto net = network_from(trace, default_event_schema());
  const auto a = run(trace.events_jsonl, net, PipelineOptions{});
  const auto b = run(trace.events_jsonl, net, PipelineOptions{});
  CHECK(to_json_lines(a.alerts) == to_json_lines(b.alerts));
  CHECK(to_json(a.counts) == to_json(b.counts));
  auto sorted = a.alerts;
  sort_alerts(sorted);
  CHECK(to_json_lines(sorted) == to_json_lines(a.alerts));
}

TEST_CASE("malformed, late and duplicate records are counted") {
  const auto trace = generate_trace(default_sim_config(Scenario::Baseline));
  const auto net = network_from(trace, default_event_schema());
  PipelineOptions opts;
  opts.rate_detectors = false;
  opts.skew_intervals = 2;
  std::vector<AnomalyAlert> alerts;
  StreamPipeline p(default_event_schema(), net, opts, [&](const AnomalyAlert& a) { alerts.push_back(a); });
  const Instant t0 = testing::epoch_day(2021, 5, 17);
  const Seconds hour{3600};
  p.push_line("not json");
  p.push_line("{\"ts\":\"2021-05-17T00:00:00Z\",\"src\":\"a\",\"bytes\":1}");  // schema mismatch
  p.push(event(t0 + 10 * hour, "a", 30));
  p.push(event(t0 + 10 * hour, "a", 30));  // duplicate
  p.push(event(t0 + 9 * hour, "b", 30));   // within skew
  p.push(event(t0 + 7 * hour, "b", 30));   // late
  p.push_line("");
  p.finish();
  const auto& c = p.counts();
  CHECK(c.dropped_malformed == 2);
  CHECK(c.dropped_duplicate == 1);
  CHECK(c.dropped_late == 1);
  CHECK(c.classified == 2);
  CHECK(c.records_in == accounted(c));
}

TEST_CASE("strict mode alerts on unknown records") {
  const std::vector<std::pair<BitVector, PacketClass>> samples = {
      {symbolize(event(Instant{}, "x", 30), default_event_schema()).bits, PacketClass::Known}};
  const auto net = CC4Network::train(samples, 0);
  const Instant t0 = testing::epoch_day(2021, 5, 17);
  for (bool strict : {false, true}) {
    PipelineOptions opts;
    opts.rate_detectors = false;
    opts.strict = strict;
    std::vector<AnomalyAlert> alerts;
    StreamPipeline p(default_event_schema(), net, opts, [&](const AnomalyAlert& a) { alerts.push_back(a); });
    p.push(event(t0, "x", 30));
    p.push(event(t0, "y", 30, "icmp"));
    p.finish();
    CHECK(p.counts().by_class.at(PacketClass::Unknown) == 1);
    REQUIRE(alerts.size() == (strict ? 1u : 0u));
    if (strict) {
      CHECK(alerts[0].source == "y");
      CHECK(alerts[0].severity == Severity::Warning);
      CHECK(alerts[0].ambiguous == true);
    }
  }
}

TEST_CASE("a throwing sink surfaces as SinkFailure") {
  const auto trace = generate_trace(default_sim_config(Scenario::Flood));
  const auto net = network_from(trace, default_event_schema());
  PipelineOptions opts;
  opts.rate_detectors = false;
  std::istringstream in(trace.events_jsonl);
  bool thrown = false;
  try {
    run_pipeline(in, default_event_schema(), net, opts,
                 [](const AnomalyAlert&) { throw std::runtime_error("disk full"); });
  } catch (const Error& e) {
    thrown = e.code() == ErrorCode::SinkFailure;
  }
  CHECK(thrown);
}

TEST_CASE("flow adapter") {
  FlowRecord f;
  f.flow_id = "10.20.0.21-10.20.0.1-51000-5353-17";
  f.timestamp = testing::epoch_day(2021, 5, 17);
  f.fwd_pkt_len_mean = 1024.0;
  f.value = 1024.0;
  const auto e = event_from_flow(f);
  CHECK(e.source_id == "10.20.0.21");
  CHECK(std::get<std::string>(e.fields.at("proto")) == "udp");
  CHECK(std::get<std::string>(e.fields.at("port_class")) == "registered");
  CHECK(std::get<double>(e.fields.at("bytes")) == 1024.0);
  CHECK(symbolize(e, default_event_schema()).bits.size() == 21);
}

TEST_CASE("property: counts always add up under shuffled, noisy input") {
  const auto trace = generate_trace(default_sim_config(Scenario::Flood));
  const auto net = network_from(trace, default_event_schema());
  std::vector<std::string> lines;
  {
    std::istringstream in(trace.events_jsonl);
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
  }
  std::mt19937_64 rng(71);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<std::string> noisy;
    for (const auto& l : lines) {
      const auto roll = testing::uniform(rng, 0, 99);
      if (roll < 2) noisy.push_back("{broken");
      noisy.push_back(l);
      if (roll >= 97) noisy.push_back(l);
    }
    // Local disorder: swap neighbours at random distances.
    for (std::size_t i = 0; i + 1 < noisy.size(); ++i) {
      const auto j = i + static_cast<std::size_t>(testing::uniform(rng, 0, 40));
      if (j < noisy.size() && testing::uniform(rng, 0, 9) == 0) std::swap(noisy[i], noisy[j]);
    }
    std::string text;
    for (const auto& l : noisy) text += l + "\n";
    PipelineOptions opts;
    opts.skew_intervals = static_cast<std::size_t>(testing::uniform(rng, 0, 5));
    opts.rate_detectors = trial % 2 == 0;
    const auto r = run(text, net, opts);
    CHECK(r.counts.records_in == noisy.size());
    CHECK(r.counts.records_in == accounted(r.counts));
    std::size_t by_class = 0;
    for (const auto& [cls, n] : r.counts.by_class) by_class += n;
    CHECK(by_class == r.counts.classified);
    CHECK(r.counts.alerts_emitted == r.alerts.size());
    for (std::size_t i = 1; i < r.alerts.size(); ++i) {
      CHECK(r.alerts[i - 1].timestamp <= r.alerts[i].timestamp);
    }
  }
}
