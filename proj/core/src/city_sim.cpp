#include "citywatch/city_sim.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <tuple>

#include <json.hpp>

#include "citywatch/cc4.hpp"
#include "citywatch/csv.hpp"
#include "citywatch/error.hpp"
#include "citywatch/flow_ingest.hpp"

namespace citywatch {
namespace {

using ojson = nlohmann::ordered_json;

struct KindProfile {
  long dport;
  const char* port_class;
  double pkt_len_mean;
  double pkt_len_sd;
};

KindProfile profile(DeviceKind kind) {
  switch (kind) {
    case DeviceKind::Streetlight: return {1883, "registered", 64.0, 4.0};
    case DeviceKind::Camera: return {554, "well_known", 880.0, 60.0};
    case DeviceKind::WaterSensor: return {1883, "registered", 48.0, 3.0};
  }
  return {1883, "registered", 64.0, 4.0};
}

constexpr double kFloodPktLen = 1024.0;

double round2(double v) { return std::round(v * 100.0) / 100.0; }

struct FlowRow {
  Instant ts;
  std::string flow_id;
  double pkt_len;
  std::int64_t init_fwd;
  std::int64_t init_bwd;
  std::int64_t seg_min;
};

std::string fake_identity(std::size_t n) {
  return "10.66." + std::to_string(n / 250) + "." + std::to_string(n % 250 + 1);
}

EventLogRecord summary_event(Instant ts, const std::string& src, const std::string& proto,
                             const std::string& port_class, double packets, double bytes) {
  EventLogRecord e;
  e.timestamp = ts;
  e.source_id = src;
  e.fields["bytes"] = bytes;
  e.fields["packets"] = packets;
  e.fields["port_class"] = port_class;
  e.fields["proto"] = proto;
  e.fields["status"] = std::string("ok");
  return e;
}

const ojson& require(const ojson& j, const char* key) {
  if (!j.contains(key)) fail(ErrorCode::InvalidArgument, std::string("missing key ") + key);
  return j.at(key);
}

void reject_unknown(const ojson& j, std::initializer_list<std::string_view> allowed,
                    const std::string& where) {
  for (const auto& [key, value] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      fail(ErrorCode::InvalidArgument, "unknown key " + where + "." + key);
    }
  }
}

double baseline_rate(const DeviceSpec& d, std::size_t t, double period, double noise) {
  const double phase = std::sin(2.0 * std::numbers::pi * static_cast<double>(t) / period);
  const double sign = d.kind == DeviceKind::Streetlight ? -1.0 : 1.0;
  return std::max(0.0, d.base_rate + sign * d.diurnal_amplitude * phase + noise);
}

}  // namespace

std::string_view to_string(DeviceKind kind) noexcept {
  switch (kind) {
    case DeviceKind::Streetlight: return "streetlight";
    case DeviceKind::Camera: return "camera";
    case DeviceKind::WaterSensor: return "water_sensor";
  }
  return "camera";
}

std::optional<DeviceKind> parse_device_kind(std::string_view name) {
  if (name == "streetlight") return DeviceKind::Streetlight;
  if (name == "camera") return DeviceKind::Camera;
  if (name == "water_sensor") return DeviceKind::WaterSensor;
  return std::nullopt;
}

std::string_view to_string(AttackKind kind) noexcept {
  switch (kind) {
    case AttackKind::UdpFlood: return "UdpFlood";
    case AttackKind::SilenceAfterOverflow: return "SilenceAfterOverflow";
    case AttackKind::Sybil: return "Sybil";
  }
  return "UdpFlood";
}

std::optional<AttackKind> parse_attack_kind(std::string_view name) {
  if (name == "UdpFlood") return AttackKind::UdpFlood;
  if (name == "SilenceAfterOverflow") return AttackKind::SilenceAfterOverflow;
  if (name == "Sybil") return AttackKind::Sybil;
  return std::nullopt;
}

double SimConfig::period_day() const noexcept {
  return 86400.0 / static_cast<double>(interval.count());
}

std::optional<Scenario> parse_scenario(std::string_view name) {
  if (name == "baseline") return Scenario::Baseline;
  if (name == "flood") return Scenario::Flood;
  if (name == "silence") return Scenario::Silence;
  if (name == "sybil") return Scenario::Sybil;
  if (name == "mixed") return Scenario::Mixed;
  return std::nullopt;
}

SimConfig default_sim_config(Scenario scenario) {
  SimConfig c;
  c.fleet = {
      {"10.20.0.11", DeviceKind::Streetlight, 30.0, 12.0, 2.0},
      {"10.20.0.21", DeviceKind::Camera, 60.0, 20.0, 3.0},
      {"10.20.0.31", DeviceKind::WaterSensor, 20.0, 6.0, 1.5},
  };
  const AttackScript flood{AttackKind::UdpFlood, "10.20.0.21", 240, 264};
  const AttackScript silence{AttackKind::SilenceAfterOverflow, "10.20.0.31", 260, 272};
  const AttackScript sybil{AttackKind::Sybil, "10.20.0.11", 280, 292, 10.0, 25};
  switch (scenario) {
    case Scenario::Baseline: break;
    case Scenario::Flood: c.attacks = {flood}; break;
    case Scenario::Silence: c.attacks = {silence}; break;
    case Scenario::Sybil: c.attacks = {sybil}; break;
    case Scenario::Mixed: c.attacks = {flood, silence, sybil}; break;
  }
  return c;
}

void validate(const SimConfig& config) {
  if (config.duration == 0) fail(ErrorCode::InvalidArgument, "duration must be at least 1");
  if (config.interval <= Seconds::zero()) fail(ErrorCode::InvalidArgument, "interval must be positive");
  if (config.fleet.empty()) fail(ErrorCode::InvalidArgument, "fleet is empty");
  std::set<std::string> ids;
  for (const auto& d : config.fleet) {
    if (d.id.empty() || d.id.find('-') != std::string::npos) {
      fail(ErrorCode::InvalidArgument, "device id must be nonempty and free of '-'");
    }
    if (!ids.insert(d.id).second) fail(ErrorCode::InvalidArgument, "duplicate device " + d.id);
    if (!(d.base_rate > 0.0)) fail(ErrorCode::InvalidArgument, d.id + ": base_rate must be > 0");
    if (!(d.noise_std >= 0.0)) fail(ErrorCode::InvalidArgument, d.id + ": noise_std must be >= 0");
    if (!std::isfinite(d.diurnal_amplitude)) {
      fail(ErrorCode::InvalidArgument, d.id + ": diurnal_amplitude must be finite");
    }
  }
  for (std::size_t i = 0; i < config.attacks.size(); ++i) {
    const auto& a = config.attacks[i];
    if (!ids.count(a.target_id)) fail(ErrorCode::InvalidScript, "unknown target " + a.target_id);
    if (a.start >= a.end || a.end > config.duration) {
      fail(ErrorCode::InvalidScript, "attack window [" + std::to_string(a.start) + ", " +
                                         std::to_string(a.end) + ") is empty or out of range");
    }
    if (a.kind == AttackKind::UdpFlood && !(a.magnitude > 1.0)) {
      fail(ErrorCode::InvalidScript, "flood magnitude must exceed 1");
    }
    if (a.kind == AttackKind::Sybil && a.fake_id_count == 0) {
      fail(ErrorCode::InvalidScript, "Sybil needs at least one fake identity");
    }
    for (std::size_t j = 0; j < i; ++j) {
      const auto& b = config.attacks[j];
      if (b.target_id == a.target_id && a.start < b.end && b.start < a.end) {
        fail(ErrorCode::InvalidScript, "overlapping scripts on " + a.target_id);
      }
    }
  }
}

SimConfig sim_config_from_json(const std::string& text) {
  ojson j;
  try {
    j = ojson::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::ParseFailure, std::string("simulator config: ") + e.what());
  }
  SimConfig c = default_sim_config(Scenario::Baseline);
  try {
    reject_unknown(j,
                   {"scenario", "seed", "duration", "interval_seconds", "start", "gateway_id",
                    "fleet", "attacks"},
                   "simulator");
    if (j.contains("scenario")) {
      const auto scenario = parse_scenario(j["scenario"].get<std::string>());
      if (!scenario) fail(ErrorCode::InvalidArgument, "unknown scenario");
      c = default_sim_config(*scenario);
    }
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("duration")) c.duration = j["duration"].get<std::size_t>();
    if (j.contains("interval_seconds")) c.interval = Seconds{j["interval_seconds"].get<std::int64_t>()};
    if (j.contains("start")) {
      const auto t = parse_iso8601(j["start"].get<std::string>());
      if (!t) fail(ErrorCode::InvalidArgument, "simulator.start is not ISO-8601");
      c.start = *t;
    }
    if (j.contains("gateway_id")) c.gateway_id = j["gateway_id"].get<std::string>();
    if (j.contains("fleet")) {
      c.fleet.clear();
      for (const auto& d : j["fleet"]) {
        reject_unknown(d, {"id", "kind", "base_rate", "diurnal_amplitude", "noise_std"}, "fleet[]");
        DeviceSpec spec;
        spec.id = require(d, "id").get<std::string>();
        const auto kind = parse_device_kind(require(d, "kind").get<std::string>());
        if (!kind) fail(ErrorCode::InvalidArgument, "unknown device kind for " + spec.id);
        spec.kind = *kind;
        spec.base_rate = require(d, "base_rate").get<double>();
        spec.diurnal_amplitude = d.value("diurnal_amplitude", 0.0);
        spec.noise_std = d.value("noise_std", 0.0);
        c.fleet.push_back(std::move(spec));
      }
    }
    if (j.contains("attacks")) {
      c.attacks.clear();
      for (const auto& a : j["attacks"]) {
        reject_unknown(a, {"kind", "target_id", "start", "end", "magnitude", "fake_id_count"},
                       "attacks[]");
        AttackScript s;
        const auto kind = parse_attack_kind(require(a, "kind").get<std::string>());
        if (!kind) fail(ErrorCode::InvalidScript, "unknown attack kind");
        s.kind = *kind;
        s.target_id = require(a, "target_id").get<std::string>();
        s.start = require(a, "start").get<std::size_t>();
        s.end = require(a, "end").get<std::size_t>();
        s.magnitude = a.value("magnitude", 10.0);
        s.fake_id_count = a.value("fake_id_count", std::size_t{20});
        c.attacks.push_back(std::move(s));
      }
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::InvalidArgument, std::string("simulator config: ") + e.what());
  }
  return c;
}

std::string to_json(const SimConfig& config) {
  ojson j;
  j["seed"] = config.seed;
  j["duration"] = config.duration;
  j["interval_seconds"] = config.interval.count();
  j["start"] = format_iso8601(config.start);
  j["gateway_id"] = config.gateway_id;
  ojson fleet = ojson::array();
  for (const auto& d : config.fleet) {
    fleet.push_back({{"id", d.id},
                     {"kind", std::string(to_string(d.kind))},
                     {"base_rate", d.base_rate},
                     {"diurnal_amplitude", d.diurnal_amplitude},
                     {"noise_std", d.noise_std}});
  }
  j["fleet"] = std::move(fleet);
  ojson attacks = ojson::array();
  for (const auto& a : config.attacks) {
    ojson o{{"kind", std::string(to_string(a.kind))},
            {"target_id", a.target_id},
            {"start", a.start},
            {"end", a.end}};
    if (a.kind == AttackKind::UdpFlood) o["magnitude"] = a.magnitude;
    if (a.kind == AttackKind::Sybil) o["fake_id_count"] = a.fake_id_count;
    attacks.push_back(std::move(o));
  }
  j["attacks"] = std::move(attacks);
  return j.dump(2);
}

LabeledTrace generate_trace(const SimConfig& config) {
  validate(config);
  // Rate noise comes from one stream drawn for every device and interval;
  // row-level detail comes from a stream seeded per (interval, device), so
  // an attack changes nothing outside its own window.
  std::mt19937_64 rate_rng(config.seed);
  std::normal_distribution<double> rate_noise(0.0, 1.0);
  std::uniform_int_distribution<std::int64_t> offset(0, config.interval.count() - 1);
  std::uniform_int_distribution<long> ephemeral(49152, 65535);
  const double period = config.period_day();

  std::map<std::string, std::vector<const AttackScript*>> by_target;
  for (const auto& a : config.attacks) by_target[a.target_id].push_back(&a);
  auto active = [&](const std::string& id, std::size_t t) -> const AttackScript* {
    const auto it = by_target.find(id);
    if (it == by_target.end()) return nullptr;
    for (const AttackScript* a : it->second) {
      if (t >= a->start && t < a->end) return a;
    }
    return nullptr;
  };

  LabeledTrace trace;
  trace.labels.start = config.start;
  trace.labels.interval = config.interval;
  trace.labels.duration = config.duration;
  trace.labels.gateway_id = config.gateway_id;
  for (const auto& d : config.fleet) trace.rates[d.id].assign(config.duration, std::nullopt);

  std::vector<FlowRow> flows;
  std::vector<EventLogRecord> events;
  std::size_t fake_counter = 0;

  for (std::size_t t = 0; t < config.duration; ++t) {
    const Instant bucket = config.start + config.interval * static_cast<Seconds::rep>(t);
    for (std::size_t di = 0; di < config.fleet.size(); ++di) {
      const DeviceSpec& d = config.fleet[di];
      const KindProfile p = profile(d.kind);
      const double rate = baseline_rate(d, t, period, d.noise_std * rate_noise(rate_rng));
      std::seed_seq detail_seed{static_cast<std::uint32_t>(config.seed),
                                static_cast<std::uint32_t>(config.seed >> 32),
                                static_cast<std::uint32_t>(t), static_cast<std::uint32_t>(di)};
      std::mt19937_64 rng(detail_seed);
      std::normal_distribution<double> unit(0.0, 1.0);
      const AttackScript* attack = active(d.id, t);
      if (attack) trace.labels.rows.push_back({t, d.id, attack->kind});

      if (attack && attack->kind == AttackKind::SilenceAfterOverflow) continue;
      const double total_rate =
          attack && attack->kind == AttackKind::UdpFlood ? rate * attack->magnitude : rate;
      trace.rates[d.id][t] = total_rate;

      const auto normal = static_cast<std::size_t>(std::llround(rate));
      const auto total = static_cast<std::size_t>(std::llround(total_rate));
      double normal_bytes = 0.0;
      for (std::size_t k = 0; k < total; ++k) {
        const bool flood = k >= normal;
        const long sport = ephemeral(rng);
        const long dport = flood ? ephemeral(rng) : p.dport;
        const int proto = flood ? 17 : 6;
        const double len = flood ? kFloodPktLen + 32.0 * unit(rng)
                                 : p.pkt_len_mean + p.pkt_len_sd * unit(rng);
        const Instant ts = bucket + Seconds{offset(rng)};
        std::ostringstream id;
        id << d.id << '-' << config.gateway_id << '-' << sport << '-' << dport << '-' << proto;
        flows.push_back({ts, id.str(), round2(len), flood ? -1 : 8192, flood ? -1 : 29200,
                         flood ? 8 : 20});
        if (!flood) normal_bytes += round2(len);
      }
      events.push_back(summary_event(bucket, d.id, "tcp", p.port_class,
                                     static_cast<double>(normal), std::round(normal_bytes)));
      if (total > normal) {
        const double extra = static_cast<double>(total - normal);
        events.push_back(summary_event(bucket, d.id, "udp", "dynamic", extra,
                                       std::round(extra * kFloodPktLen)));
      }
      if (attack && attack->kind == AttackKind::Sybil) {
        std::uniform_int_distribution<int> few(1, 3);
        for (std::size_t f = 0; f < attack->fake_id_count; ++f) {
          const std::string fake = fake_identity(fake_counter++);
          const int packets = few(rng);
          const double len = p.pkt_len_mean + p.pkt_len_sd * unit(rng);
          const Instant ts = bucket + Seconds{offset(rng)};
          std::ostringstream id;
          id << fake << '-' << config.gateway_id << '-' << ephemeral(rng) << '-' << p.dport << "-6";
          flows.push_back({ts, id.str(), round2(len), 8192, 29200, 20});
          events.push_back(summary_event(bucket, fake, "tcp", p.port_class,
                                         static_cast<double>(packets),
                                         std::round(packets * round2(len))));
        }
      }
    }
  }

  std::stable_sort(flows.begin(), flows.end(), [](const FlowRow& a, const FlowRow& b) {
    return std::tie(a.ts, a.flow_id) < std::tie(b.ts, b.flow_id);
  });
  std::vector<FlowRecord> records;
  records.reserve(flows.size());
  for (const auto& f : flows) {
    FlowRecord r;
    r.flow_id = f.flow_id;
    r.timestamp = f.ts;
    r.fwd_pkt_len_mean = f.pkt_len;
    r.fwd_seg_size_avg = f.pkt_len;
    r.init_fwd_win_byts = f.init_fwd;
    r.init_bwd_win_byts = f.init_bwd;
    r.fwd_seg_size_min = f.seg_min;
    r.value = f.pkt_len;
    records.push_back(std::move(r));
  }
  std::ostringstream flow_out;
  write_flow_csv(records, flow_out, columns::kFwdPktLenMean);
  trace.flows_csv = flow_out.str();

  for (const auto& e : events) {
    trace.events_jsonl += to_json_line(e);
    trace.events_jsonl.push_back('\n');
  }

  std::sort(trace.labels.rows.begin(), trace.labels.rows.end(),
            [](const LabelRow& a, const LabelRow& b) {
              return std::tie(a.interval_index, a.device_id) < std::tie(b.interval_index, b.device_id);
            });
  trace.labels_csv = "interval_index,device_id,attack_kind\n";
  for (const auto& row : trace.labels.rows) {
    trace.labels_csv += csv::join({std::to_string(row.interval_index), row.device_id,
                                   std::string(to_string(row.kind))});
    trace.labels_csv.push_back('\n');
  }

  // Classifier training set: each device kind at random points of its day,
  // normal summaries as Known and flood bursts as Attack. A separate stream
  // keeps it fixed whatever the attack scripts are.
  std::mt19937_64 train_rng(config.seed ^ 0x63633454ULL);
  std::uniform_real_distribution<double> day(0.0, period);
  std::uniform_real_distribution<double> burst(3.0, 15.0);
  std::normal_distribution<double> unit(0.0, 1.0);
  const Instant epoch = config.start;
  for (const auto& d : config.fleet) {
    const KindProfile p = profile(d.kind);
    for (int k = 0; k < 24; ++k) {
      const auto t = static_cast<std::size_t>(day(train_rng));
      const double rate = baseline_rate(d, t, period, d.noise_std * unit(train_rng));
      const double packets = std::round(rate);
      EventLogRecord known = summary_event(epoch, d.id, "tcp", p.port_class, packets,
                                           std::round(packets * p.pkt_len_mean));
      known.label = PacketClass::Known;
      trace.cc4_train_jsonl += to_json_line(known) + "\n";
    }
    for (int k = 0; k < 12; ++k) {
      const auto t = static_cast<std::size_t>(day(train_rng));
      const double rate = baseline_rate(d, t, period, d.noise_std * unit(train_rng));
      const double extra = std::round(rate * (burst(train_rng) - 1.0));
      EventLogRecord attack =
          summary_event(epoch, d.id, "udp", "dynamic", extra, std::round(extra * kFloodPktLen));
      attack.label = PacketClass::Attack;
      trace.cc4_train_jsonl += to_json_line(attack) + "\n";
    }
  }

  ojson manifest;
  manifest["start"] = format_iso8601(config.start);
  manifest["interval_seconds"] = config.interval.count();
  manifest["duration"] = config.duration;
  manifest["gateway_id"] = config.gateway_id;
  manifest["config"] = ojson::parse(to_json(config));
  trace.manifest_json = manifest.dump(2) + "\n";
  return trace;
}

void write_trace(const LabeledTrace& trace, const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(ErrorCode::IoFailure, "cannot create " + dir + ": " + ec.message());
  auto put = [&](const char* name, const std::string& body) {
    const auto path = std::filesystem::path(dir) / name;
    std::ofstream out(path, std::ios::binary);
    out << body;
    if (!out) fail(ErrorCode::IoFailure, "cannot write " + path.string());
  };
  put("flows.csv", trace.flows_csv);
  put("events.jsonl", trace.events_jsonl);
  put("labels.csv", trace.labels_csv);
  put("cc4_train.jsonl", trace.cc4_train_jsonl);
  put("manifest.json", trace.manifest_json);
  put("schema.json", to_json(default_event_schema()) + "\n");
}

LabelSet read_labels(const std::string& dir) {
  const auto root = std::filesystem::path(dir);
  LabelSet set;
  {
    std::ifstream in(root / "manifest.json", std::ios::binary);
    if (!in) fail(ErrorCode::IoFailure, "cannot open " + (root / "manifest.json").string());
    try {
      const auto j = nlohmann::json::parse(in);
      const auto start = parse_iso8601(j.at("start").get<std::string>());
      if (!start) fail(ErrorCode::ParseFailure, "manifest start is not ISO-8601");
      set.start = *start;
      set.interval = Seconds{j.at("interval_seconds").get<std::int64_t>()};
      set.duration = j.at("duration").get<std::size_t>();
      set.gateway_id = j.value("gateway_id", std::string());
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::ParseFailure, std::string("manifest: ") + e.what());
    }
  }
  std::ifstream in(root / "labels.csv", std::ios::binary);
  if (!in) fail(ErrorCode::IoFailure, "cannot open " + (root / "labels.csv").string());
  csv::Reader reader(in);
  const auto header = reader.next();
  if (!header || *header != std::vector<std::string>{"interval_index", "device_id", "attack_kind"}) {
    fail(ErrorCode::MalformedHeader, "labels.csv header");
  }
  while (auto row = reader.next()) {
    if (row->size() != 3) fail(ErrorCode::ParseFailure, "labels.csv line " + std::to_string(reader.line()));
    const auto kind = parse_attack_kind((*row)[2]);
    if (!kind) fail(ErrorCode::ParseFailure, "unknown attack kind " + (*row)[2]);
    std::size_t index = 0;
    try {
      index = std::stoul((*row)[0]);
    } catch (const std::exception&) {
      fail(ErrorCode::ParseFailure, "bad interval index " + (*row)[0]);
    }
    set.rows.push_back({index, (*row)[1], *kind});
  }
  return set;
}

bool compatible(AlertKind alert, AttackKind attack) noexcept {
  switch (alert) {
    case AlertKind::Surge: return attack == AttackKind::UdpFlood;
    case AlertKind::Dropout: return attack == AttackKind::SilenceAfterOverflow;
    case AlertKind::IdentityFlood: return attack == AttackKind::Sybil;
    case AlertKind::Intrusion: return true;
  }
  return false;
}

DetectionScore score_detections(std::span<const AnomalyAlert> alerts, const LabelSet& labels) {
  DetectionScore score;
  std::vector<bool> detected(labels.rows.size(), false);
  for (const auto& alert : alerts) {
    if (alert.timestamp < labels.start) {
      fail(ErrorCode::TimeBaseMismatch, "alert precedes the trace");
    }
    const auto offset = alert.timestamp - labels.start;
    if (offset % labels.interval != Seconds::zero()) {
      fail(ErrorCode::TimeBaseMismatch, "alert at " + format_iso8601(alert.timestamp) +
                                            " is off the trace grid");
    }
    const auto first = static_cast<std::size_t>(offset / labels.interval);
    if (first >= labels.duration) fail(ErrorCode::TimeBaseMismatch, "alert after the trace");
    const std::size_t last = first + std::max<std::size_t>(alert.span, 1);
    const bool from_gateway = alert.source == "gateway" || alert.source == labels.gateway_id;

    bool hit = false;
    for (std::size_t i = 0; i < labels.rows.size(); ++i) {
      const LabelRow& row = labels.rows[i];
      if (row.interval_index < first || row.interval_index >= last) continue;
      if (!from_gateway && row.device_id != alert.source) continue;
      if (!compatible(alert.kind, row.kind)) continue;
      hit = true;
      detected[i] = true;
    }
    auto& counts = score.per_alert_kind[std::string(to_string(alert.kind))];
    if (hit) {
      ++score.true_positives;
      ++counts.true_positives;
    } else {
      ++score.false_positives;
      ++counts.false_positives;
    }
  }
  for (std::size_t i = 0; i < labels.rows.size(); ++i) {
    if (detected[i]) {
      ++score.labels_detected;
    } else {
      ++score.labels_missed;
      ++score.missed_per_attack_kind[std::string(to_string(labels.rows[i].kind))];
    }
  }
  if (!alerts.empty()) {
    score.precision = static_cast<double>(score.true_positives) / static_cast<double>(alerts.size());
  }
  if (!labels.rows.empty()) {
    score.recall = static_cast<double>(score.labels_detected) / static_cast<double>(labels.rows.size());
  }
  return score;
}

std::string to_json(const DetectionScore& score) {
  ojson j;
  j["precision"] = score.precision ? ojson(*score.precision) : ojson(nullptr);
  j["recall"] = score.recall ? ojson(*score.recall) : ojson(nullptr);
  j["true_positives"] = score.true_positives;
  j["false_positives"] = score.false_positives;
  j["labels_detected"] = score.labels_detected;
  j["labels_missed"] = score.labels_missed;
  ojson kinds = ojson::object();
  for (const auto& [kind, c] : score.per_alert_kind) {
    kinds[kind] = {{"true_positives", c.true_positives}, {"false_positives", c.false_positives}};
  }
  j["per_alert_kind"] = std::move(kinds);
  ojson missed = ojson::object();
  for (const auto& [kind, n] : score.missed_per_attack_kind) missed[kind] = n;
  j["missed_per_attack_kind"] = std::move(missed);
  return j.dump(2);
}

}  // namespace citywatch
