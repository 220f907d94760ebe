#include "citywatch/cc4.hpp"

#include <algorithm>
#include <fstream>

#include <json.hpp>

#include "citywatch/error.hpp"

namespace citywatch {
namespace {

using ojson = nlohmann::ordered_json;

constexpr PacketClass kTieOrder[] = {PacketClass::Known, PacketClass::Attack, PacketClass::Unknown};

HiddenNeuron make_neuron(const BitVector& corner, PacketClass cls, std::size_t radius) {
  HiddenNeuron n;
  n.corner = corner;
  n.cls = cls;
  n.weights.reserve(corner.size());
  int ones = 0;
  for (std::uint8_t bit : corner) {
    n.weights.push_back(bit ? 1 : -1);
    ones += bit ? 1 : 0;
  }
  n.bias = static_cast<int>(radius) - ones + 1;
  return n;
}

}  // namespace

std::string_view to_string(PacketClass cls) noexcept {
  switch (cls) {
    case PacketClass::Known: return "Known";
    case PacketClass::Unknown: return "Unknown";
    case PacketClass::Attack: return "Attack";
  }
  return "Unknown";
}

std::optional<PacketClass> parse_packet_class(std::string_view name) {
  if (name == "Known") return PacketClass::Known;
  if (name == "Unknown") return PacketClass::Unknown;
  if (name == "Attack") return PacketClass::Attack;
  return std::nullopt;
}

EventLogRecord event_from_json_line(std::string_view line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::ParseFailure, std::string("event line: ") + e.what());
  }
  if (!j.is_object()) fail(ErrorCode::ParseFailure, "event line is not an object");
  if (!j.contains("ts") || !j["ts"].is_string()) fail(ErrorCode::ParseFailure, "event has no ts");
  if (!j.contains("src") || !j["src"].is_string()) fail(ErrorCode::ParseFailure, "event has no src");
  EventLogRecord r;
  const auto ts = parse_iso8601(j["ts"].get<std::string>());
  if (!ts) fail(ErrorCode::ParseFailure, "event ts is not ISO-8601");
  r.timestamp = *ts;
  r.source_id = j["src"].get<std::string>();
  if (r.source_id.empty()) fail(ErrorCode::ParseFailure, "event src is empty");
  for (const auto& [key, value] : j.items()) {
    if (key == "ts" || key == "src") continue;
    if (key == "class") {
      if (!value.is_string()) fail(ErrorCode::ParseFailure, "class must be a string");
      r.label = parse_packet_class(value.get<std::string>());
      if (!r.label) fail(ErrorCode::ParseFailure, "unknown class " + value.get<std::string>());
      continue;
    }
    if (value.is_string()) {
      r.fields.emplace(key, value.get<std::string>());
    } else if (value.is_number()) {
      r.fields.emplace(key, value.get<double>());
    } else {
      fail(ErrorCode::ParseFailure, "field " + key + " must be a string or a number");
    }
  }
  return r;
}

std::string to_json_line(const EventLogRecord& record) {
  ojson j;
  j["ts"] = format_iso8601(record.timestamp);
  j["src"] = record.source_id;
  for (const auto& [key, value] : record.fields) {
    if (const auto* s = std::get_if<std::string>(&value)) {
      j[key] = *s;
    } else {
      j[key] = std::get<double>(value);
    }
  }
  if (record.label) j["class"] = std::string(to_string(*record.label));
  return j.dump();
}

std::vector<EventLogRecord> read_events_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoFailure, "cannot open " + path);
  std::vector<EventLogRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    out.push_back(event_from_json_line(line));
  }
  return out;
}

std::string to_bit_string(const BitVector& bits) {
  std::string s;
  s.reserve(bits.size());
  for (std::uint8_t b : bits) s.push_back(b ? '1' : '0');
  return s;
}

BitVector parse_bit_string(std::string_view text) {
  BitVector bits;
  bits.reserve(text.size());
  for (char c : text) {
    if (c != '0' && c != '1') fail(ErrorCode::ParseFailure, "bit string holds a non-binary digit");
    bits.push_back(c == '1' ? 1 : 0);
  }
  return bits;
}

std::size_t hamming_distance(const BitVector& a, const BitVector& b) {
  if (a.size() != b.size()) fail(ErrorCode::WidthMismatch, "vectors differ in width");
  std::size_t d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d += (a[i] != 0) != (b[i] != 0) ? 1 : 0;
  return d;
}

std::size_t FieldEncoder::width() const noexcept {
  if (const auto* oh = std::get_if<OneHot>(&encoder)) return oh->vocabulary.size();
  return std::get<Thermometer>(encoder).edges.size() + 1;
}

std::size_t SymbolSchema::total_bits() const noexcept {
  std::size_t total = 0;
  for (const auto& f : fields) total += f.width();
  return total;
}

SymbolSchema schema_from_json(const std::string& text) {
  SymbolSchema schema;
  try {
    const auto j = nlohmann::json::parse(text);
    for (const auto& f : j.at("fields")) {
      FieldEncoder enc;
      enc.name = f.at("name").get<std::string>();
      if (f.contains("one_hot")) {
        OneHot oh{f["one_hot"].get<std::vector<std::string>>()};
        std::vector<std::string> sorted = oh.vocabulary;
        std::sort(sorted.begin(), sorted.end());
        if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
          fail(ErrorCode::InvalidArgument, "vocabulary of " + enc.name + " repeats a value");
        }
        enc.encoder = std::move(oh);
      } else if (f.contains("thermometer")) {
        Thermometer th{f["thermometer"].get<std::vector<double>>()};
        if (!std::is_sorted(th.edges.begin(), th.edges.end()) ||
            std::adjacent_find(th.edges.begin(), th.edges.end()) != th.edges.end()) {
          fail(ErrorCode::InvalidArgument, "bin edges of " + enc.name + " must increase strictly");
        }
        enc.encoder = std::move(th);
      } else {
        fail(ErrorCode::InvalidArgument, "field " + enc.name + " has no encoder");
      }
      schema.fields.push_back(std::move(enc));
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::ParseFailure, std::string("schema: ") + e.what());
  }
  return schema;
}

std::string to_json(const SymbolSchema& schema) {
  ojson fields = ojson::array();
  for (const auto& f : schema.fields) {
    ojson o;
    o["name"] = f.name;
    if (const auto* oh = std::get_if<OneHot>(&f.encoder)) {
      o["one_hot"] = oh->vocabulary;
    } else {
      o["thermometer"] = std::get<Thermometer>(f.encoder).edges;
    }
    fields.push_back(std::move(o));
  }
  ojson j;
  j["fields"] = std::move(fields);
  return j.dump(2);
}

SymbolSchema default_event_schema() {
  SymbolSchema s;
  s.fields.push_back({"bytes", Thermometer{{1e3, 1e4, 1e5, 1e6}}});
  s.fields.push_back({"packets", Thermometer{{10, 25, 50, 100, 200, 400}}});
  s.fields.push_back({"port_class", OneHot{{"well_known", "registered", "dynamic"}}});
  s.fields.push_back({"proto", OneHot{{"tcp", "udp", "icmp"}}});
  s.fields.push_back({"status", OneHot{{"ok", "retry", "error"}}});
  return s;
}

Symbolized symbolize(const EventLogRecord& record, const SymbolSchema& schema) {
  if (record.fields.size() != schema.fields.size()) {
    fail(ErrorCode::SchemaMismatch, "record has " + std::to_string(record.fields.size()) +
                                        " fields, schema has " +
                                        std::to_string(schema.fields.size()));
  }
  Symbolized out;
  out.bits.reserve(schema.total_bits());
  for (const auto& enc : schema.fields) {
    const auto it = record.fields.find(enc.name);
    if (it == record.fields.end()) fail(ErrorCode::SchemaMismatch, "record lacks field " + enc.name);
    if (const auto* oh = std::get_if<OneHot>(&enc.encoder)) {
      const auto* value = std::get_if<std::string>(&it->second);
      if (!value) fail(ErrorCode::SchemaMismatch, "field " + enc.name + " must be categorical");
      bool hit = false;
      for (const auto& word : oh->vocabulary) {
        const bool match = word == *value;
        hit = hit || match;
        out.bits.push_back(match ? 1 : 0);
      }
      if (!hit) out.unknown = true;
    } else {
      const auto* value = std::get_if<double>(&it->second);
      if (!value) fail(ErrorCode::SchemaMismatch, "field " + enc.name + " must be numeric");
      const auto& edges = std::get<Thermometer>(enc.encoder).edges;
      const auto bin = static_cast<std::size_t>(
          std::upper_bound(edges.begin(), edges.end(), *value) - edges.begin());
      for (std::size_t b = 0; b <= edges.size(); ++b) out.bits.push_back(b <= bin ? 1 : 0);
    }
  }
  return out;
}

int HiddenNeuron::activation(const BitVector& probe) const {
  if (probe.size() != weights.size()) fail(ErrorCode::WidthMismatch, "probe width differs");
  int sum = bias;
  for (std::size_t i = 0; i < probe.size(); ++i) {
    if (probe[i]) sum += weights[i];
  }
  return sum;
}

CC4Network CC4Network::train(std::span<const std::pair<BitVector, PacketClass>> samples,
                             std::size_t radius) {
  if (samples.empty()) fail(ErrorCode::EmptyTrainingSet, "no training samples");
  CC4Network net;
  net.radius_ = radius;
  net.width_ = samples.front().first.size();
  net.neurons_.reserve(samples.size());
  for (const auto& [bits, cls] : samples) {
    if (bits.size() != net.width_) fail(ErrorCode::WidthMismatch, "training vectors differ in width");
    net.neurons_.push_back(make_neuron(bits, cls, radius));
  }
  return net;
}

Classification CC4Network::classify(const BitVector& probe) const {
  if (probe.size() != width_) {
    fail(ErrorCode::WidthMismatch, "probe has " + std::to_string(probe.size()) +
                                       " bits, network expects " + std::to_string(width_));
  }
  Classification out;
  for (PacketClass c : kTieOrder) out.scores[c] = 0;
  for (const auto& n : neurons_) {
    if (!n.fires(probe)) continue;
    ++out.firing;
    for (auto& [cls, score] : out.scores) score += cls == n.cls ? 1 : -1;
  }
  if (out.firing == 0) {
    out.cls = PacketClass::Unknown;
    out.ambiguous = true;
    return out;
  }
  int best = out.scores[kTieOrder[0]];
  out.cls = kTieOrder[0];
  std::size_t at_best = 0;
  for (PacketClass c : kTieOrder) {
    if (out.scores[c] > best) {
      best = out.scores[c];
      out.cls = c;
    }
  }
  for (PacketClass c : kTieOrder) at_best += out.scores[c] == best ? 1 : 0;
  out.ambiguous = at_best > 1;
  return out;
}

std::string CC4Network::to_json() const {
  ojson j;
  j["radius"] = radius_;
  j["width"] = width_;
  ojson vectors = ojson::array();
  ojson classes = ojson::array();
  for (const auto& n : neurons_) {
    vectors.push_back(to_bit_string(n.corner));
    classes.push_back(std::string(citywatch::to_string(n.cls)));
  }
  j["vectors"] = std::move(vectors);
  j["classes"] = std::move(classes);
  return j.dump();
}

CC4Network CC4Network::from_json(const std::string& text) {
  std::vector<std::pair<BitVector, PacketClass>> samples;
  std::size_t radius = 0;
  try {
    const auto j = nlohmann::json::parse(text);
    radius = j.at("radius").get<std::size_t>();
    const auto& vectors = j.at("vectors");
    const auto& classes = j.at("classes");
    if (vectors.size() != classes.size()) {
      fail(ErrorCode::ParseFailure, "network has unequal vector and class counts");
    }
    for (std::size_t i = 0; i < vectors.size(); ++i) {
      const auto cls = parse_packet_class(classes[i].get<std::string>());
      if (!cls) fail(ErrorCode::ParseFailure, "unknown class in network file");
      samples.emplace_back(parse_bit_string(vectors[i].get<std::string>()), *cls);
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::ParseFailure, std::string("network: ") + e.what());
  }
  return train(samples, radius);
}

}  // namespace citywatch
