#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "citywatch/time.hpp"

namespace citywatch {

using FieldValue = std::variant<std::string, double>;

enum class PacketClass { Known, Unknown, Attack };

std::string_view to_string(PacketClass cls) noexcept;
std::optional<PacketClass> parse_packet_class(std::string_view name);

/// One gateway event. `label` is only read when the record is used as a
/// training sample.
struct EventLogRecord {
  Instant timestamp{};
  std::string source_id;
  std::map<std::string, FieldValue> fields;
  std::optional<PacketClass> label;

  bool operator==(const EventLogRecord&) const = default;
};

/// {"ts": ISO-8601, "src": id, "class"?: label, ...fields}
EventLogRecord event_from_json_line(std::string_view line);
std::string to_json_line(const EventLogRecord& record);
std::vector<EventLogRecord> read_events_file(const std::string& path);

// ---------------------------------------------------------------------------
// Symbolization

using BitVector = std::vector<std::uint8_t>;  // one 0/1 entry per bit

std::string to_bit_string(const BitVector& bits);
BitVector parse_bit_string(std::string_view text);
std::size_t hamming_distance(const BitVector& a, const BitVector& b);

struct OneHot {
  std::vector<std::string> vocabulary;
};

/// edges.size() + 1 bins; a value sets the bit of its bin and every lower
/// bin. Bin index = number of edges <= value.
struct Thermometer {
  std::vector<double> edges;
};

struct FieldEncoder {
  std::string name;
  std::variant<OneHot, Thermometer> encoder;

  std::size_t width() const noexcept;
};

struct SymbolSchema {
  std::vector<FieldEncoder> fields;

  std::size_t total_bits() const noexcept;
};

/// Schema JSON: {"fields": [{"name", "one_hot": [...]} | {"name", "thermometer": [...]}]}
SymbolSchema schema_from_json(const std::string& text);
std::string to_json(const SymbolSchema& schema);
/// Schema matching the simulator's event log.
SymbolSchema default_event_schema();

struct Symbolized {
  BitVector bits;
  bool unknown = false;  // some categorical value was out of vocabulary
};

/// Throws SchemaMismatch when the record's field names differ from the
/// schema or a value has the wrong type for its encoder.
Symbolized symbolize(const EventLogRecord& record, const SymbolSchema& schema);

// ---------------------------------------------------------------------------
// Corner-classification network

struct HiddenNeuron {
  BitVector corner;  // the training vector
  std::vector<int> weights;  // +1 where corner bit is 1, -1 elsewhere
  int bias = 0;              // radius - ones(corner) + 1
  PacketClass cls = PacketClass::Known;

  /// Weighted sum over the probe plus bias.
  int activation(const BitVector& probe) const;
  bool fires(const BitVector& probe) const { return activation(probe) > 0; }
};

struct Classification {
  PacketClass cls = PacketClass::Unknown;
  bool ambiguous = false;
  std::map<PacketClass, int> scores;
  std::size_t firing = 0;
};

/// Three-layer binary network built in one pass: one hidden neuron per
/// training sample that fires exactly on probes within Hamming distance
/// `radius` of its sample, and an output layer voting +1 for the neuron's
/// class and -1 for the others.
class CC4Network {
 public:
  static CC4Network train(std::span<const std::pair<BitVector, PacketClass>> samples,
                          std::size_t radius);

  std::size_t radius() const noexcept { return radius_; }
  std::size_t width() const noexcept { return width_; }
  const std::vector<HiddenNeuron>& neurons() const noexcept { return neurons_; }

  /// Highest class score wins. No firing neuron gives Unknown (ambiguous);
  /// score ties resolve Known, then Attack, then Unknown, and are flagged.
  Classification classify(const BitVector& probe) const;

  /// {"radius", "width", "vectors": ["0101..."], "classes": [...]}
  std::string to_json() const;
  static CC4Network from_json(const std::string& text);

 private:
  std::size_t radius_ = 0;
  std::size_t width_ = 0;
  std::vector<HiddenNeuron> neurons_;
};

}  // namespace citywatch
