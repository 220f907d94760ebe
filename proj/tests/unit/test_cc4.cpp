#include <doctest.h>

#include <random>

#include "citywatch/cc4.hpp"
#include "citywatch/error.hpp"
#include "generators.hpp"

using namespace citywatch;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error raised");
  return ErrorCode::InvalidArgument;
}

using Sample = std::pair<BitVector, PacketClass>;

SymbolSchema single(FieldEncoder f) {
  SymbolSchema s;
  s.fields.push_back(std::move(f));
  return s;
}

EventLogRecord with_field(std::string name, FieldValue v) {
  EventLogRecord r;
  r.timestamp = testing::epoch_day(2021, 5, 17);
  r.source_id = "10.20.0.11";
  r.fields.emplace(std::move(name), std::move(v));
  return r;
}

BitVector random_bits(std::mt19937_64& rng, std::size_t n) {
  BitVector b(n);
  for (auto& x : b) x = static_cast<std::uint8_t>(testing::uniform(rng, 0, 1));
  return b;
}

BitVector from_index(std::size_t value, std::size_t n) {
  BitVector b(n);
  for (std::size_t i = 0; i < n; ++i) b[i] = static_cast<std::uint8_t>((value >> i) & 1U);
  return b;
}

}  // namespace

TEST_CASE("one-hot and thermometer codes") {
  const auto oh = single({"proto", OneHot{{"a", "b", "c"}}});
  auto s = symbolize(with_field("proto", std::string("b")), oh);
  CHECK(to_bit_string(s.bits) == "010");
  CHECK_FALSE(s.unknown);

  s = symbolize(with_field("proto", std::string("z")), oh);
  CHECK(to_bit_string(s.bits) == "000");
  CHECK(s.unknown);

  const auto th = single({"bytes", Thermometer{{25.0, 50.0, 75.0}}});
  CHECK(to_bit_string(symbolize(with_field("bytes", 45.0), th).bits) == "1100");
  CHECK(to_bit_string(symbolize(with_field("bytes", 0.0), th).bits) == "1000");
  CHECK(to_bit_string(symbolize(with_field("bytes", 50.0), th).bits) == "1110");
  CHECK(to_bit_string(symbolize(with_field("bytes", 99.0), th).bits) == "1111");
}

TEST_CASE("schema mismatches") {
  const auto oh = single({"proto", OneHot{{"a", "b"}}});
  CHECK(code_of([&] { symbolize(with_field("port", std::string("a")), oh); }) ==
        ErrorCode::SchemaMismatch);
  CHECK(code_of([&] { symbolize(with_field("proto", 3.0), oh); }) == ErrorCode::SchemaMismatch);
  auto extra = with_field("proto", std::string("a"));
  extra.fields.emplace("more", 1.0);
  CHECK(code_of([&] { symbolize(extra, oh); }) == ErrorCode::SchemaMismatch);
}

TEST_CASE("default schema is 21 bits and round trips through JSON") {
  const auto s = default_event_schema();
  CHECK(s.total_bits() == 21);
  CHECK(to_json(schema_from_json(to_json(s))) == to_json(s));
  CHECK(code_of([] { schema_from_json("{\"fields\": [{\"name\": \"x\"}]}"); }) ==
        ErrorCode::InvalidArgument);
  CHECK(code_of([] { schema_from_json("not json"); }) == ErrorCode::ParseFailure);
}

TEST_CASE("event JSON lines round trip") {
  const std::string line =
      "{\"ts\":\"2021-05-17T03:00:00Z\",\"src\":\"10.20.0.21\",\"class\":\"Attack\","
      "\"bytes\":12000.0,\"proto\":\"udp\"}";
  const auto r = event_from_json_line(line);
  CHECK(r.source_id == "10.20.0.21");
  CHECK(r.label == PacketClass::Attack);
  CHECK(std::get<double>(r.fields.at("bytes")) == 12000.0);
  CHECK(std::get<std::string>(r.fields.at("proto")) == "udp");
  CHECK(event_from_json_line(to_json_line(r)) == r);
}

TEST_CASE("bit strings and Hamming distance") {
  CHECK(to_bit_string(parse_bit_string("10110")) == "10110");
  CHECK(hamming_distance(parse_bit_string("1100"), parse_bit_string("1010")) == 2);
  CHECK(code_of([] { parse_bit_string("10x"); }) == ErrorCode::ParseFailure);
  CHECK(code_of([] { hamming_distance(parse_bit_string("1"), parse_bit_string("10")); }) ==
        ErrorCode::WidthMismatch);
}

TEST_CASE("neuron weights and bias follow the corner rule") {
  const std::vector<Sample> samples = {{parse_bit_string("101"), PacketClass::Known}};
  const auto net = CC4Network::train(samples, 0);
  REQUIRE(net.neurons().size() == 1);
  CHECK(net.neurons()[0].weights == std::vector<int>{1, -1, 1});
  CHECK(net.neurons()[0].bias == -1);
  CHECK(net.neurons()[0].activation(parse_bit_string("101")) == 1);
  CHECK_FALSE(net.neurons()[0].fires(parse_bit_string("100")));
}

TEST_CASE("training errors") {
  const std::vector<Sample> none;
  CHECK(code_of([&] { CC4Network::train(none, 1); }) == ErrorCode::EmptyTrainingSet);
  const std::vector<Sample> mixed = {{parse_bit_string("10"), PacketClass::Known},
                                     {parse_bit_string("101"), PacketClass::Attack}};
  CHECK(code_of([&] { CC4Network::train(mixed, 1); }) == ErrorCode::WidthMismatch);
  const std::vector<Sample> ok = {{parse_bit_string("10"), PacketClass::Known}};
  const auto net = CC4Network::train(ok, 1);
  CHECK(code_of([&] { net.classify(parse_bit_string("1")); }) == ErrorCode::WidthMismatch);
}

TEST_CASE("radius lemma holds over every 10-bit probe") {
  std::mt19937_64 rng(61);
  for (int trial = 0; trial < 5; ++trial) {
    const std::vector<Sample> samples = {{random_bits(rng, 10), PacketClass::Attack}};
    const auto net = CC4Network::train(samples, 2);
    const auto& neuron = net.neurons()[0];
    for (std::size_t v = 0; v < 1024; ++v) {
      const auto probe = from_index(v, 10);
      CHECK(neuron.fires(probe) == (hamming_distance(probe, samples[0].first) <= 2));
    }
  }
}

TEST_CASE("classification examples") {
  const std::vector<Sample> samples = {{parse_bit_string("11110000"), PacketClass::Known},
                                       {parse_bit_string("00001111"), PacketClass::Attack}};
  auto net = CC4Network::train(samples, 0);
  auto c = net.classify(samples[0].first);
  CHECK(c.cls == PacketClass::Known);
  CHECK_FALSE(c.ambiguous);
  c = net.classify(samples[1].first);
  CHECK(c.cls == PacketClass::Attack);

  c = net.classify(parse_bit_string("11100000"));
  CHECK(c.cls == PacketClass::Unknown);
  CHECK(c.ambiguous);
  CHECK(c.firing == 0);

  // Distance 4 from both samples; with radius 4 both fire.
  net = CC4Network::train(samples, 4);
  c = net.classify(parse_bit_string("11000011"));
  CHECK(c.firing == 2);
  CHECK(c.cls == PacketClass::Known);
  CHECK(c.ambiguous);
  CHECK(c.scores.at(PacketClass::Known) == 0);
  CHECK(c.scores.at(PacketClass::Attack) == 0);
  CHECK(c.scores.at(PacketClass::Unknown) == -2);
}

TEST_CASE("network JSON round trip") {
  std::mt19937_64 rng(62);
  std::vector<Sample> samples;
  for (int i = 0; i < 20; ++i) {
    samples.emplace_back(random_bits(rng, 21), i % 3 == 0 ? PacketClass::Attack : PacketClass::Known);
  }
  const auto net = CC4Network::train(samples, 2);
  const auto back = CC4Network::from_json(net.to_json());
  CHECK(back.to_json() == net.to_json());
  CHECK(back.radius() == 2);
  CHECK(back.width() == 21);
  for (int i = 0; i < 200; ++i) {
    const auto probe = random_bits(rng, 21);
    CHECK(back.classify(probe).cls == net.classify(probe).cls);
  }
  CHECK(code_of([] { CC4Network::from_json("{\"radius\": 1}"); }) == ErrorCode::ParseFailure);
}

TEST_CASE("property: radius zero memorizes distinct training vectors") {
  std::mt19937_64 rng(63);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Sample> samples;
    std::map<BitVector, PacketClass> seen;
    for (int i = 0; i < 30; ++i) {
      auto b = random_bits(rng, 16);
      if (seen.count(b)) continue;
      const auto cls = testing::uniform(rng, 0, 1) ? PacketClass::Attack : PacketClass::Known;
      seen.emplace(b, cls);
      samples.emplace_back(std::move(b), cls);
    }
    const auto net = CC4Network::train(samples, 0);
    CHECK(net.neurons().size() == samples.size());
    for (const auto& [bits, cls] : samples) {
      const auto c = net.classify(bits);
      CHECK(c.cls == cls);
      CHECK_FALSE(c.ambiguous);
    }
  }
}

TEST_CASE("property: a neuron fires exactly within its radius") {
  std::mt19937_64 rng(64);
  for (int trial = 0; trial < 2000; ++trial) {
    const auto n = static_cast<std::size_t>(testing::uniform(rng, 1, 40));
    const auto r = static_cast<std::size_t>(testing::uniform(rng, 0, 6));
    const std::vector<Sample> samples = {{random_bits(rng, n), PacketClass::Known}};
    const auto net = CC4Network::train(samples, r);
    const auto probe = random_bits(rng, n);
    CHECK(net.neurons()[0].fires(probe) == (hamming_distance(probe, samples[0].first) <= r));
  }
}

TEST_CASE("property: symbolized width equals schema width and is injective on vocabulary") {
  std::mt19937_64 rng(65);
  const auto schema = default_event_schema();
  const std::vector<std::string> protos = {"tcp", "udp", "icmp"};
  const std::vector<std::string> ports = {"well_known", "registered", "dynamic"};
  const std::vector<std::string> statuses = {"ok", "retry", "error"};
  for (int trial = 0; trial < 500; ++trial) {
    EventLogRecord a;
    a.timestamp = testing::epoch_day(2021, 5, 17);
    a.source_id = "x";
    a.fields["bytes"] = static_cast<double>(testing::uniform(rng, 0, 2000000));
    a.fields["packets"] = static_cast<double>(testing::uniform(rng, 0, 500));
    a.fields["port_class"] = ports[testing::uniform(rng, 0, 2)];
    a.fields["proto"] = protos[testing::uniform(rng, 0, 2)];
    a.fields["status"] = statuses[testing::uniform(rng, 0, 2)];
    EventLogRecord b = a;
    b.fields["proto"] = protos[testing::uniform(rng, 0, 2)];
    const auto sa = symbolize(a, schema);
    const auto sb = symbolize(b, schema);
    CHECK(sa.bits.size() == schema.total_bits());
    CHECK((sa.bits == sb.bits) == (a.fields == b.fields));
  }
}
