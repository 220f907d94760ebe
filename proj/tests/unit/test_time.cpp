#include <doctest.h>

#include <random>

#include "citywatch/time.hpp"
#include "generators.hpp"

using namespace citywatch;
using namespace std::chrono;

TEST_CASE("flow timestamps are day-first with a 12-hour clock") {
  const auto t = parse_flow_timestamp("22/02/2018 12:27:57 AM");
  REQUIRE(t);
  CHECK(format_iso8601(*t) == "2018-02-22T00:27:57Z");

  const auto july = parse_flow_timestamp("03/07/2017 05:25:58 PM");
  REQUIRE(july);
  CHECK(format_iso8601(*july) == "2017-07-03T17:25:58Z");

  CHECK(format_iso8601(*parse_flow_timestamp("01/01/2020 12:00:00 PM")) == "2020-01-01T12:00:00Z");
  CHECK(format_iso8601(*parse_flow_timestamp("01/01/2020 11:59:59 PM")) == "2020-01-01T23:59:59Z");
}

TEST_CASE("malformed flow timestamps are rejected, not guessed") {
  for (const char* bad : {"2018-02-22 00:27:57", "22/02/2018 00:27:57", "22/02/2018 13:27:57 PM",
                          "31/02/2018 01:00:00 AM", "22/13/2018 01:00:00 AM", "2/2/2018 1:00:00 AM",
                          "22/02/2018 12:27:57 XM", "22/02/2018 12:27:57 AM ", ""}) {
    CAPTURE(bad);
    CHECK_FALSE(parse_flow_timestamp(bad));
  }
}

TEST_CASE("ISO-8601 round trip") {
  const auto t = parse_iso8601("2021-05-17T13:45:09Z");
  REQUIRE(t);
  CHECK(format_iso8601(*t) == "2021-05-17T13:45:09Z");
  CHECK_FALSE(parse_iso8601("2021-05-17 13:45:09"));
  CHECK_FALSE(parse_iso8601("2021-02-30T00:00:00Z"));
}

TEST_CASE("property: flow timestamp format and parse are inverse") {
  std::mt19937_64 rng(7);
  const Instant base = testing::epoch_day(2015, 1, 1);
  for (int i = 0; i < 2000; ++i) {
    const Instant t = base + seconds{testing::uniform(rng, 0, 20L * 365 * 86400)};
    const auto back = parse_flow_timestamp(format_flow_timestamp(t));
    REQUIRE(back);
    CHECK(*back == t);
    CHECK(parse_iso8601(format_iso8601(t)) == t);
  }
}
