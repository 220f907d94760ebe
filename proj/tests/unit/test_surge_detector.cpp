#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "citywatch/error.hpp"
#include "citywatch/surge_detector.hpp"
#include "generators.hpp"

using namespace citywatch;
using testing::hourly;

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

ForecasterConfig ma(std::size_t w) {
  ForecasterConfig c;
  c.variant = ForecasterKind::MovingAverage;
  c.ma_window = w;
  return c;
}

TimeSeries with_missing(std::vector<double> values, const std::vector<std::size_t>& gaps) {
  std::vector<bool> mask(values.size(), false);
  for (std::size_t g : gaps) {
    mask[g] = true;
    values[g] = NAN;
  }
  return TimeSeries(testing::epoch_day(2021, 1, 1), Seconds{3600}, std::move(values), std::move(mask));
}

}  // namespace

TEST_CASE("z table lookups") {
  CHECK(z_score(0.80) == 1.282);
  CHECK(z_score(0.85) == 1.440);
  CHECK(z_score(0.90) == 1.645);
  CHECK(z_score(0.95) == 1.960);
  CHECK(z_score(0.99) == 2.576);
  CHECK(z_score(0.995) == 2.807);
  CHECK(z_score(0.999) == 3.291);
  CHECK(code_of([] { z_score(0.97); }) == ErrorCode::UnsupportedConfidence);
  CHECK(code_of([] { z_score(0.5); }) == ErrorCode::UnsupportedConfidence);
}

TEST_CASE("confidence band arithmetic") {
  const ConfidenceBand b{100.0, 10.0, 25, z_score(0.95)};
  CHECK(b.lower() == doctest::Approx(96.08));
  CHECK(b.upper() == doctest::Approx(103.92));

  const std::vector<double> flat = {5.0, 5.0, 5.0};
  const auto c = confidence_interval(flat, 0.95);
  CHECK(c.lower() == 5.0);
  CHECK(c.upper() == 5.0);

  const std::vector<double> one = {3.5};
  const auto d = confidence_interval(one, 0.99);
  CHECK(d.stddev == 0.0);
  CHECK(d.lower() == 3.5);
  CHECK(d.upper() == 3.5);

  const std::vector<double> xs = {1.0, 2.0, 3.0, 4.0};
  const auto e = confidence_interval(xs, 0.90);
  CHECK(e.mean == 2.5);
  CHECK(e.stddev == doctest::Approx(std::sqrt(5.0 / 3.0)));
  CHECK(e.half_width() == doctest::Approx(1.645 * std::sqrt(5.0 / 3.0) / 2.0));

  const std::vector<double> none;
  CHECK(code_of([&] { confidence_interval(none, 0.95); }) == ErrorCode::EmptyInput);
}

TEST_CASE("alert JSON lines have a fixed field order") {
  AnomalyAlert a;
  a.timestamp = testing::epoch_day(2021, 5, 27) + Seconds{20 * 3600};
  a.kind = AlertKind::Surge;
  a.observed = 12.5;
  a.expected = 3.0;
  a.band = ConfidenceBand{3.0, 2.0, 4, 1.96};
  a.severity = Severity::Critical;
  a.source = "10.20.0.21";
  a.span = 4;
  CHECK(to_json_line(a) ==
        "{\"ts\":\"2021-05-27T20:00:00Z\",\"kind\":\"Surge\",\"observed\":12.5,\"expected\":3.0,"
        "\"lower\":1.04,\"upper\":4.96,\"severity\":\"Critical\",\"source\":\"10.20.0.21\",\"span\":4}");
  const auto back = alert_from_json_line(to_json_line(a));
  CHECK(back.timestamp == a.timestamp);
  CHECK(back.kind == a.kind);
  CHECK(back.source == a.source);
  CHECK(back.span == 4);
  CHECK(back.band->lower() == doctest::Approx(1.04));
  CHECK(to_json_line(back) == to_json_line(a));
  CHECK(code_of([] { alert_from_json_line("{\"ts\":1}"); }) == ErrorCode::ParseFailure);
}

TEST_CASE("constant series raises no surges in either mode") {
  const auto s = hourly(std::vector<double>(60, 4.0));
  const auto model = fit(ma(3), s.slice(0, 30));
  for (DetectionMode mode : {DetectionMode::MeanShift, DetectionMode::Residual}) {
    SurgeOptions o;
    o.mode = mode;
    CHECK(detect_surges(s, model, o).empty());
  }
}

TEST_CASE("residual mode flags exactly an injected 3 sigma point") {
  const auto noise = testing::white_noise(100, 77, 2.0);
  const auto model = fit(ma(1), hourly(noise));
  const double sigma = model.result().residual_std;
  REQUIRE(sigma > 0.0);
  const double last = noise.back();
  std::vector<double> cont(20, last);
  cont[7] = last + 3.0 * sigma;
  const auto series = TimeSeries::dense(model.next_time(), Seconds{3600}, cont);
  SurgeOptions o;
  o.mode = DetectionMode::Residual;
  const auto alerts = detect_surges(series, model, o);
  REQUIRE(alerts.size() == 1);
  CHECK(alerts[0].timestamp == series.time_at(7));
  CHECK(alerts[0].expected == last);
  CHECK_FALSE(alerts[0].band->contains(alerts[0].observed));
}

TEST_CASE("mean-shift window alert with severity grading") {
  const auto noise = testing::white_noise(96, 3, 1.0);
  const auto model = fit(ma(1), hourly(noise));
  const double last = noise.back();
  std::vector<double> cont(12, last);
  for (std::size_t i = 4; i < 8; ++i) cont[i] = last + 50.0;
  const auto series = TimeSeries::dense(model.next_time(), Seconds{3600}, cont);
  const auto alerts = detect_surges(series, model);
  REQUIRE(alerts.size() == 1);
  CHECK(alerts[0].timestamp == series.time_at(4));
  CHECK(alerts[0].span == 4);
  CHECK(alerts[0].severity == Severity::Critical);
  CHECK(alerts[0].observed == doctest::Approx(last + 50.0));
}

TEST_CASE("series starting at the training start is scored after the prefix") {
  std::vector<double> y(40, 1.0);
  y[35] = 100.0;
  const auto full = hourly(y);
  const auto model = fit(ma(2), full.slice(0, 20));
  SurgeOptions o;
  o.mode = DetectionMode::Residual;
  const auto alerts = detect_surges(full, model, o);
  REQUIRE(alerts.size() == 1);
  CHECK(alerts[0].timestamp == full.time_at(35));

  const auto shifted = TimeSeries::dense(full.start() + Seconds{1800}, Seconds{3600}, y);
  CHECK(code_of([&] { detect_surges(shifted, model, o); }) == ErrorCode::TimeBaseMismatch);
  CHECK(code_of([&] {
          detect_surges(full, model, SurgeOptions{.confidence = 0.97});
        }) == ErrorCode::UnsupportedConfidence);
}

TEST_CASE("dropout runs") {
  std::vector<double> y(20, 5.0);
  CHECK(detect_dropout(with_missing(y, {3, 4, 5})).size() == 1);
  CHECK(detect_dropout(with_missing(y, {3, 4})).empty());

  const auto alerts = detect_dropout(with_missing(y, {0, 1, 2, 10, 11, 12, 13, 14, 15}));
  REQUIRE(alerts.size() == 2);
  CHECK(alerts[0].observed == 3.0);
  CHECK(alerts[0].severity == Severity::Warning);
  CHECK(alerts[1].observed == 6.0);
  CHECK(alerts[1].span == 6);
  CHECK(alerts[1].severity == Severity::Critical);

  y[7] = y[8] = y[9] = 0.0;
  CHECK(detect_dropout(hourly(y)).empty());
  CHECK(detect_dropout(hourly(y), DropoutOptions{.zero_is_silence = true}).size() == 1);
}

TEST_CASE("identity flood") {
  CHECK(detect_identity_flood(hourly(std::vector<double>(48, 0.0))).empty());

  std::vector<double> ids(48, 0.0);
  for (std::size_t i = 0; i < 24; i += 3) ids[i] = 1.0;
  ids[30] = 25.0;
  IdentityFloodOptions o;
  o.window = 1;
  const auto s = hourly(ids);
  const auto alerts = detect_identity_flood(s, o);
  REQUIRE(alerts.size() == 1);
  CHECK(alerts[0].timestamp == s.time_at(30));
  CHECK(alerts[0].kind == AlertKind::IdentityFlood);
  CHECK(alerts[0].source == "gateway");
  CHECK(alerts[0].observed > alerts[0].band->upper());
}

TEST_CASE("sort order is timestamp, source, kind") {
  const Instant t = testing::epoch_day(2021, 1, 1);
  std::vector<AnomalyAlert> v(3);
  v[0].timestamp = t + Seconds{60};
  v[1].timestamp = t;
  v[1].source = "b";
  v[1].kind = AlertKind::Dropout;
  v[2].timestamp = t;
  v[2].source = "b";
  v[2].kind = AlertKind::Surge;
  sort_alerts(v);
  CHECK(v[0].kind == AlertKind::Surge);
  CHECK(v[1].kind == AlertKind::Dropout);
  CHECK(v[2].timestamp == t + Seconds{60});
}

TEST_CASE("alerts file round trip") {
  AnomalyAlert a;
  a.timestamp = testing::epoch_day(2021, 1, 1);
  a.kind = AlertKind::Intrusion;
  a.packet_class = "Attack";
  a.ambiguous = false;
  const std::vector<AnomalyAlert> alerts = {a, a};
  const auto path = std::filesystem::temp_directory_path() / "citywatch_alerts_rt.jsonl";
  {
    std::ofstream out(path);
    out << to_json_lines(alerts);
  }
  const auto back = read_alerts_file(path.string());
  std::filesystem::remove(path);
  REQUIRE(back.size() == 2);
  CHECK(*back[1].packet_class == "Attack");
  CHECK(to_json_lines(back) == to_json_lines(alerts));
}

TEST_CASE("property: 0.95 band coverage of the true mean") {
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> d(0.0, 1.0);
  const int windows = 2000;
  int covered = 0;
  for (int w = 0; w < windows; ++w) {
    std::vector<double> xs(30);
    for (auto& x : xs) x = d(rng);
    covered += confidence_interval(xs, 0.95).contains(0.0) ? 1 : 0;
  }
  const double rate = static_cast<double>(covered) / windows;
  CHECK(rate >= 0.92);
  CHECK(rate <= 0.98);
}

TEST_CASE("property: higher confidence widens the band") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const auto n = static_cast<std::size_t>(testing::uniform(rng, 2, 50));
    const auto xs = testing::white_noise(n, static_cast<std::uint64_t>(trial));
    double prev = -1.0;
    for (const auto& [level, z] : kZTable) {
      const double hw = confidence_interval(xs, level).half_width();
      CHECK(hw > prev);
      prev = hw;
    }
  }
}

TEST_CASE("property: detection is scale equivariant and deterministic") {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 40; ++trial) {
    auto y = testing::white_noise(120, static_cast<std::uint64_t>(trial) + 50, 3.0);
    const auto at = static_cast<std::size_t>(testing::uniform(rng, 70, 110));
    y[at] += static_cast<double>(testing::uniform(rng, 0, 30));
    const double a = static_cast<double>(testing::uniform(rng, 1, 400)) / 16.0;
    std::vector<double> z(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) z[i] = a * y[i];
    for (DetectionMode mode : {DetectionMode::MeanShift, DetectionMode::Residual}) {
      SurgeOptions o;
      o.mode = mode;
      const auto s1 = hourly(y);
      const auto s2 = hourly(z);
      const auto r1 = detect_surges(s1, fit(ma(3), s1.slice(0, 60)), o);
      const auto r2 = detect_surges(s2, fit(ma(3), s2.slice(0, 60)), o);
      REQUIRE(r1.size() == r2.size());
      for (std::size_t k = 0; k < r1.size(); ++k) {
        CHECK(r1[k].timestamp == r2[k].timestamp);
        CHECK(r1[k].kind == r2[k].kind);
        CHECK(r2[k].band->half_width() == doctest::Approx(a * r1[k].band->half_width()));
      }
      CHECK(to_json_lines(r1) == to_json_lines(detect_surges(s1, fit(ma(3), s1.slice(0, 60)), o)));
    }
  }
}
