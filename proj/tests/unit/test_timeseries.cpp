#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "citywatch/error.hpp"
#include "citywatch/timeseries.hpp"
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

std::vector<double> iota(std::size_t n) {
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = static_cast<double>(i);
  return v;
}

// Straightforward textbook ACF over a gap-free vector.
double reference_acf(const std::vector<double>& y, std::size_t lag) {
  double m = 0.0;
  for (double v : y) m += v;
  m /= static_cast<double>(y.size());
  double num = 0.0;
  double den = 0.0;
  for (double v : y) den += (v - m) * (v - m);
  for (std::size_t t = 0; t + lag < y.size(); ++t) num += (y[t] - m) * (y[t + lag] - m);
  return (num / static_cast<double>(y.size() - lag)) / (den / static_cast<double>(y.size()));
}

}  // namespace

TEST_CASE("construction rejects bad input") {
  const Instant t0 = testing::epoch_day(2021, 1, 1);
  CHECK(code_of([&] { TimeSeries::dense(t0, Seconds{60}, {}); }) == ErrorCode::EmptyInput);
  CHECK(code_of([&] { TimeSeries::dense(t0, Seconds{0}, {1.0}); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([&] { TimeSeries(t0, Seconds{60}, {1.0, 2.0}, {false}); }) ==
        ErrorCode::LengthMismatch);
  CHECK(code_of([&] { TimeSeries::dense(t0, Seconds{60}, {1.0, INFINITY}); }) ==
        ErrorCode::InvalidArgument);
}

TEST_CASE("index_of and time_at agree") {
  const auto s = hourly(iota(5));
  CHECK(s.index_of(s.time_at(3)) == 3);
  CHECK(s.index_of(s.time_at(3) + Seconds{1799}) == 3);
  CHECK_FALSE(s.index_of(s.start() - Seconds{1}));
  CHECK_FALSE(s.index_of(s.end() + Seconds{3600}));
}

TEST_CASE("split examples") {
  auto [train, test] = split(hourly(iota(10)), 0.8);
  CHECK(train.size() == 8);
  CHECK(test.size() == 2);
  CHECK(test.value(0) == 8.0);

  auto [a, b] = split(hourly({1.0, 2.0}), 0.5);
  CHECK(a.size() == 1);
  CHECK(b.size() == 1);

  CHECK(code_of([] { split(hourly(iota(10)), 0.99); }) == ErrorCode::DegenerateSplit);
  CHECK(code_of([] { split(hourly(iota(1)), 0.5); }) == ErrorCode::DegenerateSplit);
  CHECK(code_of([] { split(hourly(iota(10)), 1.0); }) == ErrorCode::InvalidArgument);
  CHECK(split(hourly(iota(10)), 0.7).first.size() == 7);
}

TEST_CASE("sliding window examples") {
  const auto w = sliding_windows(hourly({1.0, 2.0, 3.0}), 1);
  REQUIRE(w.size() == 2);
  CHECK(w[0].inputs == std::vector<double>{1.0});
  CHECK(w[0].target == 2.0);
  CHECK(w[1].inputs == std::vector<double>{2.0});
  CHECK(w[1].target == 3.0);

  CHECK(code_of([] { sliding_windows(hourly(iota(5)), 5); }) == ErrorCode::SeriesTooShort);
  CHECK(sliding_windows(hourly(iota(5)), 2).size() == 3);

  const TimeSeries gappy(testing::epoch_day(2021, 1, 1), Seconds{60}, {1.0, NAN, 3.0, 4.0},
                         {false, true, false, false});
  CHECK(code_of([&] { sliding_windows(gappy, 1); }) == ErrorCode::MissingValuesPresent);
}

TEST_CASE("short gaps are interpolated, long ones kept") {
  const TimeSeries s(testing::epoch_day(2021, 1, 1), Seconds{60},
                     {0.0, NAN, NAN, 3.0, NAN, NAN, NAN, 7.0, NAN},
                     {false, true, true, false, true, true, true, false, true});
  const auto f = interpolate_short_gaps(s, 2);
  CHECK(f.value(1) == doctest::Approx(1.0));
  CHECK(f.value(2) == doctest::Approx(2.0));
  CHECK(f.is_missing(4));
  CHECK(f.is_missing(6));
  CHECK(f.is_missing(8));
  CHECK(f.missing_count() == 4);
}

TEST_CASE("scaler examples") {
  const auto s = hourly({0.0, 5.0, 10.0});
  const Scaler sc = fit_scaler(s);
  const auto scaled = sc.apply(s);
  CHECK(scaled.value(0) == 0.0);
  CHECK(scaled.value(1) == 0.5);
  CHECK(scaled.value(2) == 1.0);

  const auto c = fit_scaler(hourly({7.0, 7.0})).apply(hourly({7.0, 7.0}));
  CHECK(c.value(0) == 0.0);
  CHECK(c.value(1) == 0.0);

  const TimeSeries none(testing::epoch_day(2021, 1, 1), Seconds{60}, {NAN}, {true});
  CHECK(code_of([&] { fit_scaler(none); }) == ErrorCode::AllMissing);
}

TEST_CASE("diagnose: sine is seasonal at its period") {
  const auto y = testing::sine_wave(240, 24, 10.0, 50.0, 0.0, 1);
  const std::vector<std::size_t> periods = {12, 24, 48};
  const auto r = diagnose(hourly(y), periods);
  CHECK(r.seasonal);
  REQUIRE(r.dominant_period);
  CHECK(*r.dominant_period == 24);
  CHECK(r.acf_at_period >= 0.95);
  CHECK(r.acf_at_period == doctest::Approx(reference_acf(y, 24)).epsilon(1e-12));
  CHECK(r.stationary);
}

TEST_CASE("diagnose: white noise is neither seasonal nor drifting") {
  const std::vector<std::size_t> periods = {24};
  const auto r = diagnose(hourly(testing::white_noise(500, 5)), periods);
  CHECK_FALSE(r.seasonal);
  CHECK_FALSE(r.dominant_period);
  CHECK(r.stationary);
}

TEST_CASE("diagnose: ramp is not stationary") {
  const std::vector<std::size_t> periods = {24};
  const auto r = diagnose(hourly(iota(200)), periods);
  CHECK_FALSE(r.stationary);
  CHECK(r.segment_mean_drift > 0.5);
}

TEST_CASE("diagnose preconditions") {
  const std::vector<std::size_t> periods = {24};
  CHECK(code_of([&] { diagnose(hourly(iota(71)), periods); }) == ErrorCode::SeriesTooShort);
  const std::vector<std::size_t> none;
  CHECK(code_of([&] { diagnose(hourly(iota(100)), none); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("series JSON round trip keeps missing slots") {
  const TimeSeries s(testing::epoch_day(2021, 3, 4), Seconds{900}, {1.5, NAN, -2.25},
                     {false, true, false});
  CHECK(series_from_json(to_json(s)) == s);
  const auto path = std::filesystem::temp_directory_path() / "citywatch_series_rt.json";
  write_series_file(s, path.string());
  CHECK(read_series_file(path.string()) == s);
  std::filesystem::remove(path);
  CHECK(code_of([] { series_from_json("{\"start\": 3}"); }) == ErrorCode::ParseFailure);
}

TEST_CASE("property: window count plus timesteps equals length") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 200; ++trial) {
    const auto n = static_cast<std::size_t>(testing::uniform(rng, 2, 300));
    const auto k = static_cast<std::size_t>(testing::uniform(rng, 1, static_cast<long>(n) - 1));
    const auto w = sliding_windows(hourly(testing::white_noise(n, trial)), k);
    CHECK(w.size() + k == n);
  }
}

TEST_CASE("property: split halves are contiguous") {
  std::mt19937_64 rng(22);
  for (int trial = 0; trial < 200; ++trial) {
    const auto n = static_cast<std::size_t>(testing::uniform(rng, 4, 500));
    const double frac = static_cast<double>(testing::uniform(rng, 30, 70)) / 100.0;
    const auto [train, test] = split(hourly(iota(n)), frac);
    CHECK(train.size() == static_cast<std::size_t>(std::ceil(frac * static_cast<double>(n) - 1e-9)));
    CHECK(train.end() + train.interval() == test.start());
    CHECK(train.size() + test.size() == n);
  }
}

TEST_CASE("property: scaler round trip") {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 100; ++trial) {
    const auto s = hourly(testing::white_noise(50, trial, 1000.0));
    const Scaler sc = fit_scaler(s);
    const auto back = sc.invert(sc.apply(s));
    for (std::size_t i = 0; i < s.size(); ++i) {
      CHECK(back.value(i) == doctest::Approx(s.value(i)).epsilon(1e-12));
    }
  }
}

TEST_CASE("property: diagnose verdicts are affine invariant") {
  std::mt19937_64 rng(24);
  const std::vector<std::size_t> periods = {12, 24};
  for (int trial = 0; trial < 100; ++trial) {
    const auto amp = static_cast<double>(testing::uniform(rng, 0, 10));
    const auto noise = static_cast<double>(testing::uniform(rng, 1, 10));
    auto y = testing::sine_wave(240, 24, amp, 0.0, noise, trial);
    const double slope = static_cast<double>(testing::uniform(rng, 0, 3)) / 10.0;
    for (std::size_t t = 0; t < y.size(); ++t) y[t] += slope * static_cast<double>(t);
    const double a = static_cast<double>(testing::uniform(rng, 1, 1000)) / 100.0;
    const double b = static_cast<double>(testing::uniform(rng, -500, 500));
    std::vector<double> z(y.size());
    for (std::size_t t = 0; t < y.size(); ++t) z[t] = a * y[t] + b;
    const auto r1 = diagnose(hourly(y), periods);
    const auto r2 = diagnose(hourly(z), periods);
    CHECK(r1.seasonal == r2.seasonal);
    CHECK(r1.stationary == r2.stationary);
    CHECK(r1.acf_at_period == doctest::Approx(r2.acf_at_period).epsilon(1e-9));
  }
}
