#include <benchmark/benchmark.h>

#include <random>
#include <sstream>

#include "citywatch/cc4.hpp"
#include "citywatch/city_sim.hpp"
#include "citywatch/forecasters.hpp"
#include "citywatch/lstm.hpp"
#include "citywatch/stream_pipeline.hpp"
#include "citywatch/surge_detector.hpp"
#include "generators.hpp"

using namespace citywatch;

static void BM_HoltWintersFit(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto s = testing::hourly(testing::sine_wave(n, 24, 10.0, 50.0, 1.0, 1));
  ForecasterConfig c;
  c.variant = ForecasterKind::HoltWinters;
  for (auto _ : state) benchmark::DoNotOptimize(fit(c, s));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_HoltWintersFit)->Arg(24 * 14)->Arg(24 * 90);

static void BM_LstmGradientBatch(benchmark::State& state) {
  const auto steps = static_cast<std::size_t>(state.range(0));
  const auto p = lstm::Params::initialize(10, 1, 7);
  const auto y = testing::sine_wave(steps + 128, 24, 0.4, 0.5, 0.02, 2);
  const auto windows = sliding_windows(y, steps);
  const std::span<const Window> batch(windows.data(), 128);
  auto grad = lstm::Params::zeros(10, 1);
  for (auto _ : state) benchmark::DoNotOptimize(lstm::loss_and_gradient(p, batch, {}, grad));
  state.SetItemsProcessed(state.iterations() * 128);
}
BENCHMARK(BM_LstmGradientBatch)->Arg(48)->Arg(1008);

static void BM_Cc4Classify(benchmark::State& state) {
  std::mt19937_64 rng(3);
  const auto random_bits = [&] {
    BitVector b(21);
    for (auto& x : b) x = static_cast<std::uint8_t>(testing::uniform(rng, 0, 1));
    return b;
  };
  std::vector<std::pair<BitVector, PacketClass>> samples;
  for (long i = 0; i < state.range(0); ++i) {
    samples.emplace_back(random_bits(), i % 4 == 0 ? PacketClass::Attack : PacketClass::Known);
  }
  const auto net = CC4Network::train(samples, 2);
  const auto probe = random_bits();
  for (auto _ : state) benchmark::DoNotOptimize(net.classify(probe));
}
BENCHMARK(BM_Cc4Classify)->Arg(64)->Arg(1024);

static void BM_ConfidenceInterval(benchmark::State& state) {
  const auto w = testing::white_noise(static_cast<std::size_t>(state.range(0)), 4);
  for (auto _ : state) benchmark::DoNotOptimize(confidence_interval(w, 0.95));
}
BENCHMARK(BM_ConfidenceInterval)->Arg(30)->Arg(1000);

static void BM_StreamPipeline(benchmark::State& state) {
  const auto trace = generate_trace(default_sim_config(Scenario::Mixed));
  std::vector<std::pair<BitVector, PacketClass>> samples;
  std::istringstream train(trace.cc4_train_jsonl);
  std::string line;
  while (std::getline(train, line)) {
    const auto r = event_from_json_line(line);
    samples.emplace_back(symbolize(r, default_event_schema()).bits, *r.label);
  }
  const auto net = CC4Network::train(samples, 2);
  std::size_t records = 0;
  for (auto _ : state) {
    std::istringstream in(trace.events_jsonl);
    const auto counts = run_pipeline(in, default_event_schema(), net, PipelineOptions{},
                                     [](const AnomalyAlert&) {});
    records += counts.records_in;
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(records));
}
BENCHMARK(BM_StreamPipeline)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
