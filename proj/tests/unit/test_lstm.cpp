#include <doctest.h>

#include <cmath>
#include <random>

#include "citywatch/error.hpp"
#include "citywatch/lstm.hpp"
#include "generators.hpp"

using namespace citywatch;
using namespace citywatch::lstm;

namespace {

std::vector<Window> sine_windows(std::size_t n, std::size_t steps, std::uint64_t seed) {
  auto y = testing::sine_wave(n, 24, 0.4, 0.5, 0.02, seed);
  return sliding_windows(y, steps);
}

}  // namespace

TEST_CASE("parameter accounting") {
  CHECK(param_count(10, 1) == 480);
  CHECK(param_count(1, 1) == 12);
  CHECK(total_param_count(10, 1) == 491);
  CHECK(Params::zeros(10, 1).parameter_count() == 491);
  CHECK(Params::initialize(10, 1, 3).flatten().size() == 491);
  for (std::size_t u = 1; u <= 12; ++u) CHECK(param_count(u, 1) == 4 * u * (u + 2));
}

TEST_CASE("initialization is seeded and bounded") {
  const auto a = Params::initialize(10, 1, 9);
  const auto b = Params::initialize(10, 1, 9);
  CHECK(a == b);
  CHECK_FALSE(a == Params::initialize(10, 1, 10));
  const double bound_w = std::sqrt(6.0 / (1.0 + 10.0));
  const double bound_u = std::sqrt(6.0 / (10.0 + 10.0));
  for (std::size_t g = 0; g < kGates; ++g) {
    for (double w : a.input_weights[g]) CHECK(std::abs(w) <= bound_w);
    for (double w : a.recurrent_weights[g]) CHECK(std::abs(w) <= bound_u);
    for (double bias : a.biases[g]) CHECK(bias == (g == kForget ? 1.0 : 0.0));
  }
}

TEST_CASE("flatten and unflatten are inverse") {
  const auto p = Params::initialize(4, 2, 5);
  const auto flat = p.flatten();
  CHECK(Params::unflatten(4, 2, flat) == p);
}

TEST_CASE("single unit forward pass matches hand computation") {
  Params p = Params::zeros(1, 1);
  p.input_weights[kInput] = {0.5};
  p.input_weights[kForget] = {-0.3};
  p.input_weights[kCandidate] = {0.8};
  p.input_weights[kOutput] = {0.2};
  p.recurrent_weights[kInput] = {0.1};
  p.recurrent_weights[kForget] = {0.4};
  p.recurrent_weights[kCandidate] = {-0.6};
  p.recurrent_weights[kOutput] = {0.7};
  p.biases[kForget] = {1.0};
  p.head_weights = {1.5};
  p.head_bias = 0.25;

  const std::vector<double> xs = {0.3, -0.2};
  auto sig = [](double z) { return 1.0 / (1.0 + std::exp(-z)); };
  double h = 0.0;
  double c = 0.0;
  for (double x : xs) {
    const double i = sig(0.5 * x + 0.1 * h);
    const double f = sig(-0.3 * x + 0.4 * h + 1.0);
    const double g = std::tanh(0.8 * x - 0.6 * h);
    const double o = sig(0.2 * x + 0.7 * h);
    c = f * c + i * g;
    h = o * std::tanh(c);
  }
  const auto trace = forward(p, xs);
  CHECK(trace.steps == 2);
  CHECK(trace.cell.back() == doctest::Approx(c).epsilon(1e-14));
  CHECK(trace.hidden.back() == doctest::Approx(h).epsilon(1e-14));
  CHECK(trace.output == doctest::Approx(1.5 * h + 0.25).epsilon(1e-14));
  CHECK(predict(p, xs) == trace.output);
}

TEST_CASE("analytic gradient matches central finite differences") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const std::size_t units = 3;
    const Params p = Params::initialize(units, 1, seed);
    const auto windows = sine_windows(20, 6, seed);
    const std::span<const Window> batch(windows.data(), 8);

    Params grad = Params::zeros(units, 1);
    loss_and_gradient(p, batch, {}, grad);
    const auto g = grad.flatten();
    auto flat = p.flatten();
    const double eps = 1e-6;
    for (std::size_t k = 0; k < flat.size(); ++k) {
      Params scratch = Params::zeros(units, 1);
      const double orig = flat[k];
      flat[k] = orig + eps;
      const double up = loss_and_gradient(Params::unflatten(units, 1, flat), batch, {}, scratch);
      flat[k] = orig - eps;
      const double down = loss_and_gradient(Params::unflatten(units, 1, flat), batch, {}, scratch);
      flat[k] = orig;
      const double numeric = (up - down) / (2.0 * eps);
      CAPTURE(k);
      const double scale = std::max(std::abs(numeric), std::abs(g[k]));
      if (scale < 1e-8) continue;
      CHECK(std::abs(numeric - g[k]) / scale < 1e-4);
    }
  }
}

TEST_CASE("gradient with a dropout mask matches finite differences") {
  const std::size_t units = 2;
  const Params p = Params::initialize(units, 1, 17);
  const auto windows = sine_windows(12, 4, 17);
  const std::span<const Window> batch(windows.data(), 4);
  const std::vector<std::vector<double>> masks = {{0.0, 1.25}, {1.25, 1.25}, {1.25, 0.0}, {0.0, 0.0}};
  Params grad = Params::zeros(units, 1);
  loss_and_gradient(p, batch, masks, grad);
  const auto g = grad.flatten();
  auto flat = p.flatten();
  for (std::size_t k = 0; k < flat.size(); ++k) {
    Params scratch = Params::zeros(units, 1);
    const double orig = flat[k];
    flat[k] = orig + 1e-6;
    const double up = loss_and_gradient(Params::unflatten(units, 1, flat), batch, masks, scratch);
    flat[k] = orig - 1e-6;
    const double down = loss_and_gradient(Params::unflatten(units, 1, flat), batch, masks, scratch);
    flat[k] = orig;
    const double numeric = (up - down) / 2e-6;
    const double scale = std::max(std::abs(numeric), std::abs(g[k]));
    if (scale < 1e-8) continue;
    CHECK(std::abs(numeric - g[k]) / scale < 1e-4);
  }
}

TEST_CASE("zero learning rate leaves parameters unchanged") {
  const auto windows = sine_windows(100, 8, 4);
  TrainConfig cfg;
  cfg.units = 4;
  cfg.learning_rate = 0.0;
  cfg.num_chunks = 1;
  cfg.batch_size = 16;
  const auto init = Params::initialize(4, 1, cfg.seed);
  const auto res = train_chunked(cfg, windows, init);
  CHECK(res.params == init);
  CHECK(res.loss_trace.size() == 1);
}

TEST_CASE("training is deterministic and reduces loss") {
  const auto windows = sine_windows(400, 24, 8);
  TrainConfig cfg;
  cfg.units = 6;
  cfg.batch_size = 16;
  cfg.epochs = 6;
  cfg.num_chunks = 3;
  cfg.learning_rate = 0.05;
  const auto a = train_chunked(cfg, windows);
  const auto b = train_chunked(cfg, windows);
  CHECK(a.params == b.params);
  CHECK(a.loss_trace == b.loss_trace);
  CHECK(a.loss_trace.size() == cfg.epochs * cfg.num_chunks);
  CHECK(a.loss_trace.back() < a.loss_trace.front());
}

TEST_CASE("divergence is reported") {
  auto windows = sine_windows(100, 4, 2);
  TrainConfig cfg;
  cfg.units = 2;
  cfg.learning_rate = 1e200;
  cfg.dropout = 0.0;
  cfg.epochs = 3;
  bool thrown = false;
  try {
    train_chunked(cfg, windows);
  } catch (const Error& e) {
    thrown = e.code() == ErrorCode::NonFiniteLoss;
  }
  CHECK(thrown);
}

TEST_CASE("property: gate activations stay in range") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 200; ++trial) {
    const auto units = static_cast<std::size_t>(testing::uniform(rng, 1, 10));
    const auto steps = static_cast<std::size_t>(testing::uniform(rng, 1, 30));
    const Params p = Params::initialize(units, 1, static_cast<std::uint64_t>(trial));
    std::vector<double> xs = testing::white_noise(steps, static_cast<std::uint64_t>(trial) + 1000, 3.0);
    const auto t = forward(p, xs);
    REQUIRE(t.hidden.size() == steps * units);
    REQUIRE(t.cell.size() == steps * units);
    for (std::size_t k = 0; k < steps * units; ++k) {
      CHECK((t.input_gate[k] > 0.0 && t.input_gate[k] < 1.0));
      CHECK((t.forget_gate[k] > 0.0 && t.forget_gate[k] < 1.0));
      CHECK((t.output_gate[k] > 0.0 && t.output_gate[k] < 1.0));
      CHECK((t.candidate[k] > -1.0 && t.candidate[k] < 1.0));
      CHECK((t.hidden[k] > -1.0 && t.hidden[k] < 1.0));
    }
  }
}
