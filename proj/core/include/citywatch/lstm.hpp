#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "citywatch/timeseries.hpp"

namespace citywatch::lstm {

/// Weights of the LSTM in-gate order: input, forget, candidate, output.
enum Gate : std::size_t { kInput = 0, kForget = 1, kCandidate = 2, kOutput = 3 };
inline constexpr std::size_t kGates = 4;

/// Recurrent layer plus the linear dense head that maps the final hidden
/// state to one output. Matrices are row-major with one row per unit.
struct Params {
  std::size_t units = 0;
  std::size_t input_dim = 0;
  std::array<std::vector<double>, kGates> input_weights;      // units x input_dim
  std::array<std::vector<double>, kGates> recurrent_weights;  // units x units
  std::array<std::vector<double>, kGates> biases;             // units
  std::vector<double> head_weights;                           // units
  double head_bias = 0.0;

  static Params zeros(std::size_t units, std::size_t input_dim);

  /// Glorot-uniform weights per matrix, zero biases, forget bias 1.
  static Params initialize(std::size_t units, std::size_t input_dim, std::uint64_t seed);

  std::size_t parameter_count() const noexcept;

  /// Layout: per gate W, U, b (gates in order), then head weights, head bias.
  std::vector<double> flatten() const;
  static Params unflatten(std::size_t units, std::size_t input_dim, std::span<const double> flat);

  bool operator==(const Params&) const = default;
};

/// Recurrent-layer parameters: 4 * units * (units + input_dim + 1).
std::size_t param_count(std::size_t units, std::size_t input_dim);

/// Recurrent layer plus dense head (units + 1).
std::size_t total_param_count(std::size_t units, std::size_t input_dim);

/// Per-step activations of one forward pass, each row `units` wide.
struct ForwardTrace {
  std::size_t steps = 0;
  std::vector<double> input_gate, forget_gate, candidate, output_gate, cell, hidden;
  double output = 0.0;
};

/// `sequence` holds steps * input_dim values, step-major. An empty
/// dropout mask means no dropout.
ForwardTrace forward(const Params& params, std::span<const double> sequence,
                     std::span<const double> dropout_mask = {});

double predict(const Params& params, std::span<const double> sequence);

/// Mean squared error over the batch and its gradient (same shape as
/// params, written into `gradient`). dropout_masks is empty or holds one
/// units-wide mask per sample.
double loss_and_gradient(const Params& params, std::span<const Window> batch,
                         std::span<const std::vector<double>> dropout_masks, Params& gradient);

struct TrainConfig {
  std::size_t units = 10;
  double dropout = 0.2;
  double learning_rate = 0.01;
  std::size_t batch_size = 128;
  std::size_t epochs = 1;
  std::size_t num_chunks = 2;
  std::uint64_t seed = 42;
};

struct TrainResult {
  Params params;
  std::vector<double> loss_trace;  // mean minibatch loss of each chunk pass
};

/// Chunked minibatch SGD. Windows are cut into contiguous chunks; each
/// epoch visits the chunks in the current order, shuffles samples within a
/// chunk, and reshuffles the chunk order afterwards. Inputs are expected
/// on the [0, 1] scale. Throws NonFiniteLoss on divergence.
TrainResult train_chunked(const TrainConfig& config, std::span<const Window> windows,
                          std::optional<Params> initial = std::nullopt);

}  // namespace citywatch::lstm
