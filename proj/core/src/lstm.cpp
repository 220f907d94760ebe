#include "citywatch/lstm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "citywatch/error.hpp"

namespace citywatch::lstm {
namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void fill_uniform(std::vector<double>& w, double limit, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-limit, limit);
  for (double& x : w) x = dist(rng);
}

std::size_t sequence_steps(const Params& params, std::span<const double> sequence) {
  if (params.input_dim == 0 || sequence.size() % params.input_dim != 0 || sequence.empty()) {
    fail(ErrorCode::WidthMismatch, "sequence length is not a multiple of input_dim");
  }
  return sequence.size() / params.input_dim;
}

}  // namespace

std::size_t param_count(std::size_t units, std::size_t input_dim) {
  return kGates * units * (units + input_dim + 1);
}

std::size_t total_param_count(std::size_t units, std::size_t input_dim) {
  return param_count(units, input_dim) + units + 1;
}

Params Params::zeros(std::size_t units, std::size_t input_dim) {
  Params p;
  p.units = units;
  p.input_dim = input_dim;
  for (std::size_t g = 0; g < kGates; ++g) {
    p.input_weights[g].assign(units * input_dim, 0.0);
    p.recurrent_weights[g].assign(units * units, 0.0);
    p.biases[g].assign(units, 0.0);
  }
  p.head_weights.assign(units, 0.0);
  return p;
}

Params Params::initialize(std::size_t units, std::size_t input_dim, std::uint64_t seed) {
  if (units == 0 || input_dim == 0) fail(ErrorCode::InvalidArgument, "units and input_dim must be >= 1");
  Params p = zeros(units, input_dim);
  std::mt19937_64 rng(seed);
  const double input_limit = std::sqrt(6.0 / static_cast<double>(input_dim + units));
  const double recurrent_limit = std::sqrt(6.0 / static_cast<double>(units + units));
  const double head_limit = std::sqrt(6.0 / static_cast<double>(units + 1));
  for (std::size_t g = 0; g < kGates; ++g) {
    fill_uniform(p.input_weights[g], input_limit, rng);
    fill_uniform(p.recurrent_weights[g], recurrent_limit, rng);
  }
  fill_uniform(p.head_weights, head_limit, rng);
  std::fill(p.biases[kForget].begin(), p.biases[kForget].end(), 1.0);
  return p;
}

std::size_t Params::parameter_count() const noexcept { return total_param_count(units, input_dim); }

std::vector<double> Params::flatten() const {
  std::vector<double> flat;
  flat.reserve(parameter_count());
  for (std::size_t g = 0; g < kGates; ++g) {
    flat.insert(flat.end(), input_weights[g].begin(), input_weights[g].end());
    flat.insert(flat.end(), recurrent_weights[g].begin(), recurrent_weights[g].end());
    flat.insert(flat.end(), biases[g].begin(), biases[g].end());
  }
  flat.insert(flat.end(), head_weights.begin(), head_weights.end());
  flat.push_back(head_bias);
  return flat;
}

Params Params::unflatten(std::size_t units, std::size_t input_dim, std::span<const double> flat) {
  if (flat.size() != total_param_count(units, input_dim)) {
    fail(ErrorCode::WidthMismatch, "flat parameter vector has the wrong length");
  }
  Params p = zeros(units, input_dim);
  std::size_t pos = 0;
  auto take = [&](std::vector<double>& dst) {
    std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(pos), dst.size(), dst.begin());
    pos += dst.size();
  };
  for (std::size_t g = 0; g < kGates; ++g) {
    take(p.input_weights[g]);
    take(p.recurrent_weights[g]);
    take(p.biases[g]);
  }
  take(p.head_weights);
  p.head_bias = flat[pos];
  return p;
}

ForwardTrace forward(const Params& params, std::span<const double> sequence,
                     std::span<const double> dropout_mask) {
  const std::size_t steps = sequence_steps(params, sequence);
  const std::size_t u = params.units;
  const std::size_t d = params.input_dim;
  ForwardTrace tr;
  tr.steps = steps;
  for (auto* v : {&tr.input_gate, &tr.forget_gate, &tr.candidate, &tr.output_gate, &tr.cell,
                  &tr.hidden}) {
    v->assign(steps * u, 0.0);
  }
  std::array<double, kGates> pre{};
  for (std::size_t t = 0; t < steps; ++t) {
    const double* x = sequence.data() + t * d;
    const double* h_prev = t > 0 ? tr.hidden.data() + (t - 1) * u : nullptr;
    const double* c_prev = t > 0 ? tr.cell.data() + (t - 1) * u : nullptr;
    for (std::size_t j = 0; j < u; ++j) {
      for (std::size_t g = 0; g < kGates; ++g) {
        double a = params.biases[g][j];
        const double* w = params.input_weights[g].data() + j * d;
        for (std::size_t k = 0; k < d; ++k) a += w[k] * x[k];
        if (h_prev) {
          const double* r = params.recurrent_weights[g].data() + j * u;
          for (std::size_t k = 0; k < u; ++k) a += r[k] * h_prev[k];
        }
        pre[g] = a;
      }
      const double i = sigmoid(pre[kInput]);
      const double f = sigmoid(pre[kForget]);
      const double g = std::tanh(pre[kCandidate]);
      const double o = sigmoid(pre[kOutput]);
      const double c = f * (c_prev ? c_prev[j] : 0.0) + i * g;
      const std::size_t at = t * u + j;
      tr.input_gate[at] = i;
      tr.forget_gate[at] = f;
      tr.candidate[at] = g;
      tr.output_gate[at] = o;
      tr.cell[at] = c;
      tr.hidden[at] = o * std::tanh(c);
    }
  }
  const double* h_last = tr.hidden.data() + (steps - 1) * u;
  double y = params.head_bias;
  for (std::size_t j = 0; j < u; ++j) {
    const double z = dropout_mask.empty() ? h_last[j] : h_last[j] * dropout_mask[j];
    y += params.head_weights[j] * z;
  }
  tr.output = y;
  return tr;
}

double predict(const Params& params, std::span<const double> sequence) {
  return forward(params, sequence).output;
}

double loss_and_gradient(const Params& params, std::span<const Window> batch,
                         std::span<const std::vector<double>> dropout_masks, Params& gradient) {
  if (batch.empty()) fail(ErrorCode::EmptyInput, "empty minibatch");
  if (!dropout_masks.empty() && dropout_masks.size() != batch.size()) {
    fail(ErrorCode::LengthMismatch, "one dropout mask per sample required");
  }
  const std::size_t u = params.units;
  const std::size_t d = params.input_dim;
  gradient = Params::zeros(u, d);
  const double scale = 1.0 / static_cast<double>(batch.size());

  std::vector<double> dh(u), dc(u), dh_prev(u), dc_prev(u);
  std::array<std::vector<double>, kGates> da;
  for (auto& v : da) v.assign(u, 0.0);

  double loss = 0.0;
  for (std::size_t s = 0; s < batch.size(); ++s) {
    const Window& w = batch[s];
    const std::span<const double> mask =
        dropout_masks.empty() ? std::span<const double>() : std::span<const double>(dropout_masks[s]);
    const ForwardTrace tr = forward(params, w.inputs, mask);
    const double err = tr.output - w.target;
    loss += err * err;
    const double dy = 2.0 * err * scale;

    const std::size_t steps = tr.steps;
    const double* h_last = tr.hidden.data() + (steps - 1) * u;
    for (std::size_t j = 0; j < u; ++j) {
      const double m = mask.empty() ? 1.0 : mask[j];
      gradient.head_weights[j] += dy * h_last[j] * m;
      dh[j] = dy * params.head_weights[j] * m;
      dc[j] = 0.0;
    }
    gradient.head_bias += dy;

    for (std::size_t t = steps; t-- > 0;) {
      const double* x = w.inputs.data() + t * d;
      for (std::size_t j = 0; j < u; ++j) {
        const std::size_t at = t * u + j;
        const double i = tr.input_gate[at];
        const double f = tr.forget_gate[at];
        const double g = tr.candidate[at];
        const double o = tr.output_gate[at];
        const double tanh_c = std::tanh(tr.cell[at]);
        const double c_prev = t > 0 ? tr.cell[at - u] : 0.0;
        const double dcell = dc[j] + dh[j] * o * (1.0 - tanh_c * tanh_c);
        da[kOutput][j] = dh[j] * tanh_c * o * (1.0 - o);
        da[kInput][j] = dcell * g * i * (1.0 - i);
        da[kCandidate][j] = dcell * i * (1.0 - g * g);
        da[kForget][j] = dcell * c_prev * f * (1.0 - f);
        dc_prev[j] = dcell * f;
      }
      std::fill(dh_prev.begin(), dh_prev.end(), 0.0);
      const double* h_prev = t > 0 ? tr.hidden.data() + (t - 1) * u : nullptr;
      for (std::size_t g = 0; g < kGates; ++g) {
        for (std::size_t j = 0; j < u; ++j) {
          const double a = da[g][j];
          gradient.biases[g][j] += a;
          double* gw = gradient.input_weights[g].data() + j * d;
          for (std::size_t k = 0; k < d; ++k) gw[k] += a * x[k];
          if (h_prev) {
            double* gr = gradient.recurrent_weights[g].data() + j * u;
            const double* r = params.recurrent_weights[g].data() + j * u;
            for (std::size_t k = 0; k < u; ++k) {
              gr[k] += a * h_prev[k];
              dh_prev[k] += r[k] * a;
            }
          }
        }
      }
      dh.swap(dh_prev);
      dc.swap(dc_prev);
    }
  }
  return loss * scale;
}

namespace {

void sgd_step(Params& params, const Params& grad, double lr) {
  for (std::size_t g = 0; g < kGates; ++g) {
    for (std::size_t k = 0; k < params.input_weights[g].size(); ++k) {
      params.input_weights[g][k] -= lr * grad.input_weights[g][k];
    }
    for (std::size_t k = 0; k < params.recurrent_weights[g].size(); ++k) {
      params.recurrent_weights[g][k] -= lr * grad.recurrent_weights[g][k];
    }
    for (std::size_t k = 0; k < params.biases[g].size(); ++k) {
      params.biases[g][k] -= lr * grad.biases[g][k];
    }
  }
  for (std::size_t k = 0; k < params.head_weights.size(); ++k) {
    params.head_weights[k] -= lr * grad.head_weights[k];
  }
  params.head_bias -= lr * grad.head_bias;
}

}  // namespace

TrainResult train_chunked(const TrainConfig& config, std::span<const Window> windows,
                          std::optional<Params> initial) {
  if (windows.empty()) fail(ErrorCode::EmptyInput, "no training windows");
  if (config.units == 0 || config.batch_size == 0 || config.num_chunks == 0) {
    fail(ErrorCode::InvalidArgument, "units, batch_size and num_chunks must be >= 1");
  }
  if (!(config.dropout >= 0.0 && config.dropout < 1.0)) {
    fail(ErrorCode::InvalidArgument, "dropout must lie in [0, 1)");
  }
  const std::size_t steps = windows.front().inputs.size();
  for (const auto& w : windows) {
    if (w.inputs.size() != steps) fail(ErrorCode::WidthMismatch, "windows differ in length");
  }

  TrainResult result;
  result.params = initial ? std::move(*initial) : Params::initialize(config.units, 1, config.seed);
  if (result.params.units != config.units) {
    fail(ErrorCode::WidthMismatch, "initial parameters do not match the configured units");
  }

  std::mt19937_64 shuffle_rng(config.seed ^ 0x9E3779B97F4A7C15ULL);
  std::mt19937_64 dropout_rng(config.seed ^ 0xD1B54A32D192ED03ULL);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double keep_scale = 1.0 / (1.0 - config.dropout);

  const std::size_t n = windows.size();
  const std::size_t chunks = std::min(config.num_chunks, n);
  std::vector<std::pair<std::size_t, std::size_t>> bounds;  // [begin, end)
  for (std::size_t c = 0; c < chunks; ++c) bounds.emplace_back(c * n / chunks, (c + 1) * n / chunks);
  std::vector<std::size_t> chunk_order(chunks);
  std::iota(chunk_order.begin(), chunk_order.end(), 0);

  Params grad;
  std::vector<Window> batch;
  std::vector<std::vector<double>> masks;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    for (std::size_t c : chunk_order) {
      std::vector<std::size_t> idx(bounds[c].second - bounds[c].first);
      std::iota(idx.begin(), idx.end(), bounds[c].first);
      std::shuffle(idx.begin(), idx.end(), shuffle_rng);

      double loss_sum = 0.0;
      std::size_t batches = 0;
      for (std::size_t start = 0; start < idx.size(); start += config.batch_size) {
        const std::size_t end = std::min(idx.size(), start + config.batch_size);
        batch.clear();
        masks.clear();
        for (std::size_t k = start; k < end; ++k) {
          batch.push_back(windows[idx[k]]);
          if (config.dropout > 0.0) {
            std::vector<double> m(config.units);
            for (double& v : m) v = unit(dropout_rng) < config.dropout ? 0.0 : keep_scale;
            masks.push_back(std::move(m));
          }
        }
        const double loss = loss_and_gradient(result.params, batch, masks, grad);
        if (!std::isfinite(loss)) {
          fail(ErrorCode::NonFiniteLoss, "LSTM training loss became non-finite in epoch " +
                                             std::to_string(epoch));
        }
        sgd_step(result.params, grad, config.learning_rate);
        loss_sum += loss;
        ++batches;
      }
      result.loss_trace.push_back(loss_sum / static_cast<double>(batches));
    }
    std::shuffle(chunk_order.begin(), chunk_order.end(), shuffle_rng);
  }
  return result;
}

}  // namespace citywatch::lstm
