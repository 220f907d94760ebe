#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "citywatch/lstm.hpp"
#include "citywatch/timeseries.hpp"

namespace citywatch {

enum class ForecasterKind { MovingAverage, HoltWinters, LinearTrend, Lstm };

std::string_view to_string(ForecasterKind kind) noexcept;
std::optional<ForecasterKind> parse_forecaster_kind(std::string_view name);

/// Only the fields belonging to `variant` are consulted. LSTM defaults are
/// the reference Keras setup (10 units, dropout 0.2, SGD lr 0.01, batch 128,
/// one epoch, 1008 timesteps).
struct ForecasterConfig {
  ForecasterKind variant = ForecasterKind::HoltWinters;

  std::size_t ma_window = 24;

  // Unset smoothing constants are grid-searched over {0.1, ..., 0.9}.
  std::optional<double> hw_alpha;
  std::optional<double> hw_beta;
  std::optional<double> hw_gamma;
  std::size_t hw_period = 24;

  bool lt_seasonal_dummies = false;  // period taken from hw_period

  std::size_t lstm_units = 10;
  double lstm_dropout = 0.2;
  double lstm_learning_rate = 0.01;
  std::size_t lstm_batch_size = 128;
  std::size_t lstm_epochs = 1;
  std::size_t lstm_num_timesteps = 1008;
  std::size_t lstm_num_chunks = 2;

  std::uint64_t rng_seed = 42;

  /// Short display name, e.g. "holt_winters(m=24)".
  std::string name() const;
  /// Fewest training points fit() accepts.
  std::size_t min_train_length() const;

  bool operator==(const ForecasterConfig&) const = default;
};

/// In-sample one-step fit. fitted[k] and residuals[k] belong to training
/// index first_fitted_index + k; earlier points are warm-up.
struct ForecastResult {
  std::size_t first_fitted_index = 0;
  std::vector<double> fitted;
  std::vector<double> forecasts;
  std::vector<double> residuals;
  double residual_std = 0.0;  // population standard deviation
  double train_std = 0.0;     // sample standard deviation of the training values
};

struct MovingAverageState {
  std::size_t window = 1;
};

struct HoltWintersState {
  double alpha = 0.0, beta = 0.0, gamma = 0.0;
  std::size_t period = 0;
  double level = 0.0;
  double trend = 0.0;
  std::vector<double> seasonals;  // indexed by time mod period
  std::size_t next_index = 0;     // time index of the next observation
};

struct LinearTrendState {
  double intercept = 0.0;
  double slope = 0.0;
  std::vector<double> seasonal_effects;  // empty without dummies; [0] == 0
  std::size_t next_index = 0;
};

struct LstmState {
  lstm::Params params;
  Scaler scaler;
  std::size_t timesteps = 0;
  std::vector<double> loss_trace;
};

using ForecasterState = std::variant<MovingAverageState, HoltWintersState, LinearTrendState, LstmState>;

class FittedForecaster {
 public:
  FittedForecaster(ForecasterConfig config, ForecasterState state, ForecastResult result,
                   std::vector<double> history, Instant train_start, Seconds interval,
                   std::size_t train_length);

  const ForecasterConfig& config() const noexcept { return config_; }
  const ForecasterState& state() const noexcept { return state_; }
  const ForecastResult& result() const noexcept { return result_; }
  /// Most recent training values (unscaled) the predictor needs as context.
  const std::vector<double>& history() const noexcept { return history_; }
  Instant train_start() const noexcept { return train_start_; }
  Seconds interval() const noexcept { return interval_; }
  std::size_t train_length() const noexcept { return train_length_; }
  /// Timestamp of the first point after the training range.
  Instant next_time() const noexcept {
    return train_start_ + interval_ * static_cast<Seconds::rep>(train_length_);
  }

 private:
  ForecasterConfig config_;
  ForecasterState state_;
  ForecastResult result_;
  std::vector<double> history_;
  Instant train_start_;
  Seconds interval_;
  std::size_t train_length_;
};

/// Throws SeriesTooShort, MissingValuesPresent, or NonFiniteLoss (LSTM).
FittedForecaster fit(const ForecasterConfig& config, const TimeSeries& train);

/// Multi-step forecast after the training range. Moving average is flat;
/// the other variants roll forward on their own predictions.
std::vector<double> forecast(const FittedForecaster& model, std::size_t horizon);

/// One-step-ahead predictor continuing from the end of training. Each
/// observe() advances one interval; an absent observation is replaced by
/// the prediction.
class OnlinePredictor {
 public:
  explicit OnlinePredictor(const FittedForecaster& model);

  double predict() const;
  void observe(std::optional<double> actual);

 private:
  ForecasterState state_;
  std::vector<double> context_;  // MA: raw values; LSTM: scaled values
};

/// Teacher-forced one-step predictions for every point of `continuation`,
/// which must start right after the training range.
std::vector<double> predict_one_step(const FittedForecaster& model, const TimeSeries& continuation);

std::string to_json(const FittedForecaster& model);
FittedForecaster forecaster_from_json(const std::string& text);

std::string config_to_json(const ForecasterConfig& config);

}  // namespace citywatch
