#include "citywatch/forecasters.hpp"

#include <cmath>
#include <limits>

#include <Eigen/Dense>
#include <json.hpp>

#include "citywatch/error.hpp"
#include "stats.hpp"

namespace citywatch {
namespace {

using ojson = nlohmann::ordered_json;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

// ---------------------------------------------------------------------------
// Holt-Winters (additive)

struct HoltWintersRun {
  double sse = 0.0;
  HoltWintersState end;
  std::vector<double> fitted;  // from index `period`
};

HoltWintersState initial_holt_winters(std::span<const double> y, std::size_t m) {
  HoltWintersState s;
  s.period = m;
  const double first = detail::mean(y.subspan(0, m));
  const double second = detail::mean(y.subspan(m, m));
  s.level = first;
  s.trend = (second - first) / static_cast<double>(m);
  s.seasonals.resize(m);
  for (std::size_t i = 0; i < m; ++i) s.seasonals[i] = y[i] - first;
  s.next_index = m;
  return s;
}

double holt_winters_prediction(const HoltWintersState& s) {
  return s.level + s.trend + s.seasonals[s.next_index % s.period];
}

void holt_winters_update(HoltWintersState& s, double y) {
  double& seasonal = s.seasonals[s.next_index % s.period];
  const double level = s.alpha * (y - seasonal) + (1.0 - s.alpha) * (s.level + s.trend);
  s.trend = s.beta * (level - s.level) + (1.0 - s.beta) * s.trend;
  seasonal = s.gamma * (y - level) + (1.0 - s.gamma) * seasonal;
  s.level = level;
  ++s.next_index;
}

HoltWintersRun run_holt_winters(std::span<const double> y, std::size_t m, double alpha, double beta,
                                double gamma, bool keep_fitted) {
  HoltWintersRun run;
  run.end = initial_holt_winters(y, m);
  run.end.alpha = alpha;
  run.end.beta = beta;
  run.end.gamma = gamma;
  if (keep_fitted) run.fitted.reserve(y.size() - m);
  for (std::size_t t = m; t < y.size(); ++t) {
    const double pred = holt_winters_prediction(run.end);
    const double err = y[t] - pred;
    run.sse += err * err;
    if (keep_fitted) run.fitted.push_back(pred);
    holt_winters_update(run.end, y[t]);
  }
  return run;
}

std::vector<double> grid_or_fixed(const std::optional<double>& fixed) {
  if (fixed) return {*fixed};
  std::vector<double> grid;
  for (int k = 1; k <= 9; ++k) grid.push_back(k / 10.0);
  return grid;
}

// ---------------------------------------------------------------------------

double linear_trend_value(const LinearTrendState& s, std::size_t t) {
  double v = s.intercept + s.slope * static_cast<double>(t);
  if (!s.seasonal_effects.empty()) v += s.seasonal_effects[t % s.seasonal_effects.size()];
  return v;
}

LinearTrendState fit_linear_trend(std::span<const double> y, bool dummies, std::size_t period) {
  const std::size_t n = y.size();
  const std::size_t extra = dummies ? period - 1 : 0;
  Eigen::MatrixXd design(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(2 + extra));
  Eigen::VectorXd target(static_cast<Eigen::Index>(n));
  design.setZero();
  for (std::size_t t = 0; t < n; ++t) {
    const auto row = static_cast<Eigen::Index>(t);
    design(row, 0) = 1.0;
    design(row, 1) = static_cast<double>(t);
    if (dummies && t % period != 0) design(row, static_cast<Eigen::Index>(1 + t % period)) = 1.0;
    target(row) = y[t];
  }
  const Eigen::VectorXd coef = design.colPivHouseholderQr().solve(target);
  LinearTrendState s;
  s.intercept = coef(0);
  s.slope = coef(1);
  if (dummies) {
    s.seasonal_effects.assign(period, 0.0);
    for (std::size_t k = 1; k < period; ++k) s.seasonal_effects[k] = coef(static_cast<Eigen::Index>(1 + k));
  }
  s.next_index = n;
  return s;
}

// ---------------------------------------------------------------------------

void fill_residuals(ForecastResult& result, std::span<const double> y) {
  result.residuals.clear();
  for (std::size_t k = 0; k < result.fitted.size(); ++k) {
    result.residuals.push_back(y[result.first_fitted_index + k] - result.fitted[k]);
  }
  result.residual_std = detail::population_stddev(result.residuals);
}

std::vector<double> tail(std::span<const double> y, std::size_t count) {
  count = std::min(count, y.size());
  return {y.end() - static_cast<std::ptrdiff_t>(count), y.end()};
}

lstm::TrainConfig train_config(const ForecasterConfig& c) {
  lstm::TrainConfig t;
  t.units = c.lstm_units;
  t.dropout = c.lstm_dropout;
  t.learning_rate = c.lstm_learning_rate;
  t.batch_size = c.lstm_batch_size;
  t.epochs = c.lstm_epochs;
  t.num_chunks = c.lstm_num_chunks;
  t.seed = c.rng_seed;
  return t;
}

}  // namespace

std::string_view to_string(ForecasterKind kind) noexcept {
  switch (kind) {
    case ForecasterKind::MovingAverage: return "moving_average";
    case ForecasterKind::HoltWinters: return "holt_winters";
    case ForecasterKind::LinearTrend: return "linear_trend";
    case ForecasterKind::Lstm: return "lstm";
  }
  return "unknown";
}

std::optional<ForecasterKind> parse_forecaster_kind(std::string_view name) {
  if (name == "moving_average" || name == "ma") return ForecasterKind::MovingAverage;
  if (name == "holt_winters" || name == "hw") return ForecasterKind::HoltWinters;
  if (name == "linear_trend" || name == "lt") return ForecasterKind::LinearTrend;
  if (name == "lstm") return ForecasterKind::Lstm;
  return std::nullopt;
}

std::string ForecasterConfig::name() const {
  switch (variant) {
    case ForecasterKind::MovingAverage: return "moving_average(w=" + std::to_string(ma_window) + ")";
    case ForecasterKind::HoltWinters: return "holt_winters(m=" + std::to_string(hw_period) + ")";
    case ForecasterKind::LinearTrend:
      return lt_seasonal_dummies ? "linear_trend(m=" + std::to_string(hw_period) + ")" : "linear_trend";
    case ForecasterKind::Lstm:
      return "lstm(units=" + std::to_string(lstm_units) + ",T=" + std::to_string(lstm_num_timesteps) + ")";
  }
  return "unknown";
}

std::size_t ForecasterConfig::min_train_length() const {
  switch (variant) {
    case ForecasterKind::MovingAverage: return std::max<std::size_t>(ma_window, 1);
    case ForecasterKind::HoltWinters: return 2 * hw_period;
    case ForecasterKind::LinearTrend: return lt_seasonal_dummies ? 2 * hw_period : 2;
    case ForecasterKind::Lstm: return lstm_num_timesteps + 1;
  }
  return 1;
}

FittedForecaster::FittedForecaster(ForecasterConfig config, ForecasterState state,
                                   ForecastResult result, std::vector<double> history,
                                   Instant train_start, Seconds interval, std::size_t train_length)
    : config_(std::move(config)),
      state_(std::move(state)),
      result_(std::move(result)),
      history_(std::move(history)),
      train_start_(train_start),
      interval_(interval),
      train_length_(train_length) {}

FittedForecaster fit(const ForecasterConfig& config, const TimeSeries& train) {
  if (train.has_missing()) {
    fail(ErrorCode::MissingValuesPresent, "training series must be gap-free");
  }
  const std::span<const double> y = train.values();
  const std::size_t n = y.size();
  if ((config.variant == ForecasterKind::HoltWinters ||
       (config.variant == ForecasterKind::LinearTrend && config.lt_seasonal_dummies)) &&
      config.hw_period < 2) {
    fail(ErrorCode::InvalidArgument, "seasonal period must be at least 2");
  }
  if (config.variant == ForecasterKind::MovingAverage && config.ma_window == 0) {
    fail(ErrorCode::InvalidArgument, "moving-average window must be at least 1");
  }
  if (n < config.min_train_length()) {
    fail(ErrorCode::SeriesTooShort, config.name() + " needs at least " +
                                        std::to_string(config.min_train_length()) +
                                        " training points, got " + std::to_string(n));
  }

  ForecastResult result;
  ForecasterState state;
  std::vector<double> history;

  switch (config.variant) {
    case ForecasterKind::MovingAverage: {
      const std::size_t w = config.ma_window;
      result.first_fitted_index = w;
      double sum = 0.0;
      for (std::size_t t = 0; t < w; ++t) sum += y[t];
      for (std::size_t t = w; t < n; ++t) {
        // Recomputed per point so fitted values do not accumulate rounding.
        result.fitted.push_back(detail::mean(y.subspan(t - w, w)));
      }
      state = MovingAverageState{w};
      history = tail(y, w);
      break;
    }
    case ForecasterKind::HoltWinters: {
      const std::size_t m = config.hw_period;
      double best_sse = std::numeric_limits<double>::infinity();
      double best_a = 0.0, best_b = 0.0, best_g = 0.0;
      for (double a : grid_or_fixed(config.hw_alpha)) {
        for (double b : grid_or_fixed(config.hw_beta)) {
          for (double g : grid_or_fixed(config.hw_gamma)) {
            const double sse = run_holt_winters(y, m, a, b, g, false).sse;
            if (sse < best_sse) {
              best_sse = sse;
              best_a = a;
              best_b = b;
              best_g = g;
            }
          }
        }
      }
      HoltWintersRun run = run_holt_winters(y, m, best_a, best_b, best_g, true);
      result.first_fitted_index = m;
      result.fitted = std::move(run.fitted);
      state = std::move(run.end);
      break;
    }
    case ForecasterKind::LinearTrend: {
      LinearTrendState s = fit_linear_trend(y, config.lt_seasonal_dummies, config.hw_period);
      result.first_fitted_index = 0;
      for (std::size_t t = 0; t < n; ++t) result.fitted.push_back(linear_trend_value(s, t));
      state = std::move(s);
      break;
    }
    case ForecasterKind::Lstm: {
      const std::size_t steps = config.lstm_num_timesteps;
      LstmState s;
      s.scaler = fit_scaler(train);
      s.timesteps = steps;
      std::vector<double> scaled(n);
      for (std::size_t t = 0; t < n; ++t) scaled[t] = s.scaler.apply(y[t]);
      const std::vector<Window> windows = sliding_windows(scaled, steps);
      lstm::TrainResult trained = lstm::train_chunked(train_config(config), windows);
      s.params = std::move(trained.params);
      s.loss_trace = std::move(trained.loss_trace);
      result.first_fitted_index = steps;
      for (const auto& w : windows) {
        const double pred = s.scaler.invert(lstm::predict(s.params, w.inputs));
        if (!std::isfinite(pred)) fail(ErrorCode::NonFiniteLoss, "LSTM produced a non-finite fit");
        result.fitted.push_back(pred);
      }
      state = std::move(s);
      history = tail(y, steps);
      break;
    }
  }
  fill_residuals(result, y);
  result.train_std = detail::sample_stddev(y);
  return FittedForecaster(config, std::move(state), std::move(result), std::move(history),
                          train.start(), train.interval(), n);
}

OnlinePredictor::OnlinePredictor(const FittedForecaster& model) : state_(model.state()) {
  if (const auto* lstm_state = std::get_if<LstmState>(&state_)) {
    for (double v : model.history()) context_.push_back(lstm_state->scaler.apply(v));
  } else {
    context_ = model.history();
  }
}

double OnlinePredictor::predict() const {
  return std::visit(
      Overloaded{
          [&](const MovingAverageState& s) {
            return detail::mean(std::span<const double>(context_).last(s.window));
          },
          [&](const HoltWintersState& s) { return holt_winters_prediction(s); },
          [&](const LinearTrendState& s) { return linear_trend_value(s, s.next_index); },
          [&](const LstmState& s) { return s.scaler.invert(lstm::predict(s.params, context_)); },
      },
      state_);
}

void OnlinePredictor::observe(std::optional<double> actual) {
  const double y = actual ? *actual : predict();
  std::visit(Overloaded{
                 [&](MovingAverageState&) {
                   context_.erase(context_.begin());
                   context_.push_back(y);
                 },
                 [&](HoltWintersState& s) { holt_winters_update(s, y); },
                 [&](LinearTrendState& s) { ++s.next_index; },
                 [&](LstmState& s) {
                   context_.erase(context_.begin());
                   context_.push_back(s.scaler.apply(y));
                 },
             },
             state_);
}

std::vector<double> forecast(const FittedForecaster& model, std::size_t horizon) {
  if (horizon == 0) fail(ErrorCode::InvalidArgument, "horizon must be at least 1");
  OnlinePredictor predictor(model);
  if (std::holds_alternative<MovingAverageState>(model.state())) {
    return std::vector<double>(horizon, predictor.predict());
  }
  std::vector<double> out;
  out.reserve(horizon);
  for (std::size_t h = 0; h < horizon; ++h) {
    out.push_back(predictor.predict());
    predictor.observe(std::nullopt);
  }
  return out;
}

std::vector<double> predict_one_step(const FittedForecaster& model, const TimeSeries& continuation) {
  if (continuation.start() != model.next_time() || continuation.interval() != model.interval()) {
    fail(ErrorCode::TimeBaseMismatch, "continuation does not start right after training");
  }
  OnlinePredictor predictor(model);
  std::vector<double> out;
  out.reserve(continuation.size());
  for (std::size_t t = 0; t < continuation.size(); ++t) {
    out.push_back(predictor.predict());
    predictor.observe(continuation.at(t));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

ojson optional_json(const std::optional<double>& v) {
  return v ? ojson(*v) : ojson(nullptr);
}

std::optional<double> optional_from(const nlohmann::json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

ojson config_json(const ForecasterConfig& c) {
  ojson j;
  j["variant"] = std::string(to_string(c.variant));
  j["ma_window"] = c.ma_window;
  j["hw_alpha"] = optional_json(c.hw_alpha);
  j["hw_beta"] = optional_json(c.hw_beta);
  j["hw_gamma"] = optional_json(c.hw_gamma);
  j["hw_period"] = c.hw_period;
  j["lt_seasonal_dummies"] = c.lt_seasonal_dummies;
  j["lstm_units"] = c.lstm_units;
  j["lstm_dropout"] = c.lstm_dropout;
  j["lstm_learning_rate"] = c.lstm_learning_rate;
  j["lstm_batch_size"] = c.lstm_batch_size;
  j["lstm_epochs"] = c.lstm_epochs;
  j["lstm_num_timesteps"] = c.lstm_num_timesteps;
  j["lstm_num_chunks"] = c.lstm_num_chunks;
  j["rng_seed"] = c.rng_seed;
  return j;
}

ForecasterConfig config_from(const nlohmann::json& j) {
  ForecasterConfig c;
  const auto kind = parse_forecaster_kind(j.at("variant").get<std::string>());
  if (!kind) fail(ErrorCode::ParseFailure, "unknown forecaster variant");
  c.variant = *kind;
  c.ma_window = j.at("ma_window").get<std::size_t>();
  c.hw_alpha = optional_from(j.at("hw_alpha"));
  c.hw_beta = optional_from(j.at("hw_beta"));
  c.hw_gamma = optional_from(j.at("hw_gamma"));
  c.hw_period = j.at("hw_period").get<std::size_t>();
  c.lt_seasonal_dummies = j.at("lt_seasonal_dummies").get<bool>();
  c.lstm_units = j.at("lstm_units").get<std::size_t>();
  c.lstm_dropout = j.at("lstm_dropout").get<double>();
  c.lstm_learning_rate = j.at("lstm_learning_rate").get<double>();
  c.lstm_batch_size = j.at("lstm_batch_size").get<std::size_t>();
  c.lstm_epochs = j.at("lstm_epochs").get<std::size_t>();
  c.lstm_num_timesteps = j.at("lstm_num_timesteps").get<std::size_t>();
  c.lstm_num_chunks = j.at("lstm_num_chunks").get<std::size_t>();
  c.rng_seed = j.at("rng_seed").get<std::uint64_t>();
  return c;
}

}  // namespace

std::string config_to_json(const ForecasterConfig& config) { return config_json(config).dump(); }

std::string to_json(const FittedForecaster& model) {
  ojson j;
  j["variant"] = std::string(to_string(model.config().variant));
  j["config"] = config_json(model.config());
  ojson params;
  ojson scaler = nullptr;
  std::visit(Overloaded{
                 [&](const MovingAverageState& s) { params["window"] = s.window; },
                 [&](const HoltWintersState& s) {
                   params["alpha"] = s.alpha;
                   params["beta"] = s.beta;
                   params["gamma"] = s.gamma;
                   params["period"] = s.period;
                   params["level"] = s.level;
                   params["trend"] = s.trend;
                   params["seasonals"] = s.seasonals;
                   params["next_index"] = s.next_index;
                 },
                 [&](const LinearTrendState& s) {
                   params["intercept"] = s.intercept;
                   params["slope"] = s.slope;
                   params["seasonal_effects"] = s.seasonal_effects;
                   params["next_index"] = s.next_index;
                 },
                 [&](const LstmState& s) {
                   params["units"] = s.params.units;
                   params["input_dim"] = s.params.input_dim;
                   params["timesteps"] = s.timesteps;
                   params["weights"] = s.params.flatten();
                   params["loss_trace"] = s.loss_trace;
                   scaler = ojson{{"min", s.scaler.min}, {"max", s.scaler.max}};
                 },
             },
             model.state());
  j["parameters"] = std::move(params);
  j["scaler"] = std::move(scaler);
  j["history"] = model.history();
  j["train"] = ojson{{"start", format_iso8601(model.train_start())},
                     {"interval_seconds", model.interval().count()},
                     {"length", model.train_length()}};
  const ForecastResult& r = model.result();
  j["fit"] = ojson{{"first_fitted_index", r.first_fitted_index},
                   {"fitted", r.fitted},
                   {"residuals", r.residuals},
                   {"residual_std", r.residual_std},
                   {"train_std", r.train_std}};
  return j.dump();
}

FittedForecaster forecaster_from_json(const std::string& text) {
  try {
    const nlohmann::json j = nlohmann::json::parse(text);
    ForecasterConfig config = config_from(j.at("config"));
    const nlohmann::json& p = j.at("parameters");
    ForecasterState state;
    switch (config.variant) {
      case ForecasterKind::MovingAverage:
        state = MovingAverageState{p.at("window").get<std::size_t>()};
        break;
      case ForecasterKind::HoltWinters: {
        HoltWintersState s;
        s.alpha = p.at("alpha").get<double>();
        s.beta = p.at("beta").get<double>();
        s.gamma = p.at("gamma").get<double>();
        s.period = p.at("period").get<std::size_t>();
        s.level = p.at("level").get<double>();
        s.trend = p.at("trend").get<double>();
        s.seasonals = p.at("seasonals").get<std::vector<double>>();
        s.next_index = p.at("next_index").get<std::size_t>();
        if (s.period < 1 || s.seasonals.size() != s.period) {
          fail(ErrorCode::ParseFailure, "seasonal vector does not match the period");
        }
        state = std::move(s);
        break;
      }
      case ForecasterKind::LinearTrend: {
        LinearTrendState s;
        s.intercept = p.at("intercept").get<double>();
        s.slope = p.at("slope").get<double>();
        s.seasonal_effects = p.at("seasonal_effects").get<std::vector<double>>();
        s.next_index = p.at("next_index").get<std::size_t>();
        state = std::move(s);
        break;
      }
      case ForecasterKind::Lstm: {
        LstmState s;
        const auto units = p.at("units").get<std::size_t>();
        const auto input_dim = p.at("input_dim").get<std::size_t>();
        s.params = lstm::Params::unflatten(units, input_dim, p.at("weights").get<std::vector<double>>());
        s.timesteps = p.at("timesteps").get<std::size_t>();
        s.loss_trace = p.at("loss_trace").get<std::vector<double>>();
        s.scaler.min = j.at("scaler").at("min").get<double>();
        s.scaler.max = j.at("scaler").at("max").get<double>();
        state = std::move(s);
        break;
      }
    }
    ForecastResult result;
    const nlohmann::json& f = j.at("fit");
    result.first_fitted_index = f.at("first_fitted_index").get<std::size_t>();
    result.fitted = f.at("fitted").get<std::vector<double>>();
    result.residuals = f.at("residuals").get<std::vector<double>>();
    result.residual_std = f.at("residual_std").get<double>();
    result.train_std = f.at("train_std").get<double>();
    const nlohmann::json& train = j.at("train");
    const auto start = parse_iso8601(train.at("start").get<std::string>());
    if (!start) fail(ErrorCode::ParseFailure, "model JSON: bad training start");
    auto history = j.at("history").get<std::vector<double>>();
    if (const auto* ma = std::get_if<MovingAverageState>(&state); ma && history.size() < ma->window) {
      fail(ErrorCode::ParseFailure, "model JSON: history shorter than the MA window");
    }
    if (const auto* ls = std::get_if<LstmState>(&state); ls && history.size() != ls->timesteps) {
      fail(ErrorCode::ParseFailure, "model JSON: history does not cover the LSTM window");
    }
    return FittedForecaster(std::move(config), std::move(state), std::move(result),
                            std::move(history), *start,
                            Seconds{train.at("interval_seconds").get<std::int64_t>()},
                            train.at("length").get<std::size_t>());
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::ParseFailure, std::string("model JSON: ") + e.what());
  }
}

}  // namespace citywatch
