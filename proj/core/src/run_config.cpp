#include "citywatch/run_config.hpp"

#include <algorithm>
#include <string_view>

#include <json.hpp>

#include "citywatch/error.hpp"

namespace citywatch {
namespace {

using ojson = nlohmann::ordered_json;

void reject_unknown(const ojson& j, std::initializer_list<std::string_view> allowed,
                    const std::string& where) {
  if (!j.is_object()) fail(ErrorCode::InvalidArgument, where + " must be an object");
  for (const auto& [key, value] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      fail(ErrorCode::InvalidArgument, "unknown config key " + where + "." + key);
    }
  }
}

template <typename T>
void read(const ojson& j, const char* key, T& into) {
  if (j.contains(key)) into = j[key].get<T>();
}

void read_optional(const ojson& j, const char* key, std::optional<double>& into) {
  if (!j.contains(key)) return;
  into = j[key].is_null() ? std::nullopt : std::optional<double>(j[key].get<double>());
}

Aggregator aggregator_from(const ojson& j) {
  const auto a = parse_aggregator(j.get<std::string>());
  if (!a) fail(ErrorCode::InvalidArgument, "unknown aggregator " + j.get<std::string>());
  return *a;
}

std::string aggregator_name(Aggregator a) {
  switch (a) {
    case Aggregator::Mean: return "mean";
    case Aggregator::Sum: return "sum";
    case Aggregator::Count: return "count";
  }
  return "mean";
}

ForecasterKind kind_from(const ojson& j) {
  const auto k = parse_forecaster_kind(j.get<std::string>());
  if (!k) fail(ErrorCode::InvalidArgument, "unknown model " + j.get<std::string>());
  return *k;
}

ojson optional_json(const std::optional<double>& v) { return v ? ojson(*v) : ojson(nullptr); }

}  // namespace

RunConfig run_config_from_json(const std::string& text, RunConfig c) {
  ojson j;
  try {
    j = ojson::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::InvalidArgument, std::string("config is not JSON: ") + e.what());
  }
  try {
    reject_unknown(j, {"seed", "ingest", "forecaster", "evaluation", "detector", "simulator", "stream"},
                   "config");
    read(j, "seed", c.seed);
    c.forecaster.rng_seed = c.seed;
    c.simulator.seed = c.seed;

    if (j.contains("ingest")) {
      const auto& s = j["ingest"];
      reject_unknown(s, {"value_column", "interval_seconds", "aggregator"}, "ingest");
      read(s, "value_column", c.value_column);
      if (s.contains("interval_seconds")) c.interval = Seconds{s["interval_seconds"].get<std::int64_t>()};
      if (s.contains("aggregator")) c.aggregator = aggregator_from(s["aggregator"]);
    }
    if (j.contains("forecaster")) {
      const auto& s = j["forecaster"];
      reject_unknown(s,
                     {"model", "ma_window", "hw_alpha", "hw_beta", "hw_gamma", "period",
                      "lt_seasonal_dummies", "lstm_units", "lstm_dropout", "lstm_learning_rate",
                      "lstm_batch_size", "lstm_epochs", "lstm_num_timesteps", "lstm_num_chunks"},
                     "forecaster");
      auto& f = c.forecaster;
      if (s.contains("model")) f.variant = kind_from(s["model"]);
      read(s, "ma_window", f.ma_window);
      read_optional(s, "hw_alpha", f.hw_alpha);
      read_optional(s, "hw_beta", f.hw_beta);
      read_optional(s, "hw_gamma", f.hw_gamma);
      read(s, "period", f.hw_period);
      read(s, "lt_seasonal_dummies", f.lt_seasonal_dummies);
      read(s, "lstm_units", f.lstm_units);
      read(s, "lstm_dropout", f.lstm_dropout);
      read(s, "lstm_learning_rate", f.lstm_learning_rate);
      read(s, "lstm_batch_size", f.lstm_batch_size);
      read(s, "lstm_epochs", f.lstm_epochs);
      read(s, "lstm_num_timesteps", f.lstm_num_timesteps);
      read(s, "lstm_num_chunks", f.lstm_num_chunks);
    }
    if (j.contains("evaluation")) {
      const auto& s = j["evaluation"];
      reject_unknown(s, {"train_fraction", "models"}, "evaluation");
      read(s, "train_fraction", c.train_fraction);
      if (s.contains("models")) {
        c.compare_models.clear();
        for (const auto& m : s["models"]) c.compare_models.push_back(kind_from(m));
      }
    }
    if (j.contains("detector")) {
      const auto& s = j["detector"];
      reject_unknown(s,
                     {"confidence", "mode", "window", "gap_threshold", "zero_is_silence",
                      "train_fraction", "established_fraction", "aggregator"},
                     "detector");
      read(s, "confidence", c.confidence);
      if (s.contains("mode")) {
        const auto m = parse_detection_mode(s["mode"].get<std::string>());
        if (!m) fail(ErrorCode::InvalidArgument, "unknown detection mode");
        c.mode = *m;
      }
      read(s, "window", c.window);
      read(s, "gap_threshold", c.gap_threshold);
      read(s, "zero_is_silence", c.zero_is_silence);
      read(s, "train_fraction", c.detect_train_fraction);
      read(s, "established_fraction", c.established_fraction);
      if (s.contains("aggregator")) c.detect_aggregator = aggregator_from(s["aggregator"]);
    }
    if (j.contains("simulator")) {
      ojson sim = j["simulator"];
      if (!sim.contains("seed")) sim["seed"] = c.seed;
      c.simulator = sim_config_from_json(sim.dump());
    }
    if (j.contains("stream")) {
      const auto& s = j["stream"];
      reject_unknown(s, {"skew_intervals", "strict", "radius", "rate_field", "rate_detectors"},
                     "stream");
      read(s, "skew_intervals", c.skew_intervals);
      read(s, "strict", c.strict);
      read(s, "radius", c.radius);
      read(s, "rate_field", c.rate_field);
      read(s, "rate_detectors", c.rate_detectors);
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::InvalidArgument, std::string("config: ") + e.what());
  }
  if (c.interval <= Seconds::zero()) fail(ErrorCode::InvalidArgument, "interval must be positive");
  z_score(c.confidence);
  return c;
}

std::string to_json(const RunConfig& c) {
  ojson j;
  j["seed"] = c.seed;
  j["ingest"] = {{"value_column", c.value_column},
                 {"interval_seconds", c.interval.count()},
                 {"aggregator", aggregator_name(c.aggregator)}};
  const auto& f = c.forecaster;
  ojson fj;
  fj["model"] = std::string(to_string(f.variant));
  fj["ma_window"] = f.ma_window;
  fj["hw_alpha"] = optional_json(f.hw_alpha);
  fj["hw_beta"] = optional_json(f.hw_beta);
  fj["hw_gamma"] = optional_json(f.hw_gamma);
  fj["period"] = f.hw_period;
  fj["lt_seasonal_dummies"] = f.lt_seasonal_dummies;
  fj["lstm_units"] = f.lstm_units;
  fj["lstm_dropout"] = f.lstm_dropout;
  fj["lstm_learning_rate"] = f.lstm_learning_rate;
  fj["lstm_batch_size"] = f.lstm_batch_size;
  fj["lstm_epochs"] = f.lstm_epochs;
  fj["lstm_num_timesteps"] = f.lstm_num_timesteps;
  fj["lstm_num_chunks"] = f.lstm_num_chunks;
  j["forecaster"] = std::move(fj);
  ojson models = ojson::array();
  for (auto k : c.compare_models) models.push_back(std::string(to_string(k)));
  j["evaluation"] = {{"train_fraction", c.train_fraction}, {"models", std::move(models)}};
  j["detector"] = {{"confidence", c.confidence},
                   {"mode", c.mode == DetectionMode::MeanShift ? "mean_shift" : "residual"},
                   {"window", c.window},
                   {"gap_threshold", c.gap_threshold},
                   {"zero_is_silence", c.zero_is_silence},
                   {"train_fraction", c.detect_train_fraction},
                   {"established_fraction", c.established_fraction},
                   {"aggregator", aggregator_name(c.detect_aggregator)}};
  j["simulator"] = ojson::parse(to_json(c.simulator));
  j["stream"] = {{"skew_intervals", c.skew_intervals},
                 {"strict", c.strict},
                 {"radius", c.radius},
                 {"rate_field", c.rate_field},
                 {"rate_detectors", c.rate_detectors}};
  return j.dump(2);
}

ForecasterConfig forecaster_for(const RunConfig& config, ForecasterKind kind) {
  ForecasterConfig f = config.forecaster;
  f.variant = kind;
  f.rng_seed = config.seed;
  return f;
}

}  // namespace citywatch
