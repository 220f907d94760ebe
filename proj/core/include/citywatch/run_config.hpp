#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "citywatch/city_sim.hpp"
#include "citywatch/flow_ingest.hpp"
#include "citywatch/forecasters.hpp"
#include "citywatch/surge_detector.hpp"

namespace citywatch {

/// Every knob the command-line tool exposes, with its default. The file form
/// is a JSON object with the sections below; every key is optional and
/// unknown keys are rejected.
///
///   seed
///   ingest:     value_column, interval_seconds, aggregator
///   forecaster: model, ma_window, hw_alpha, hw_beta, hw_gamma, period,
///               lt_seasonal_dummies, lstm_units, lstm_dropout,
///               lstm_learning_rate, lstm_batch_size, lstm_epochs,
///               lstm_num_timesteps, lstm_num_chunks
///   evaluation: train_fraction, models
///   detector:   confidence, mode, window, gap_threshold, zero_is_silence,
///               train_fraction, established_fraction, aggregator
///   simulator:  see sim_config_from_json
///   stream:     skew_intervals, strict, radius, rate_field, rate_detectors
struct RunConfig {
  std::uint64_t seed = 42;

  std::string value_column = "Fwd Pkt Len Mean";
  Seconds interval{3600};
  Aggregator aggregator = Aggregator::Mean;

  ForecasterConfig forecaster;

  double train_fraction = 0.8;
  std::vector<ForecasterKind> compare_models = {
      ForecasterKind::MovingAverage, ForecasterKind::HoltWinters, ForecasterKind::LinearTrend};

  double confidence = 0.95;
  DetectionMode mode = DetectionMode::MeanShift;
  std::size_t window = 4;
  std::size_t gap_threshold = 3;
  bool zero_is_silence = false;
  double detect_train_fraction = 0.5;
  double established_fraction = 0.5;
  Aggregator detect_aggregator = Aggregator::Count;

  SimConfig simulator = default_sim_config(Scenario::Flood);

  std::size_t skew_intervals = 5;
  bool strict = false;
  std::size_t radius = 2;
  std::string rate_field = "packets";
  bool rate_detectors = true;
};

/// Applies the document on top of `base`.
RunConfig run_config_from_json(const std::string& text, RunConfig base = {});
std::string to_json(const RunConfig& config);

/// Forecaster config for `kind` carrying the shared settings of `config`.
ForecasterConfig forecaster_for(const RunConfig& config, ForecasterKind kind);

}  // namespace citywatch
