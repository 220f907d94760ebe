#include "cli.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "citywatch/cc4.hpp"
#include "citywatch/city_sim.hpp"
#include "citywatch/flow_ingest.hpp"
#include "citywatch/forecasters.hpp"
#include "citywatch/model_eval.hpp"
#include "citywatch/monitor.hpp"
#include "citywatch/run_config.hpp"
#include "citywatch/stream_pipeline.hpp"
#include "citywatch/surge_detector.hpp"
#include "citywatch/timeseries.hpp"

namespace citywatch::cli {
namespace {

using ojson = nlohmann::ordered_json;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoFailure, "cannot open " + path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_file(const std::string& path, const std::string& body) {
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(parent, ec);
  }
  std::ofstream out(path, std::ios::binary);
  out << body;
  if (!out) fail(ErrorCode::IoFailure, "cannot write " + path);
}

// Raw flag values. Only flags present on the command line override the
// defaults and the config file; given() tells which those are.
struct Flags {
  std::string input;
  std::string out;
  std::string config;
  std::string value_col;
  std::int64_t interval = 0;
  std::string model;
  std::size_t period = 0;
  double confidence = 0.0;
  std::string mode;
  double train_frac = 0.0;
  std::uint64_t seed = 0;
  std::string agg;
  std::size_t window = 0;
  std::size_t ma_window = 0;

  // Each subcommand registers its own copy of a flag; only one subcommand runs.
  std::multimap<std::string, CLI::Option*> options;

  void add(const std::string& name, CLI::Option* option) { options.emplace(name, option); }
  bool given(const std::string& name) const {
    const auto [lo, hi] = options.equal_range(name);
    for (auto it = lo; it != hi; ++it) {
      if (it->second->count() > 0) return true;
    }
    return false;
  }
};

void add_common(CLI::App& sub, Flags& f, bool input_required = true) {
  auto* in = sub.add_option("--input", f.input, "Input file");
  if (input_required) in->required();
  f.add("--input", in);
  f.add("--config", sub.add_option("--config", f.config, "JSON run configuration"));
  f.add("--seed", sub.add_option("--seed", f.seed, "RNG seed"));
}

RunConfig resolve(const Flags& f) {
  RunConfig c;
  if (!f.config.empty()) c = run_config_from_json(read_file(f.config), c);
  if (f.given("--seed")) {
    c.seed = f.seed;
    c.forecaster.rng_seed = f.seed;
    c.simulator.seed = f.seed;
  }
  if (f.given("--value-col")) c.value_column = f.value_col;
  if (f.given("--interval")) {
    if (f.interval <= 0) fail(ErrorCode::InvalidArgument, "--interval must be positive");
    c.interval = Seconds{f.interval};
  }
  if (f.given("--model")) {
    const auto k = parse_forecaster_kind(f.model);
    if (!k) fail(ErrorCode::InvalidArgument, "unknown model " + f.model);
    c.forecaster.variant = *k;
  }
  if (f.given("--period")) c.forecaster.hw_period = f.period;
  if (f.given("--ma-window")) c.forecaster.ma_window = f.ma_window;
  if (f.given("--confidence")) {
    z_score(f.confidence);
    c.confidence = f.confidence;
  }
  if (f.given("--mode")) {
    const auto m = parse_detection_mode(f.mode);
    if (!m) fail(ErrorCode::InvalidArgument, "unknown mode " + f.mode);
    c.mode = *m;
  }
  if (f.given("--window")) c.window = f.window;
  return c;
}

Aggregator aggregator_flag(const Flags& f, Aggregator fallback) {
  if (!f.given("--agg")) return fallback;
  const auto a = parse_aggregator(f.agg);
  if (!a) fail(ErrorCode::InvalidArgument, "unknown aggregator " + f.agg);
  return *a;
}

double train_fraction_flag(const Flags& f, double fallback) {
  return f.given("--train-frac") ? f.train_frac : fallback;
}

ojson report_json(const IngestReport& r) {
  ojson j;
  j["rows_read"] = r.rows_read;
  j["rows_malformed"] = r.rows_malformed;
  j["rows_dropped_missing"] = r.rows_dropped_missing;
  j["rows_dropped_duplicate"] = r.rows_dropped_duplicate;
  j["rows_clean"] = r.rows_clean();
  j["series_start"] = r.series_start ? ojson(format_iso8601(*r.series_start)) : ojson(nullptr);
  j["series_end"] = r.series_end ? ojson(format_iso8601(*r.series_end)) : ojson(nullptr);
  return j;
}

bool is_json_path(const std::string& path) {
  return std::filesystem::path(path).extension() == ".json";
}

// --- subcommands -----------------------------------------------------------

int do_ingest(const Flags& f, std::ostream& out) {
  const RunConfig c = resolve(f);
  const Aggregator agg = aggregator_flag(f, c.aggregator);
  const Ingested ing = ingest_flow_csv(f.input, c.value_column);
  const TimeSeries series = to_series(ing.records, c.interval, agg);
  const std::string report = report_json(ing.report).dump(2) + "\n";
  if (!f.out.empty()) write_series_file(series, f.out);
  out << report;
  return kExitOk;
}

int do_inspect(const Flags& f, const std::vector<std::size_t>& periods, std::ostream& out) {
  const RunConfig c = resolve(f);
  std::vector<std::size_t> candidates = periods;
  if (candidates.empty()) candidates = {c.forecaster.hw_period};
  const TimeSeries series = read_series_file(f.input);
  const std::string body = to_json(diagnose(series, candidates)) + "\n";
  if (f.out.empty()) {
    out << body;
  } else {
    write_file(f.out, body);
  }
  return kExitOk;
}

int do_forecast(const Flags& f, std::size_t horizon, const std::string& save_model,
                const std::string& load_model, const std::string& result_path, std::ostream& out) {
  const RunConfig c = resolve(f);
  const double z = z_score(c.confidence);
  const TimeSeries series = read_series_file(f.input);

  std::optional<FittedForecaster> model;
  TimeSeries continuation = series;
  if (!load_model.empty()) {
    model = forecaster_from_json(read_file(load_model));
    const auto first = series.index_of(model->next_time());
    if (series.interval() != model->interval() || !first) {
      fail(ErrorCode::TimeBaseMismatch, "series does not continue the saved model");
    }
    continuation = series.slice(*first, series.size() - *first);
  } else {
    const auto [raw_train, test] = split(series, train_fraction_flag(f, c.train_fraction));
    model = fit(c.forecaster, interpolate_short_gaps(raw_train));
    continuation = test;
  }

  const double sigma = model->result().residual_std;
  OnlinePredictor predictor(*model);
  std::ostringstream csv;
  csv << "t,actual,predicted,lower,upper\n";
  std::vector<double> predictions;
  auto row = [&](Instant t, std::optional<double> actual, double p) {
    csv << format_iso8601(t) << ',' << (actual ? format_number(*actual) : "") << ','
        << format_number(p) << ',' << format_number(p - z * sigma) << ','
        << format_number(p + z * sigma) << '\n';
  };
  for (std::size_t i = 0; i < continuation.size(); ++i) {
    const double p = predictor.predict();
    predictions.push_back(p);
    row(continuation.time_at(i), continuation.at(i), p);
    predictor.observe(continuation.at(i));
  }
  for (std::size_t h = 0; h < horizon; ++h) {
    const double p = predictor.predict();
    predictions.push_back(p);
    row(continuation.time_at(continuation.size() + h), std::nullopt, p);
    predictor.observe(std::nullopt);
  }

  const ForecastResult& r = model->result();
  ojson result;
  result["model"] = model->config().name();
  result["first_fitted_index"] = r.first_fitted_index;
  result["fitted"] = r.fitted;
  result["residuals"] = r.residuals;
  result["residual_std"] = r.residual_std;
  result["train_std"] = r.train_std;
  result["forecast_start"] = format_iso8601(continuation.start());
  result["forecasts"] = predictions;
  result["confidence"] = c.confidence;

  if (!f.out.empty()) write_file(f.out, csv.str());
  if (!save_model.empty()) write_file(save_model, to_json(*model) + "\n");
  const std::string result_text = result.dump(2) + "\n";
  if (result_path.empty()) {
    out << result_text;
  } else {
    write_file(result_path, result_text);
  }
  return kExitOk;
}

int do_compare(const Flags& f, const std::vector<std::string>& models, const std::string& table_path,
               bool timings, std::ostream& out) {
  RunConfig c = resolve(f);
  if (!models.empty()) {
    c.compare_models.clear();
    for (const auto& m : models) {
      const auto k = parse_forecaster_kind(m);
      if (!k) fail(ErrorCode::InvalidArgument, "unknown model " + m);
      c.compare_models.push_back(*k);
    }
  }
  std::vector<ForecasterConfig> configs;
  for (auto k : c.compare_models) configs.push_back(forecaster_for(c, k));
  const TimeSeries series = read_series_file(f.input);
  const ModelReport report = compare_models(configs, series, train_fraction_flag(f, c.train_fraction));
  const std::string table = to_table(report, timings);
  if (!f.out.empty()) write_file(f.out, to_json(report, timings) + "\n");
  if (table_path.empty()) {
    out << table;
  } else {
    write_file(table_path, table);
  }
  return kExitOk;
}

MonitorOptions monitor_options(const RunConfig& c, double train_fraction) {
  MonitorOptions m;
  m.interval = c.interval;
  m.model = c.forecaster;
  m.model.rng_seed = c.seed;
  m.train_fraction = train_fraction;
  m.established_fraction = c.established_fraction;
  m.surge.confidence = c.confidence;
  m.surge.mode = c.mode;
  m.surge.window = c.window;
  m.dropout.gap_threshold = c.gap_threshold;
  m.dropout.zero_is_silence = c.zero_is_silence;
  m.identity.confidence = c.confidence;
  m.identity.window = c.window;
  m.identity.train_fraction = train_fraction;
  return m;
}

int do_detect(const Flags& f, const std::string& labels_dir, std::ostream& out) {
  const RunConfig c = resolve(f);
  z_score(c.confidence);
  const double frac = train_fraction_flag(f, c.detect_train_fraction);
  std::vector<AnomalyAlert> alerts;
  if (is_json_path(f.input)) {
    const TimeSeries series = read_series_file(f.input);
    const auto [train, test] = split(series, frac);
    const FittedForecaster model = fit(c.forecaster, interpolate_short_gaps(train));
    SurgeOptions s;
    s.confidence = c.confidence;
    s.mode = c.mode;
    s.window = c.window;
    alerts = detect_surges(series, model, s);
    DropoutOptions d;
    d.gap_threshold = c.gap_threshold;
    d.zero_is_silence = c.zero_is_silence;
    const auto gaps = detect_dropout(series, d);
    alerts.insert(alerts.end(), gaps.begin(), gaps.end());
    sort_alerts(alerts);
  } else {
    const Aggregator agg = aggregator_flag(f, c.detect_aggregator);
    if (agg == Aggregator::Mean) {
      fail(ErrorCode::InvalidArgument, "per-source detection needs --agg count or sum");
    }
    const Ingested ing = ingest_flow_csv(f.input, c.value_column);
    std::vector<SourceObservation> obs;
    obs.reserve(ing.records.size());
    for (const auto& r : ing.records) {
      obs.push_back({r.timestamp, r.source_id(), agg == Aggregator::Count ? 1.0 : *r.value});
    }
    alerts = monitor_sources(obs, monitor_options(c, frac)).alerts;
  }
  const std::string lines = to_json_lines(alerts);
  if (f.out.empty()) {
    out << lines;
  } else {
    write_file(f.out, lines);
  }
  if (!labels_dir.empty()) out << to_json(score_detections(alerts, read_labels(labels_dir))) << '\n';
  return kExitOk;
}

int do_simulate(const Flags& f, const std::string& scenario, std::ostream& out) {
  RunConfig c = resolve(f);
  if (!scenario.empty()) {
    const auto s = parse_scenario(scenario);
    if (!s) fail(ErrorCode::InvalidArgument, "unknown scenario " + scenario);
    SimConfig preset = default_sim_config(*s);
    preset.seed = c.simulator.seed;
    c.simulator = preset;
  }
  if (f.given("--interval")) c.simulator.interval = c.interval;
  if (f.out.empty()) throw UsageError("simulate needs --out DIR");
  const LabeledTrace trace = generate_trace(c.simulator);
  write_trace(trace, f.out);
  ojson summary;
  summary["out"] = f.out;
  summary["seed"] = c.simulator.seed;
  summary["intervals"] = c.simulator.duration;
  summary["labels"] = trace.labels.rows.size();
  out << summary.dump() << '\n';
  return kExitOk;
}

int do_stream(const Flags& f, const std::string& train_path, const std::string& schema_path,
              const std::optional<std::size_t>& radius, const std::optional<std::size_t>& skew,
              bool strict, bool no_rates, std::ostream& out) {
  RunConfig c = resolve(f);
  if (radius) c.radius = *radius;
  if (skew) c.skew_intervals = *skew;
  if (strict) c.strict = true;
  if (no_rates) c.rate_detectors = false;

  const SymbolSchema schema =
      schema_path.empty() ? default_event_schema() : schema_from_json(read_file(schema_path));
  std::vector<std::pair<BitVector, PacketClass>> samples;
  for (const auto& rec : read_events_file(train_path)) {
    if (!rec.label) fail(ErrorCode::ParseFailure, "training record without a class");
    samples.emplace_back(symbolize(rec, schema).bits, *rec.label);
  }
  const CC4Network network = CC4Network::train(samples, c.radius);

  PipelineOptions p;
  p.interval = c.interval;
  p.skew_intervals = c.skew_intervals;
  p.strict = c.strict;
  p.rate_detectors = c.rate_detectors;
  p.rate_field = c.rate_field;
  p.monitor = monitor_options(c, c.detect_train_fraction);

  std::ifstream in(f.input, std::ios::binary);
  if (!in) fail(ErrorCode::IoFailure, "cannot open " + f.input);
  std::string lines;
  const PipelineCounts counts = run_pipeline(in, schema, network, p, [&](const AnomalyAlert& a) {
    lines += to_json_line(a);
    lines.push_back('\n');
  });
  if (f.out.empty()) {
    out << lines;
  } else {
    write_file(f.out, lines);
  }
  out << to_json(counts) << '\n';
  return kExitOk;
}

void print_error(std::ostream& err, const std::string& code, int exit, const std::string& message) {
  ojson j;
  j["error"] = code;
  j["exit"] = exit;
  j["message"] = message;
  err << j.dump() << '\n';
}

}  // namespace

int exit_code_for(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument:
    case ErrorCode::UnsupportedConfidence:
      return kExitUsage;
    case ErrorCode::NonFiniteLoss:
    case ErrorCode::EmptyTrainingSet:
    case ErrorCode::WidthMismatch:
      return kExitModel;
    default:
      return kExitData;
  }
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Surge and intrusion detection for IoT gateway telemetry", "citywatch"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "citywatch 0.1.0");

  Flags f;
  auto add_interval = [&](CLI::App* s) {
    f.add("--interval", s->add_option("--interval", f.interval, "Bucket width in seconds"));
  };
  auto add_model = [&](CLI::App* s) {
    f.add("--model", s->add_option("--model", f.model, "moving_average | holt_winters | linear_trend | lstm"));
    f.add("--period", s->add_option("--period", f.period, "Seasonal period in buckets"));
    f.add("--ma-window", s->add_option("--ma-window", f.ma_window, "Moving-average window"));
  };
  auto add_train = [&](CLI::App* s) {
    f.add("--train-frac", s->add_option("--train-frac", f.train_frac, "Training share")
                                    ->check(CLI::Range(0.0, 1.0)));
  };
  auto add_detector = [&](CLI::App* s) {
    f.add("--confidence", s->add_option("--confidence", f.confidence, "Z-table level"));
    f.add("--mode", s->add_option("--mode", f.mode, "mean_shift | residual"));
    f.add("--window", s->add_option("--window", f.window, "Points per mean-shift window"));
  };

  auto* ingest = app.add_subcommand("ingest", "Flow CSV to series JSON; prints the ingest report");
  add_common(*ingest, f);
  ingest->add_option("--out", f.out, "Series JSON path");
  f.add("--value-col", ingest->add_option("--value-col", f.value_col, "Column to model"));
  add_interval(ingest);
  f.add("--agg", ingest->add_option("--agg", f.agg, "mean | sum | count"));

  std::vector<std::size_t> periods;
  auto* inspect = app.add_subcommand("inspect", "Seasonality and stationarity report");
  add_common(*inspect, f);
  inspect->add_option("--out", f.out, "Report path (stdout when absent)");
  f.add("--period", inspect->add_option("--period", periods, "Candidate period (repeatable)"));

  std::size_t horizon = 0;
  std::string save_model, load_model, result_path;
  auto* forecast = app.add_subcommand("forecast", "Fit, forecast the test split, write band CSV");
  add_common(*forecast, f);
  forecast->add_option("--out", f.out, "Forecast CSV path");
  add_model(forecast);
  add_train(forecast);
  f.add("--confidence", forecast->add_option("--confidence", f.confidence, "Band level"));
  forecast->add_option("--horizon", horizon, "Extra steps past the series end");
  forecast->add_option("--save-model", save_model, "Write the fitted model JSON");
  forecast->add_option("--load-model", load_model, "Use a saved model instead of fitting");
  forecast->add_option("--result", result_path, "ForecastResult JSON path (stdout when absent)");

  std::vector<std::string> models;
  std::string table_path;
  bool timings = false;
  auto* compare = app.add_subcommand("compare", "Rank forecasters against the persistence baseline");
  add_common(*compare, f);
  compare->add_option("--out", f.out, "Report JSON path");
  f.add("--period", compare->add_option("--period", f.period, "Seasonal period in buckets"));
  f.add("--ma-window", compare->add_option("--ma-window", f.ma_window, "Moving-average window"));
  compare->add_option("--model", models, "Model to include (repeatable)");
  add_train(compare);
  compare->add_option("--table", table_path, "Table path (stdout when absent)");
  compare->add_flag("--timings", timings, "Include fit times (not reproducible)");

  std::string labels_dir;
  auto* detect = app.add_subcommand("detect", "Alerts from a flow CSV or a series JSON");
  add_common(*detect, f);
  detect->add_option("--out", f.out, "Alert JSON Lines path (stdout when absent)");
  f.add("--value-col", detect->add_option("--value-col", f.value_col, "Column to model"));
  add_interval(detect);
  add_model(detect);
  add_train(detect);
  add_detector(detect);
  f.add("--agg", detect->add_option("--agg", f.agg, "count | sum"));
  detect->add_option("--labels", labels_dir, "Trace directory to score the alerts against");

  std::string scenario;
  auto* simulate = app.add_subcommand("simulate", "Generate a labeled smart-city trace");
  add_common(*simulate, f, false);
  simulate->add_option("--out", f.out, "Output directory")->required();
  simulate->add_option("--scenario", scenario, "baseline | flood | silence | sybil | mixed");
  add_interval(simulate);

  std::string train_path, schema_path;
  std::optional<std::size_t> radius, skew;
  bool strict = false, no_rates = false;
  auto* stream = app.add_subcommand("stream", "CC4 intrusion pipeline over event JSON Lines");
  add_common(*stream, f);
  stream->add_option("--out", f.out, "Alert JSON Lines path (stdout when absent)");
  stream->add_option("--train", train_path, "Labeled training events")->required();
  stream->add_option("--schema", schema_path, "Symbolization schema JSON");
  stream->add_option("--radius", radius, "CC4 generalization radius");
  stream->add_option("--skew", skew, "Reorder window in intervals");
  stream->add_flag("--strict", strict, "Alert on Unknown records too");
  stream->add_flag("--no-rate-detectors", no_rates, "Intrusion alerts only");
  add_interval(stream);
  add_model(stream);
  add_detector(stream);

  std::vector<std::string> argv_store;
  argv_store.reserve(args.size() + 1);
  argv_store.push_back("citywatch");
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_store) argv.push_back(a.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      app.exit(e, out, err);
      return kExitOk;
    }
    print_error(err, "Usage", kExitUsage, e.what());
    return kExitUsage;
  }

  try {
    if (*ingest) return do_ingest(f, out);
    if (*inspect) return do_inspect(f, periods, out);
    if (*forecast) return do_forecast(f, horizon, save_model, load_model, result_path, out);
    if (*compare) return do_compare(f, models, table_path, timings, out);
    if (*detect) return do_detect(f, labels_dir, out);
    if (*simulate) return do_simulate(f, scenario, out);
    if (*stream) return do_stream(f, train_path, schema_path, radius, skew, strict, no_rates, out);
  } catch (const Error& e) {
    const int code = exit_code_for(e.code());
    print_error(err, std::string(to_string(e.code())), code, e.what());
    return code;
  } catch (const UsageError& e) {
    print_error(err, "Usage", kExitUsage, e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    print_error(err, "Internal", kExitData, e.what());
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace citywatch::cli
