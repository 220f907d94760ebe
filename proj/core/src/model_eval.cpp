#include "citywatch/model_eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>

#include <json.hpp>

#include "citywatch/error.hpp"

namespace citywatch {
namespace {

void check_pairs(std::span<const double> actual, std::span<const double> predicted) {
  if (actual.size() != predicted.size()) {
    fail(ErrorCode::LengthMismatch, "actual and predicted differ in length");
  }
  if (actual.empty()) fail(ErrorCode::EmptyInput, "nothing to score");
}

std::string fixed(double v, int precision) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", precision, v);
  return buf;
}

std::string scientific(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6e", v);
  return buf;
}

}  // namespace

double mse(std::span<const double> actual, std::span<const double> predicted) {
  check_pairs(actual, predicted);
  double sum = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    const double d = actual[i] - predicted[i];
    sum += d * d;
  }
  return sum / static_cast<double>(actual.size());
}

MapeResult mape(std::span<const double> actual, std::span<const double> predicted) {
  check_pairs(actual, predicted);
  MapeResult r;
  double sum = 0.0;
  std::size_t scored = 0;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    if (actual[i] == 0.0) {
      ++r.skipped_zero_targets;
      continue;
    }
    sum += std::abs(actual[i] - predicted[i]) / std::abs(actual[i]);
    ++scored;
  }
  if (scored == 0) fail(ErrorCode::AllTargetsZero, "every target is zero");
  r.percent = sum / static_cast<double>(scored) * 100.0;
  return r;
}

std::string pattern_class(ForecasterKind kind) {
  switch (kind) {
    case ForecasterKind::HoltWinters:
    case ForecasterKind::LinearTrend: return "Seasonality and or Trend";
    case ForecasterKind::MovingAverage: return "Stationary";
    case ForecasterKind::Lstm: return "Any Pattern (Stationary/Seasonality)";
  }
  return "";
}

ModelReport compare_models(std::span<const ForecasterConfig> configs, const TimeSeries& series,
                           double train_fraction) {
  const auto [raw_train, test] = split(series, train_fraction);
  const TimeSeries train = interpolate_short_gaps(raw_train);

  std::vector<ForecasterConfig> all(configs.begin(), configs.end());
  ForecasterConfig baseline;
  baseline.variant = ForecasterKind::MovingAverage;
  baseline.ma_window = 1;
  all.push_back(baseline);

  ModelReport report;
  for (std::size_t k = 0; k < all.size(); ++k) {
    const ForecasterConfig& config = all[k];
    ModelRow row;
    row.name = k + 1 == all.size() ? kPersistenceName : config.name();
    row.pattern_class = pattern_class(config.variant);
    row.train_len = train.size();
    try {
      const auto t0 = std::chrono::steady_clock::now();
      const FittedForecaster model = fit(config, train);
      row.fit_seconds =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      const std::vector<double> predictions = predict_one_step(model, test);
      std::vector<double> actual;
      std::vector<double> predicted;
      for (std::size_t i = 0; i < test.size(); ++i) {
        if (test.is_missing(i)) continue;
        actual.push_back(test.value(i));
        predicted.push_back(predictions[i]);
      }
      row.test_mse = mse(actual, predicted);
      try {
        const MapeResult m = mape(actual, predicted);
        row.test_mape_pct = m.percent;
        row.mape_skipped_zero_targets = m.skipped_zero_targets;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::AllTargetsZero) throw;
        row.mape_skipped_zero_targets = actual.size();
      }
    } catch (const Error& e) {
      row.error = std::string(to_string(e.code())) + ": " + e.what();
    }
    report.rows.push_back(std::move(row));
  }

  std::vector<const ModelRow*> ok;
  for (const auto& row : report.rows) {
    if (row.test_mse) ok.push_back(&row);
  }
  std::stable_sort(ok.begin(), ok.end(), [](const ModelRow* a, const ModelRow* b) {
    if (*a->test_mse != *b->test_mse) return *a->test_mse < *b->test_mse;
    return a->name < b->name;
  });
  for (const ModelRow* row : ok) report.ranking.push_back(row->name);
  for (const auto& row : report.rows) {
    if (!row.test_mse) report.ranking.push_back(row.name);
  }
  return report;
}

std::string to_json(const ModelReport& report, bool include_timings) {
  nlohmann::ordered_json j;
  auto rows = nlohmann::ordered_json::array();
  for (const auto& row : report.rows) {
    nlohmann::ordered_json r;
    r["name"] = row.name;
    r["pattern_class"] = row.pattern_class;
    r["train_len"] = row.train_len;
    r["test_mse"] = row.test_mse ? nlohmann::ordered_json(*row.test_mse) : nullptr;
    r["test_mape_pct"] = row.test_mape_pct ? nlohmann::ordered_json(*row.test_mape_pct) : nullptr;
    r["mape_skipped_zero_targets"] = row.mape_skipped_zero_targets;
    if (include_timings) r["fit_seconds"] = row.fit_seconds;
    r["error"] = row.error ? nlohmann::ordered_json(*row.error) : nullptr;
    rows.push_back(std::move(r));
  }
  j["rows"] = std::move(rows);
  j["ranking"] = report.ranking;
  return j.dump(2);
}

std::string to_table(const ModelReport& report, bool include_timings) {
  std::vector<std::vector<std::string>> cells;
  std::vector<std::string> header = {"rank", "model", "pattern", "train_len", "test_mse",
                                     "test_mape_pct", "mape_skipped"};
  if (include_timings) header.push_back("fit_seconds");
  cells.push_back(header);
  for (std::size_t rank = 0; rank < report.ranking.size(); ++rank) {
    const auto it = std::find_if(report.rows.begin(), report.rows.end(),
                                 [&](const ModelRow& r) { return r.name == report.ranking[rank]; });
    const ModelRow& row = *it;
    std::vector<std::string> line = {
        std::to_string(rank + 1),
        row.name,
        row.pattern_class,
        std::to_string(row.train_len),
        row.test_mse ? scientific(*row.test_mse) : "error",
        row.test_mape_pct ? fixed(*row.test_mape_pct, 3) : "-",
        std::to_string(row.mape_skipped_zero_targets)};
    if (include_timings) line.push_back(fixed(row.fit_seconds, 3));
    cells.push_back(std::move(line));
  }
  std::vector<std::size_t> widths(header.size(), 0);
  for (const auto& line : cells) {
    for (std::size_t c = 0; c < line.size(); ++c) widths[c] = std::max(widths[c], line[c].size());
  }
  std::ostringstream out;
  for (const auto& line : cells) {
    for (std::size_t c = 0; c < line.size(); ++c) {
      out << line[c];
      if (c + 1 < line.size()) out << std::string(widths[c] - line[c].size() + 2, ' ');
    }
    out << '\n';
  }
  for (const auto& row : report.rows) {
    if (row.error) out << "# " << row.name << ": " << *row.error << '\n';
  }
  return out.str();
}

}  // namespace citywatch
