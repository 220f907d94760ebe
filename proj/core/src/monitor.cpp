#include "citywatch/monitor.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "citywatch/error.hpp"

namespace citywatch {

Instant align_to_interval(Instant t, Seconds interval) {
  if (interval <= Seconds::zero()) fail(ErrorCode::InvalidArgument, "interval must be positive");
  const auto since = t.time_since_epoch();
  auto remainder = since % interval;
  if (remainder < Seconds::zero()) remainder += interval;
  return t - remainder;
}

MonitorResult monitor_sources(std::span<const SourceObservation> observations,
                              const MonitorOptions& options) {
  if (observations.empty()) fail(ErrorCode::EmptyInput, "nothing to monitor");
  if (options.interval <= Seconds::zero()) {
    fail(ErrorCode::InvalidArgument, "interval must be positive");
  }
  MonitorResult out;
  Instant first = observations.front().timestamp;
  Instant last = first;
  for (const auto& o : observations) {
    first = std::min(first, o.timestamp);
    last = std::max(last, o.timestamp);
  }
  out.start = align_to_interval(first, options.interval);
  out.buckets = static_cast<std::size_t>((last - out.start) / options.interval) + 1;

  std::map<std::string, std::vector<double>> sums;
  std::map<std::string, std::vector<bool>> seen;
  std::vector<double> new_ids(out.buckets, 0.0);
  std::map<std::string, std::size_t> first_bucket;
  for (const auto& o : observations) {
    const auto b = static_cast<std::size_t>((o.timestamp - out.start) / options.interval);
    auto [it, inserted] = sums.try_emplace(o.source_id, out.buckets, 0.0);
    if (inserted) seen.emplace(o.source_id, std::vector<bool>(out.buckets, false));
    it->second[b] += o.amount;
    seen[o.source_id][b] = true;
    auto [fb, fresh] = first_bucket.try_emplace(o.source_id, b);
    if (!fresh) fb->second = std::min(fb->second, b);
  }
  for (const auto& [id, b] : first_bucket) new_ids[b] += 1.0;
  out.new_identities = TimeSeries::dense(out.start, options.interval, std::move(new_ids));

  for (auto& [id, values] : sums) {
    std::vector<bool> missing(out.buckets);
    const auto& present = seen[id];
    for (std::size_t i = 0; i < out.buckets; ++i) {
      missing[i] = !present[i];
      if (missing[i]) values[i] = std::nan("");
    }
    out.rates.emplace(id, TimeSeries(out.start, options.interval, std::move(values),
                                     std::move(missing)));
  }

  for (const auto& [id, series] : out.rates) {
    std::pair<TimeSeries, TimeSeries> parts{series, series};
    try {
      parts = split(series, options.train_fraction);
    } catch (const Error& e) {
      out.skipped.push_back({id, std::string(to_string(e.code()))});
      continue;
    }
    const TimeSeries& train = parts.first;
    const std::size_t present = train.size() - train.missing_count();
    if (static_cast<double>(present) <
        options.established_fraction * static_cast<double>(train.size())) {
      out.skipped.push_back({id, "not established"});
      continue;
    }
    out.monitored.push_back(id);
    if (options.dropouts) {
      DropoutOptions d = options.dropout;
      d.source = id;
      const auto alerts = detect_dropout(series, d);
      out.alerts.insert(out.alerts.end(), alerts.begin(), alerts.end());
    }
    if (!options.surges) continue;
    try {
      const FittedForecaster model = fit(options.model, interpolate_short_gaps(train));
      SurgeOptions s = options.surge;
      s.source = id;
      const auto alerts = detect_surges(series, model, s);
      out.alerts.insert(out.alerts.end(), alerts.begin(), alerts.end());
    } catch (const Error& e) {
      if (e.code() == ErrorCode::UnsupportedConfidence || e.code() == ErrorCode::InvalidArgument) {
        throw;
      }
      out.skipped.push_back({id, std::string("surge: ") + std::string(to_string(e.code()))});
    }
  }

  if (options.identity_floods) {
    try {
      const auto alerts = detect_identity_flood(*out.new_identities, options.identity);
      out.alerts.insert(out.alerts.end(), alerts.begin(), alerts.end());
    } catch (const Error& e) {
      if (e.code() != ErrorCode::DegenerateSplit) throw;
    }
  }
  sort_alerts(out.alerts);
  return out;
}

}  // namespace citywatch
