#include "citywatch/flow_ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <ostream>
#include <set>
#include <tuple>

#include "citywatch/csv.hpp"
#include "citywatch/error.hpp"

namespace citywatch {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

// Numeric coercion: the whole (trimmed) field must parse, otherwise missing.
std::optional<double> to_number(std::string_view text) {
  text = trim(text);
  if (text.empty()) return std::nullopt;
  if (text.front() == '+') text.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) return std::nullopt;
  return value;
}

std::optional<std::int64_t> to_integer(std::string_view text) {
  text = trim(text);
  std::int64_t value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size()) return std::nullopt;
  return value;
}

constexpr std::size_t kAbsent = std::numeric_limits<std::size_t>::max();

struct ColumnMap {
  std::size_t flow_id = kAbsent;
  std::size_t timestamp = kAbsent;
  std::size_t fwd_pkt_len_mean = kAbsent;
  std::size_t fwd_seg_size_avg = kAbsent;
  std::size_t init_fwd_win = kAbsent;
  std::size_t init_bwd_win = kAbsent;
  std::size_t fwd_seg_size_min = kAbsent;
  std::size_t value = kAbsent;
};

std::string_view field_at(const std::vector<std::string>& row, std::size_t index) {
  return index < row.size() ? std::string_view(row[index]) : std::string_view();
}

}  // namespace

bool FlowRecord::is_clean() const noexcept { return value.has_value() && std::isfinite(*value); }

std::string FlowRecord::source_id() const { return flow_id.substr(0, flow_id.find('-')); }

ParseResult parse_flow_csv(std::istream& in, std::string_view value_column) {
  csv::Reader reader(in);
  auto header = reader.next();
  if (!header || header->empty() || (header->size() == 1 && trim((*header)[0]).empty())) {
    fail(ErrorCode::MalformedHeader, "flow CSV has no header row");
  }
  if (!header->empty() && (*header)[0].rfind("\xEF\xBB\xBF", 0) == 0) {
    (*header)[0].erase(0, 3);
  }

  ColumnMap cols;
  for (std::size_t i = 0; i < header->size(); ++i) {
    const std::string_view name = trim((*header)[i]);
    if (name == columns::kFlowId) cols.flow_id = i;
    else if (name == columns::kTimestamp) cols.timestamp = i;
    else if (name == columns::kFwdPktLenMean) cols.fwd_pkt_len_mean = i;
    else if (name == columns::kFwdSegSizeAvg) cols.fwd_seg_size_avg = i;
    else if (name == columns::kInitFwdWinByts) cols.init_fwd_win = i;
    else if (name == columns::kInitBwdWinByts) cols.init_bwd_win = i;
    else if (name == columns::kFwdSegSizeMin) cols.fwd_seg_size_min = i;
    if (name == value_column && cols.value == kAbsent) cols.value = i;
  }
  if (cols.value == kAbsent) {
    fail(ErrorCode::MissingColumn, "value column '" + std::string(value_column) + "' not in header");
  }
  if (cols.flow_id == kAbsent) fail(ErrorCode::MissingColumn, "'Flow ID' not in header");
  if (cols.timestamp == kAbsent) fail(ErrorCode::MissingColumn, "'Timestamp' not in header");

  const std::size_t required = std::max({cols.flow_id, cols.timestamp, cols.value}) + 1;
  ParseResult result;
  while (auto row = reader.next()) {
    if (row->size() == 1 && trim((*row)[0]).empty()) continue;  // blank line
    ++result.report.rows_read;
    if (row->size() < required) {
      ++result.report.rows_malformed;
      continue;
    }
    const auto ts = parse_flow_timestamp(trim(field_at(*row, cols.timestamp)));
    if (!ts) {
      ++result.report.rows_malformed;
      continue;
    }
    FlowRecord rec;
    rec.flow_id = std::string(trim(field_at(*row, cols.flow_id)));
    rec.timestamp = *ts;
    rec.fwd_pkt_len_mean = to_number(field_at(*row, cols.fwd_pkt_len_mean));
    rec.fwd_seg_size_avg = to_number(field_at(*row, cols.fwd_seg_size_avg));
    rec.init_fwd_win_byts = to_integer(field_at(*row, cols.init_fwd_win)).value_or(-1);
    rec.init_bwd_win_byts = to_integer(field_at(*row, cols.init_bwd_win)).value_or(-1);
    rec.fwd_seg_size_min = to_integer(field_at(*row, cols.fwd_seg_size_min)).value_or(0);
    rec.value = to_number(field_at(*row, cols.value));
    if (rec.value && !std::isfinite(*rec.value)) rec.value.reset();
    result.records.push_back(std::move(rec));
  }
  return result;
}

ParseResult parse_flow_csv(const std::string& path, std::string_view value_column) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoFailure, "cannot open " + path);
  return parse_flow_csv(in, value_column);
}

CleanResult clean(std::vector<FlowRecord> records) {
  CleanResult result;
  std::stable_sort(records.begin(), records.end(),
                   [](const FlowRecord& a, const FlowRecord& b) { return a.timestamp < b.timestamp; });
  using Key = std::tuple<Instant, std::string, double>;
  std::set<Key> seen;
  result.records.reserve(records.size());
  for (auto& rec : records) {
    if (!rec.is_clean()) {
      ++result.dropped_missing;
      continue;
    }
    if (!seen.emplace(rec.timestamp, rec.flow_id, *rec.value).second) {
      ++result.dropped_duplicate;
      continue;
    }
    result.records.push_back(std::move(rec));
  }
  return result;
}

Ingested ingest_flow_csv(const std::string& path, std::string_view value_column) {
  ParseResult parsed = parse_flow_csv(path, value_column);
  CleanResult cleaned = clean(std::move(parsed.records));
  Ingested out;
  out.report = parsed.report;
  out.report.rows_dropped_missing = cleaned.dropped_missing;
  out.report.rows_dropped_duplicate = cleaned.dropped_duplicate;
  out.records = std::move(cleaned.records);
  if (!out.records.empty()) {
    out.report.series_start = out.records.front().timestamp;
    out.report.series_end = out.records.back().timestamp;
  }
  return out;
}

std::optional<Aggregator> parse_aggregator(std::string_view name) {
  if (name == "mean") return Aggregator::Mean;
  if (name == "sum") return Aggregator::Sum;
  if (name == "count") return Aggregator::Count;
  return std::nullopt;
}

TimeSeries to_series(std::span<const FlowRecord> records, Seconds interval, Aggregator aggregator,
                     Instant start, std::size_t buckets) {
  if (interval <= Seconds::zero()) fail(ErrorCode::InvalidArgument, "interval must be positive");
  if (buckets == 0) fail(ErrorCode::InvalidArgument, "bucket count must be positive");
  std::vector<double> sums(buckets, 0.0);
  std::vector<std::size_t> counts(buckets, 0);
  for (const auto& rec : records) {
    if (!rec.is_clean() || rec.timestamp < start) continue;
    const auto index = static_cast<std::size_t>((rec.timestamp - start) / interval);
    if (index >= buckets) continue;
    sums[index] += *rec.value;
    ++counts[index];
  }
  std::vector<double> values(buckets, 0.0);
  std::vector<bool> missing(buckets, false);
  for (std::size_t i = 0; i < buckets; ++i) {
    if (counts[i] == 0) {
      missing[i] = true;
      continue;
    }
    switch (aggregator) {
      case Aggregator::Mean: values[i] = sums[i] / static_cast<double>(counts[i]); break;
      case Aggregator::Sum: values[i] = sums[i]; break;
      case Aggregator::Count: values[i] = static_cast<double>(counts[i]); break;
    }
  }
  return TimeSeries(start, interval, std::move(values), std::move(missing));
}

TimeSeries to_series(std::span<const FlowRecord> records, Seconds interval, Aggregator aggregator) {
  if (interval <= Seconds::zero()) fail(ErrorCode::InvalidArgument, "interval must be positive");
  std::optional<Instant> first;
  std::optional<Instant> last;
  for (const auto& rec : records) {
    if (!rec.is_clean()) continue;
    if (!first || rec.timestamp < *first) first = rec.timestamp;
    if (!last || rec.timestamp > *last) last = rec.timestamp;
  }
  if (!first) fail(ErrorCode::EmptyInput, "no clean records to roll up");
  const auto buckets = static_cast<std::size_t>((*last - *first) / interval) + 1;
  return to_series(records, interval, aggregator, *first, buckets);
}

std::string format_number(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) return "nan";
  return std::string(buf, ptr);
}

void write_flow_csv(std::span<const FlowRecord> records, std::ostream& out,
                    std::string_view value_column) {
  const std::vector<std::string_view> schema = {
      columns::kFlowId,         columns::kTimestamp,       columns::kFwdPktLenMean,
      columns::kFwdSegSizeAvg,  columns::kInitFwdWinByts,  columns::kInitBwdWinByts,
      columns::kFwdSegSizeMin};
  const bool extra_value = std::find(schema.begin(), schema.end(), value_column) == schema.end();
  std::vector<std::string> header(schema.begin(), schema.end());
  if (extra_value) header.emplace_back(value_column);
  out << csv::join(header) << '\n';

  auto opt = [](const std::optional<double>& v) { return v ? format_number(*v) : std::string(); };
  for (const auto& rec : records) {
    std::vector<std::string> row = {rec.flow_id,
                                    format_flow_timestamp(rec.timestamp),
                                    opt(rec.fwd_pkt_len_mean),
                                    opt(rec.fwd_seg_size_avg),
                                    std::to_string(rec.init_fwd_win_byts),
                                    std::to_string(rec.init_bwd_win_byts),
                                    std::to_string(rec.fwd_seg_size_min)};
    if (extra_value) row.push_back(opt(rec.value));
    out << csv::join(row) << '\n';
  }
  if (!out) fail(ErrorCode::IoFailure, "flow CSV write failed");
}

}  // namespace citywatch
