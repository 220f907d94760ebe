#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "citywatch/time.hpp"
#include "citywatch/timeseries.hpp"

namespace citywatch {

namespace columns {
inline constexpr std::string_view kFlowId = "Flow ID";
inline constexpr std::string_view kTimestamp = "Timestamp";
inline constexpr std::string_view kFwdPktLenMean = "Fwd Pkt Len Mean";
inline constexpr std::string_view kFwdSegSizeAvg = "Fwd Seg Size Avg";
inline constexpr std::string_view kInitFwdWinByts = "Init Fwd Win Byts";
inline constexpr std::string_view kInitBwdWinByts = "Init Bwd Win Byts";
inline constexpr std::string_view kFwdSegSizeMin = "Fwd Seg Size Min";
}  // namespace columns

/// One flow-log row. `value` is the column selected for modeling; it is
/// empty when that column failed numeric coercion.
struct FlowRecord {
  std::string flow_id;  // src-dst-sport-dport-proto
  Instant timestamp{};
  std::optional<double> fwd_pkt_len_mean;
  std::optional<double> fwd_seg_size_avg;
  std::int64_t init_fwd_win_byts = -1;  // -1 when absent
  std::int64_t init_bwd_win_byts = -1;
  std::int64_t fwd_seg_size_min = 0;
  std::optional<double> value;

  bool is_clean() const noexcept;
  /// Source endpoint: the flow id up to its first '-'.
  std::string source_id() const;

  bool operator==(const FlowRecord&) const = default;
};

struct IngestReport {
  std::size_t rows_read = 0;
  std::size_t rows_malformed = 0;  // unparseable timestamp or short row
  std::size_t rows_dropped_missing = 0;
  std::size_t rows_dropped_duplicate = 0;
  std::optional<Instant> series_start;
  std::optional<Instant> series_end;

  std::size_t rows_clean() const noexcept {
    return rows_read - rows_malformed - rows_dropped_missing - rows_dropped_duplicate;
  }
};

struct ParseResult {
  std::vector<FlowRecord> records;
  IngestReport report;  // rows_read and rows_malformed populated
};

ParseResult parse_flow_csv(std::istream& in, std::string_view value_column);
ParseResult parse_flow_csv(const std::string& path, std::string_view value_column);

struct CleanResult {
  std::vector<FlowRecord> records;
  std::size_t dropped_missing = 0;
  std::size_t dropped_duplicate = 0;
};

/// Drops records without a finite value and exact duplicates
/// (flow id, timestamp, value). The survivors come back in timestamp order;
/// ties keep their input order.
CleanResult clean(std::vector<FlowRecord> records);

/// parse_flow_csv followed by clean(), with the full report filled in.
struct Ingested {
  std::vector<FlowRecord> records;
  IngestReport report;
};
Ingested ingest_flow_csv(const std::string& path, std::string_view value_column);

enum class Aggregator { Mean, Sum, Count };

std::optional<Aggregator> parse_aggregator(std::string_view name);

/// Buckets clean records from the first to the last timestamp. Buckets
/// without records are missing.
TimeSeries to_series(std::span<const FlowRecord> records, Seconds interval, Aggregator aggregator);

/// Same, on a fixed time base of `buckets` intervals starting at `start`.
/// Records outside the base are ignored.
TimeSeries to_series(std::span<const FlowRecord> records, Seconds interval, Aggregator aggregator,
                     Instant start, std::size_t buckets);

/// Writes the flow schema (plus the value column when it is not one of the
/// schema columns) so that parse_flow_csv reproduces the records.
void write_flow_csv(std::span<const FlowRecord> records, std::ostream& out,
                    std::string_view value_column);

std::string format_number(double value);

}  // namespace citywatch
