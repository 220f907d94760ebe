#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <string_view>

namespace citywatch {

// UTC, second resolution.
using Instant = std::chrono::sys_seconds;
using Seconds = std::chrono::seconds;

/// Parses the flow-log timestamp shape "dd/MM/yyyy hh:mm:ss AM|PM".
/// Day comes first; anything that does not match the shape exactly
/// (or names an impossible date) yields nullopt.
std::optional<Instant> parse_flow_timestamp(std::string_view text);
std::string format_flow_timestamp(Instant t);

/// "YYYY-MM-DDTHH:MM:SSZ"
std::optional<Instant> parse_iso8601(std::string_view text);
std::string format_iso8601(Instant t);

}  // namespace citywatch
