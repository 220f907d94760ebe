#pragma once

#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace citywatch::csv {

/// RFC-4180 record reader: quoted fields, doubled quotes, embedded
/// newlines and CRLF line endings.
class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  /// Next record, or nullopt at end of input. A trailing empty line is not
  /// a record.
  std::optional<std::vector<std::string>> next();

  std::size_t line() const noexcept { return line_; }

 private:
  std::istream& in_;
  std::size_t line_ = 0;
};

/// Quotes a field only when it contains a delimiter, quote or newline.
std::string escape(std::string_view field);

std::string join(const std::vector<std::string>& fields);

}  // namespace citywatch::csv
