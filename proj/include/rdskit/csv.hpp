#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace rdskit::csv {

// Plain comma-separated tables: mandatory header row, no quoting, no
// embedded commas. Blank lines are skipped; CRLF line endings accepted.

struct Row {
  std::size_t line = 0;  // 1-based line number in the source
  std::vector<std::string> fields;
};

struct Table {
  std::vector<std::string> header;
  std::vector<Row> rows;

  /// Column index of `name`, if present.
  std::optional<std::size_t> column(std::string_view name) const;
};

/// Throws InputError on an empty input or a row whose field count differs
/// from the header.
Table read(std::istream& in, std::string_view source_name = "input");

std::vector<std::string> split(std::string_view line, char sep = ',');

}  // namespace rdskit::csv
