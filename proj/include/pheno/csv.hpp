#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace pheno::csv {

/// A parsed CSV file: header plus data rows, each row as raw cell text.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::optional<std::size_t> column(std::string_view name) const;
  /// Throws Error(MissingColumn) naming `name`.
  std::size_t require_column(std::string_view name) const;
};

/// RFC 4180 subset: comma separator, double-quote quoting, LF or CRLF line ends.
/// Blank lines are skipped. Rows shorter than the header are padded with empty cells.
Table read(std::istream& in);
Table read_file(const std::string& path);

void write_row(std::ostream& out, const std::vector<std::string>& cells);

/// Shortest decimal form that parses back to the same double.
std::string format_number(double value);

/// Strict number parse; returns nullopt on trailing garbage or empty text.
std::optional<double> parse_number(std::string_view text);

/// Empty, `NA` and `NaN` cells denote an absent value.
bool is_absent(std::string_view text);

}  // namespace pheno::csv
