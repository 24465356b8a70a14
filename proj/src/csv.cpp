#include "pheno/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include "pheno/error.hpp"

namespace pheno::csv {

std::optional<std::size_t> Table::column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  return std::nullopt;
}

std::size_t Table::require_column(std::string_view name) const {
  auto idx = column(name);
  if (!idx) throw Error(ErrorKind::MissingColumn, std::string(name));
  return *idx;
}

namespace {

// Splits one logical record; quoted cells may span physical lines.
bool next_record(std::istream& in, std::vector<std::string>& cells) {
  cells.clear();
  std::string line;
  if (!std::getline(in, line)) return false;

  std::string cell;
  bool quoted = false;
  for (;;) {
    for (std::size_t i = 0; i < line.size(); ++i) {
      char c = line[i];
      if (quoted) {
        if (c == '"') {
          if (i + 1 < line.size() && line[i + 1] == '"') {
            cell.push_back('"');
            ++i;
          } else {
            quoted = false;
          }
        } else {
          cell.push_back(c);
        }
      } else if (c == '"') {
        quoted = true;
      } else if (c == ',') {
        cells.push_back(std::move(cell));
        cell.clear();
      } else if (c == '\r' && i + 1 == line.size()) {
        // CRLF
      } else {
        cell.push_back(c);
      }
    }
    if (!quoted) break;
    cell.push_back('\n');
    if (!std::getline(in, line)) throw Error(ErrorKind::Format, "unterminated quoted cell");
  }
  cells.push_back(std::move(cell));
  return true;
}

bool blank(const std::vector<std::string>& cells) {
  return cells.size() == 1 && cells[0].empty();
}

}  // namespace

Table read(std::istream& in) {
  Table table;
  std::vector<std::string> cells;
  while (next_record(in, cells)) {
    if (blank(cells)) continue;
    table.header = cells;
    break;
  }
  if (table.header.empty()) throw Error(ErrorKind::Format, "empty CSV (no header row)");
  // UTF-8 byte order mark
  if (table.header[0].rfind("\xEF\xBB\xBF", 0) == 0) table.header[0].erase(0, 3);

  while (next_record(in, cells)) {
    if (blank(cells)) continue;
    if (cells.size() > table.header.size()) {
      throw Error(ErrorKind::Format, "row " + std::to_string(table.rows.size() + 1) + " has " +
                                         std::to_string(cells.size()) + " cells, header has " +
                                         std::to_string(table.header.size()));
    }
    cells.resize(table.header.size());
    table.rows.push_back(cells);
  }
  return table;
}

Table read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path);
  try {
    return read(in);
  } catch (const Error& e) {
    throw Error(e.kind(), path + ": " + e.message());
  }
}

void write_row(std::ostream& out, const std::vector<std::string>& cells) {
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out << ',';
    const std::string& c = cells[i];
    if (c.find_first_of(",\"\n\r") != std::string::npos) {
      out << '"';
      for (char ch : c) {
        if (ch == '"') out << '"';
        out << ch;
      }
      out << '"';
    } else {
      out << c;
    }
  }
  out << '\n';
}

std::string format_number(double value) {
  if (std::isnan(value)) return "";
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
  if (ec != std::errc{}) return "nan";
  return std::string(buf, end);
}

std::optional<double> parse_number(std::string_view text) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t')) text.remove_suffix(1);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  if (text.empty()) return std::nullopt;
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) return std::nullopt;
  return value;
}

bool is_absent(std::string_view text) {
  return text.empty() || text == "NA" || text == "NaN" || text == "nan";
}

}  // namespace pheno::csv
