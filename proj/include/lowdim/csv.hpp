#pragma once

// RFC-4180 tables with locale-independent number formatting.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace lowdim {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Index of a header column; throws std::out_of_range if absent.
  std::size_t column(const std::string& name) const;
};

/// Shortest round-trip representation, '.' decimal separator.
std::string format_number(double value);
std::string format_number(long long value);
std::string format_number(std::size_t value);

/// Lines end in CRLF; fields are quoted only when needed.
void write_csv(std::ostream& out, const CsvTable& table);

/// Parses a table whose first record is the header. Throws
/// std::runtime_error on malformed quoting or ragged rows.
CsvTable read_csv(std::istream& in);

/// Strict decimal parse (no locale); throws std::invalid_argument.
double parse_number(const std::string& field);

}  // namespace lowdim
