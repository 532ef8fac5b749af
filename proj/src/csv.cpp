#include "lowdim/csv.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace lowdim {

std::size_t CsvTable::column(const std::string& name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw std::out_of_range("csv: no column named " + name);
  return static_cast<std::size_t>(it - header.begin());
}

std::string format_number(double value) {
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  return {buf.data(), res.ptr};
}

std::string format_number(long long value) { return std::to_string(value); }

std::string format_number(std::size_t value) { return std::to_string(value); }

namespace {

void write_field(std::ostream& out, const std::string& field) {
  if (field.find_first_of(",\"\r\n") == std::string::npos) {
    out << field;
    return;
  }
  out << '"';
  for (char c : field) {
    if (c == '"') out << '"';
    out << c;
  }
  out << '"';
}

void write_record(std::ostream& out, const std::vector<std::string>& record) {
  for (std::size_t i = 0; i < record.size(); ++i) {
    if (i) out << ',';
    write_field(out, record[i]);
  }
  out << "\r\n";
}

// Reads one record; returns false at end of input.
bool read_record(std::istream& in, std::vector<std::string>& record) {
  record.clear();
  if (in.peek() == std::char_traits<char>::eof()) return false;
  std::string field;
  bool quoted = false;
  bool after_quote = false;
  for (int ch = in.get(); ; ch = in.get()) {
    if (ch == std::char_traits<char>::eof()) {
      if (quoted) throw std::runtime_error("csv: unterminated quoted field");
      record.push_back(std::move(field));
      return true;
    }
    const char c = static_cast<char>(ch);
    if (quoted) {
      if (c == '"') {
        if (in.peek() == '"') {
          field.push_back('"');
          in.get();
        } else {
          quoted = false;
          after_quote = true;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    if (c == ',') {
      record.push_back(std::move(field));
      field.clear();
      after_quote = false;
    } else if (c == '\r' || c == '\n') {
      if (c == '\r' && in.peek() == '\n') in.get();
      record.push_back(std::move(field));
      return true;
    } else if (c == '"' && field.empty() && !after_quote) {
      quoted = true;
    } else if (after_quote) {
      throw std::runtime_error("csv: characters after closing quote");
    } else {
      field.push_back(c);
    }
  }
}

}  // namespace

void write_csv(std::ostream& out, const CsvTable& table) {
  write_record(out, table.header);
  for (const auto& row : table.rows) {
    if (row.size() != table.header.size()) {
      throw std::runtime_error("csv: row width does not match header");
    }
    write_record(out, row);
  }
}

CsvTable read_csv(std::istream& in) {
  CsvTable table;
  if (!read_record(in, table.header)) throw std::runtime_error("csv: missing header");
  std::vector<std::string> record;
  while (read_record(in, record)) {
    if (record.size() == 1 && record[0].empty()) continue;  // trailing blank line
    if (record.size() != table.header.size()) {
      throw std::runtime_error("csv: ragged row " + std::to_string(table.rows.size() + 1));
    }
    table.rows.push_back(record);
  }
  return table;
}

double parse_number(const std::string& field) {
  double value = 0.0;
  const char* begin = field.data();
  const char* end = begin + field.size();
  while (begin < end && (*begin == ' ' || *begin == '\t')) ++begin;
  while (end > begin && (end[-1] == ' ' || end[-1] == '\t')) --end;
  const auto res = std::from_chars(begin, end, value);
  if (res.ec != std::errc() || res.ptr != end) {
    throw std::invalid_argument("csv: not a number: '" + field + "'");
  }
  return value;
}

}  // namespace lowdim
