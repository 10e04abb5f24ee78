#include "crosscheck/csv.hpp"

#include "crosscheck/errors.hpp"

namespace crosscheck {

std::string csv_escape(const std::string& field) {
  bool needs_quotes = field.find_first_of(",\"\n\r") != std::string::npos;
  if (!needs_quotes) return field;
  std::string out;
  out.reserve(field.size() + 2);
  out.push_back('"');
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string csv_join(const std::vector<std::string>& fields) {
  std::string row;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i > 0) row.push_back(',');
    row += csv_escape(fields[i]);
  }
  row.push_back('\n');
  return row;
}

CsvWriter::CsvWriter(const std::string& path, const std::vector<std::string>& header)
    : out_(path, std::ios::binary | std::ios::trunc), columns_(header.size()) {
  if (!out_) throw ConfigError("cannot open CSV output file: " + path);
  out_ << csv_join(header);
}

void CsvWriter::write_row(const std::vector<std::string>& fields) {
  if (fields.size() != columns_) {
    throw Error("CSV row has " + std::to_string(fields.size()) + " fields, expected " +
                std::to_string(columns_));
  }
  out_ << csv_join(fields);
}

void CsvWriter::flush() { out_.flush(); }

}  // namespace crosscheck
