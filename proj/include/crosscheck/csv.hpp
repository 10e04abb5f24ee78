#pragma once

#include <fstream>
#include <string>
#include <vector>

namespace crosscheck {

// RFC 4180 quoting: fields containing commas, quotes or newlines are quoted,
// embedded quotes doubled.
std::string csv_escape(const std::string& field);

std::string csv_join(const std::vector<std::string>& fields);

// Serialized appender for one output file; the header row is written on open.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header);

  void write_row(const std::vector<std::string>& fields);
  void flush();

 private:
  std::ofstream out_;
  std::size_t columns_;
};

}  // namespace crosscheck
