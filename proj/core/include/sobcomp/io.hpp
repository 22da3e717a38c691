#pragma once

#include <fstream>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

namespace sobcomp {

// Shortest round-trip is not required; 17 significant digits always.
std::string format_double(double value);

using CsvCell = std::variant<double, long long, std::string>;

// RFC-4180 writer: CRLF-free ('\n') lines, fields quoted only when needed.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header);
  void row(const std::vector<CsvCell>& cells);
  void close();

 private:
  std::ofstream out_;
  std::string path_;
  std::size_t columns_;
};

std::string csv_escape(const std::string& field);

void write_json(const std::string& path, const nlohmann::json& j);
nlohmann::json read_json(const std::string& path);

}  // namespace sobcomp
