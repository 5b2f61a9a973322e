#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace attnex {

/// Shortest round-trip decimal representation, identical across runs.
std::string format_double(double value);

/// Header-first CSV writer. Cells containing commas/quotes are quoted.
class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header);

  void add_row(std::vector<std::string> cells);
  std::string to_string() const;
  void write_file(const std::string& path) const;
  std::size_t row_count() const { return rows_.size(); }

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

CsvTable read_csv(const std::string& path);

}  // namespace attnex
