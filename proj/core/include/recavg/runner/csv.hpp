#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace recavg::runner {

/// Column-named numeric table as written to and read from CSV files.
struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  std::size_t column_index(const std::string& name) const;  // throws std::out_of_range
  std::vector<double> column(const std::string& name) const;
};

/// 17 significant digits so that reading back reproduces every value exactly.
std::string format_double(double value);

void write_csv(const std::filesystem::path& file, const Table& table);
Table read_csv(const std::filesystem::path& file);

}  // namespace recavg::runner
