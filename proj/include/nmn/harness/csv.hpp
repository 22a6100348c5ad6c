#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace nmn::harness {

/// Numeric CSV with a single header row.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  /// Throws ConfigError when the column is absent.
  [[nodiscard]] std::size_t column(std::string_view name) const;
  [[nodiscard]] std::vector<double> values(std::string_view name) const;
};

/// Throws ConfigError on an unreadable file, a ragged row or a non-numeric cell.
CsvTable read_csv(const std::filesystem::path& path);

}  // namespace nmn::harness
