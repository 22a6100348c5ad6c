#include "nmn/harness/csv.hpp"

#include <charconv>
#include <fstream>

#include <fmt/format.h>

#include "nmn/core/errors.hpp"

namespace nmn::harness {

namespace {

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(line.substr(start, comma - start));
    if (comma == std::string_view::npos) {
      return out;
    }
    start = comma + 1;
  }
}

}  // namespace

std::size_t CsvTable::column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) {
      return i;
    }
  }
  throw ConfigError(fmt::format("CSV has no column '{}'", name));
}

std::vector<double> CsvTable::values(std::string_view name) const {
  const std::size_t c = column(name);
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) {
    out.push_back(r[c]);
  }
  return out;
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError(fmt::format("cannot open '{}'", path.string()));
  }
  CsvTable t;
  std::string line;
  if (!std::getline(in, line)) {
    throw ConfigError(fmt::format("'{}' is empty", path.string()));
  }
  for (auto f : split(line)) {
    t.header.emplace_back(f);
  }
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) {
      continue;
    }
    const auto fields = split(line);
    if (fields.size() != t.header.size()) {
      throw ConfigError(fmt::format("{}:{}: expected {} fields, got {}", path.string(), lineno,
                                    t.header.size(), fields.size()));
    }
    std::vector<double> row(fields.size());
    for (std::size_t i = 0; i < fields.size(); ++i) {
      const auto f = fields[i];
      const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), row[i]);
      if (ec != std::errc{} || ptr != f.data() + f.size()) {
        throw ConfigError(fmt::format("{}:{}: '{}' is not a number", path.string(), lineno, f));
      }
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

}  // namespace nmn::harness
