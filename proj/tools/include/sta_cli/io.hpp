#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace sta::cli {

// 17 significant digits, '.' separator, any locale.
std::string format_double(double v);

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header);
  void row(const std::vector<std::optional<double>>& values);
  // Mixed row; strings are quoted when they contain separators.
  void row(const std::vector<std::string>& cells);

 private:
  std::ofstream out_;
  std::size_t columns_;
};

std::string csv_quote(const std::string& cell);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::optional<double>>> rows;

  std::size_t column(const std::string& name) const;
};

// Numeric table; empty fields become nullopt. Throws ConfigError on any
// malformed cell or a header that differs from `expected` (when given).
CsvTable read_csv(const std::filesystem::path& path,
                  const std::vector<std::string>& expected = {});

nlohmann::json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const nlohmann::json& doc);

}  // namespace sta::cli
