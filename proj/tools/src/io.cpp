#include "sta_cli/io.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

#include "sta/error.hpp"

namespace sta::cli {

std::string format_double(double v) {
  if (!std::isfinite(v)) return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, r.ptr);
}

std::string csv_quote(const std::string& cell) {
  if (cell.find_first_of(",\"\n") == std::string::npos) return cell;
  std::string out = "\"";
  for (char c : cell) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

CsvWriter::CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header)
    : out_(path, std::ios::binary), columns_(header.size()) {
  if (!out_) throw Error("cannot write " + path.string());
  row(header);
}

void CsvWriter::row(const std::vector<std::optional<double>>& values) {
  std::vector<std::string> cells;
  cells.reserve(values.size());
  for (const auto& v : values) cells.push_back(v ? format_double(*v) : std::string());
  row(cells);
}

void CsvWriter::row(const std::vector<std::string>& cells) {
  if (cells.size() != columns_) throw Error("CSV row has the wrong number of columns");
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out_ << ',';
    out_ << csv_quote(cells[i]);
  }
  out_ << '\n';
}

std::size_t CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  throw ConfigError("CSV has no column '" + name + "'");
}

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      cells.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  cells.push_back(cur);
  return cells;
}

}  // namespace

CsvTable read_csv(const std::filesystem::path& path, const std::vector<std::string>& expected) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path.string());
  CsvTable t;
  std::string line;
  if (!std::getline(in, line)) throw ConfigError(path.string() + " is empty");
  t.header = split(line);
  if (!expected.empty() && t.header != expected)
    throw ConfigError(path.string() + " has an unexpected header");
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto cells = split(line);
    if (cells.size() != t.header.size())
      throw ConfigError(path.string() + ":" + std::to_string(lineno) +
                        ": wrong number of fields");
    std::vector<std::optional<double>> row;
    for (const auto& c : cells) {
      if (c.empty()) {
        row.emplace_back();
        continue;
      }
      double v = 0.0;
      auto r = std::from_chars(c.data(), c.data() + c.size(), v);
      if (r.ec != std::errc() || r.ptr != c.data() + c.size())
        throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": bad number '" +
                          c + "'");
      row.push_back(v);
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path.string() + " is not valid JSON: " + e.what());
  }
}

void write_json(const std::filesystem::path& path, const nlohmann::json& doc) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << doc.dump(2) << '\n';
}

}  // namespace sta::cli
