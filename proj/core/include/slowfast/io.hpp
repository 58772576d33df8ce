#pragma once

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

namespace slowfast {

using Cell = std::variant<double, long long, std::string>;

// Header-first CSV; doubles written with 17 significant digits.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, std::vector<std::string> header);
  void row(const std::vector<Cell>& cells);
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
  std::size_t columns_;
};

// One JSON object per line.
class JsonlWriter {
 public:
  explicit JsonlWriter(const std::filesystem::path& path);
  void write(const nlohmann::json& record);

 private:
  std::ofstream out_;
};

std::string format_cell(const Cell& c);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace slowfast
