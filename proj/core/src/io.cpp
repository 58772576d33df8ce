#include "slowfast/io.hpp"

#include <cstdio>

#include "slowfast/errors.hpp"

namespace slowfast {

namespace {

std::ofstream open_for_write(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Config, "cannot write " + path.string());
  return out;
}

std::string quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + "\"";
}

}  // namespace

std::string format_cell(const Cell& c) {
  if (const auto* d = std::get_if<double>(&c)) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", *d);
    return buf;
  }
  if (const auto* i = std::get_if<long long>(&c)) return std::to_string(*i);
  return quote(std::get<std::string>(c));
}

CsvWriter::CsvWriter(const std::filesystem::path& path, std::vector<std::string> header)
    : path_(path), out_(open_for_write(path)), columns_(header.size()) {
  for (std::size_t i = 0; i < header.size(); ++i) out_ << (i ? "," : "") << quote(header[i]);
  out_ << '\n';
}

void CsvWriter::row(const std::vector<Cell>& cells) {
  if (cells.size() != columns_)
    throw Error(ErrorKind::Config, "csv row has " + std::to_string(cells.size()) + " cells, header has " +
                                       std::to_string(columns_));
  for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << format_cell(cells[i]);
  out_ << '\n';
}

JsonlWriter::JsonlWriter(const std::filesystem::path& path) : out_(open_for_write(path)) {}

void JsonlWriter::write(const nlohmann::json& record) { out_ << record.dump() << '\n'; }

void write_text(const std::filesystem::path& path, const std::string& text) {
  auto out = open_for_write(path);
  out << text;
}

}  // namespace slowfast
