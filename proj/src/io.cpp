#include "stablebranch/io.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace stablebranch {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

CsvWriter::CsvWriter(const std::string& path,
                     const std::vector<std::string>& columns)
    : path_(path), out_(path) {
  if (!out_) throw std::runtime_error("CsvWriter: cannot open '" + path + "'");
  write_status(false, "in_progress", {});
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (i) out_ << ',';
    out_ << columns[i];
  }
  out_ << '\n';
}

CsvWriter::~CsvWriter() {
  if (!finished_) {
    // leave the sidecar marked incomplete
    out_.close();
  }
}

void CsvWriter::write_row(const std::vector<double>& values) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out_ << ',';
    out_ << format_double(values[i]);
  }
  out_ << '\n';
}

void CsvWriter::write_raw_row(const std::vector<std::string>& cells) {
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out_ << ',';
    out_ << cells[i];
  }
  out_ << '\n';
}

void CsvWriter::finish(const std::string& status, const nlohmann::json& extra) {
  out_.close();
  write_status(true, status, extra);
  finished_ = true;
}

void CsvWriter::write_status(bool complete, const std::string& status,
                             const nlohmann::json& extra) {
  nlohmann::json s;
  s["complete"] = complete;
  s["status"] = status;
  if (!extra.is_null() && !extra.empty()) s["info"] = extra;
  write_json_file(path_ + ".status.json", s);
}

void write_json_file(const std::string& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << j.dump(2) << '\n';
}

}  // namespace stablebranch
