#ifndef STABLEBRANCH_IO_HPP
#define STABLEBRANCH_IO_HPP

#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"

namespace stablebranch {

// Formats doubles with round-trip precision; output is byte-stable across
// reruns so result files can be compared verbatim.
std::string format_double(double v);

// CSV writer with a sidecar status file. The sidecar is created first with
// complete=false and rewritten on finish(), so a crash can never leave a CSV
// that silently looks finished.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& columns);
  ~CsvWriter();

  void write_row(const std::vector<double>& values);
  void write_raw_row(const std::vector<std::string>& cells);
  void finish(const std::string& status = "completed",
              const nlohmann::json& extra = {});

 private:
  void write_status(bool complete, const std::string& status,
                    const nlohmann::json& extra);
  std::string path_;
  std::ofstream out_;
  bool finished_ = false;
};

void write_json_file(const std::string& path, const nlohmann::json& j);

}  // namespace stablebranch

#endif
