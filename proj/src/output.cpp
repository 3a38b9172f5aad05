#include <cstdio>
#include <fstream>

#include "blochrate/harness.hpp"

namespace blochrate {

namespace {

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InvalidArgument("cannot write " + path.string());
  out << text;
  if (!out) throw InvalidArgument("write failed for " + path.string());
}

// %.17g is locale-independent for the "C" locale the library never changes.
std::string number(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace

std::string csv_text(const CsvTable& table) {
  std::string out;
  for (std::size_t i = 0; i < table.header.size(); ++i) {
    if (i) out += ',';
    out += table.header[i];
  }
  out += '\n';
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      out += number(row[i]);
    }
    out += '\n';
  }
  return out;
}

std::string result_json_text(const StudyResult& result, const ExperimentConfig& cfg) {
  nlohmann::json j;
  j["study"] = to_string(result.study);
  j["passed"] = result.passed();
  nlohmann::json checks = nlohmann::json::array();
  for (const Check& c : result.checks) checks.push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
  j["checks"] = checks;
  j["summary"] = result.summary;
  j["config"] = config_to_json(cfg);
  std::vector<std::string> files;
  for (const auto& t : result.tables) files.push_back(t.file);
  j["files"] = files;
  return j.dump(2) + "\n";
}

void write_result(const StudyResult& result, const ExperimentConfig& cfg, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_file(dir / "result.json", result_json_text(result, cfg));
  for (const auto& t : result.tables) write_file(dir / t.file, csv_text(t));
}

}  // namespace blochrate
