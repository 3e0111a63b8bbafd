#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "pidrl/plant.hpp"

namespace pidrl {

/// A required input file is missing or an output location is unusable.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void write_text_file(const std::filesystem::path& path, std::string_view text);
std::string read_text_file(const std::filesystem::path& path);

std::string sha256_hex(std::string_view data);
std::string sha256_file(const std::filesystem::path& path);

/// Shortest decimal string that parses back to exactly `v`.
std::string format_double(double v);

/// Accumulates a CSV document in memory; rows are written with '\n' endings.
class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header);

  void row(const std::vector<std::string>& cells);
  [[nodiscard]] const std::string& text() const { return text_; }
  void save(const std::filesystem::path& path) const { write_text_file(path, text_); }

 private:
  std::size_t columns_;
  std::string text_;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  [[nodiscard]] std::size_t column(std::string_view name) const;
};

CsvTable parse_csv(std::string_view text);
CsvTable read_csv(const std::filesystem::path& path);

/// One row per actuator with every parameter at full precision.
std::string fleet_to_csv(const std::vector<ActuatorParams>& fleet);
std::vector<ActuatorParams> fleet_from_csv(std::string_view text);

void save_fleet(const std::vector<ActuatorParams>& fleet, const std::filesystem::path& path);
std::vector<ActuatorParams> load_fleet(const std::filesystem::path& path);

}  // namespace pidrl
