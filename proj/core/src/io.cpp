#include "pidrl/io.hpp"

#include <array>
#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <openssl/evp.h>

namespace pidrl {

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string sha256_hex(std::string_view data) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1)
    throw IoError("sha256 failed");
  std::string hex;
  hex.reserve(2 * len);
  for (unsigned int k = 0; k < len; ++k) hex += fmt::format("{:02x}", digest[k]);
  return hex;
}

std::string sha256_file(const std::filesystem::path& path) {
  return sha256_hex(read_text_file(path));
}

std::string format_double(double v) { return fmt::format("{}", v); }

CsvWriter::CsvWriter(std::vector<std::string> header) : columns_(header.size()) {
  row(header);
}

void CsvWriter::row(const std::vector<std::string>& cells) {
  if (cells.size() != columns_) throw InvalidArgument("csv row has wrong number of cells");
  for (std::size_t k = 0; k < cells.size(); ++k) {
    if (k) text_ += ',';
    text_ += cells[k];
  }
  text_ += '\n';
}

std::size_t CsvTable::column(std::string_view name) const {
  for (std::size_t k = 0; k < header.size(); ++k) {
    if (header[k] == name) return k;
  }
  throw InvalidArgument("csv has no column '" + std::string(name) + "'");
}

namespace {

std::vector<std::string> split_line(std::string_view line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    std::string cell(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start));
    while (!cell.empty() && (cell.front() == ' ')) cell.erase(cell.begin());
    while (!cell.empty() && (cell.back() == ' ' || cell.back() == '\r')) cell.pop_back();
    cells.push_back(std::move(cell));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return cells;
}

double to_double(const std::string& s) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size() || s.empty()) throw InvalidArgument("not a number: '" + s + "'");
  return v;
}

const std::vector<std::string> kFleetHeader = {
    "id",       "x_resonance_hz", "x_gain", "x_damping_ratio", "y_resonance_hz",
    "y_gain",   "y_damping_ratio", "coupling_coeff", "k_resonance", "k_gain",
    "k_damping"};

}  // namespace

CsvTable parse_csv(std::string_view text) {
  CsvTable table;
  std::size_t start = 0;
  bool first = true;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = text.substr(start, end - start);
    start = end + 1;
    if (line.empty() || line == "\r") continue;
    auto cells = split_line(line);
    if (first) {
      table.header = std::move(cells);
      first = false;
    } else {
      if (cells.size() != table.header.size())
        throw InvalidArgument("csv row has " + std::to_string(cells.size()) + " cells, expected " +
                              std::to_string(table.header.size()));
      table.rows.push_back(std::move(cells));
    }
  }
  return table;
}

CsvTable read_csv(const std::filesystem::path& path) { return parse_csv(read_text_file(path)); }

std::string fleet_to_csv(const std::vector<ActuatorParams>& fleet) {
  CsvWriter csv(kFleetHeader);
  for (const ActuatorParams& a : fleet) {
    csv.row({std::to_string(a.id), format_double(a.x_axis.resonance_hz),
             format_double(a.x_axis.gain), format_double(a.x_axis.damping_ratio),
             format_double(a.y_axis.resonance_hz), format_double(a.y_axis.gain),
             format_double(a.y_axis.damping_ratio), format_double(a.coupling_coeff),
             format_double(a.thermal.resonance), format_double(a.thermal.gain),
             format_double(a.thermal.damping)});
  }
  return csv.text();
}

std::vector<ActuatorParams> fleet_from_csv(std::string_view text) {
  const CsvTable table = parse_csv(text);
  if (table.header != kFleetHeader) throw InvalidArgument("fleet file has an unexpected header");
  std::vector<ActuatorParams> fleet;
  for (const auto& r : table.rows) {
    ActuatorParams a;
    a.id = std::stoi(r[0]);
    a.x_axis = {to_double(r[1]), to_double(r[2]), to_double(r[3])};
    a.y_axis = {to_double(r[4]), to_double(r[5]), to_double(r[6])};
    a.coupling_coeff = to_double(r[7]);
    a.thermal = {to_double(r[8]), to_double(r[9]), to_double(r[10])};
    if (!a.valid()) throw InvalidArgument("fleet file has invalid actuator " + r[0]);
    fleet.push_back(a);
  }
  return fleet;
}

void save_fleet(const std::vector<ActuatorParams>& fleet, const std::filesystem::path& path) {
  write_text_file(path, fleet_to_csv(fleet));
}

std::vector<ActuatorParams> load_fleet(const std::filesystem::path& path) {
  return fleet_from_csv(read_text_file(path));
}

}  // namespace pidrl
