#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>

#include "ivregime/dataset.hpp"
#include "ivregime/errors.hpp"

namespace ivregime {

namespace {

constexpr std::string_view kHeader = "l,z,a,y";

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  return s;
}

template <typename T>
T parse_field(std::string_view field, std::size_t line, const char* name) {
  field = trim(field);
  T value{};
  const char* first = field.data();
  const char* last = field.data() + field.size();
  if (!field.empty() && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (field.empty() || ec != std::errc() || ptr != last) {
    throw ParseError(line, std::string("cannot parse ") + name + " from '" + std::string(field) + "'");
  }
  return value;
}

Arm parse_arm(std::string_view field, std::size_t line, const char* name) {
  const long long v = parse_field<long long>(field, line, name);
  if (v == 1) return Arm::Plus;
  if (v == -1) return Arm::Minus;
  throw DomainError("line " + std::to_string(line),
                    std::string(name) + " must be -1 or 1, got " + std::to_string(v));
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

}  // namespace

void write_csv(const Dataset& data, std::ostream& out) {
  out << kHeader << '\n';
  for (const ObservedRow& r : data.rows()) {
    out << r.cell << ',' << sign(r.z) << ',' << sign(r.a) << ',' << format_double(r.y) << '\n';
  }
}

void write_csv(const Dataset& data, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError(path.string(), "cannot open for writing");
  write_csv(data, out);
  if (!out) throw ValidationError(path.string(), "write failed");
}

Dataset read_csv(std::istream& in, std::optional<std::size_t> cell_count) {
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw EmptyDatasetError();
  ++line_no;
  if (trim(line) != kHeader) throw ParseError(line_no, "expected header 'l,z,a,y'");

  std::vector<ObservedRow> rows;
  std::size_t max_cell = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = trim(line);
    if (view.empty()) continue;
    std::string_view fields[4];
    std::size_t count = 0;
    while (true) {
      const auto comma = view.find(',');
      if (count == 4) throw ParseError(line_no, "too many fields");
      fields[count++] = view.substr(0, comma);
      if (comma == std::string_view::npos) break;
      view.remove_prefix(comma + 1);
    }
    if (count != 4) throw ParseError(line_no, "expected 4 fields, got " + std::to_string(count));

    ObservedRow row;
    const long long l = parse_field<long long>(fields[0], line_no, "l");
    if (l < 0) throw DomainError("line " + std::to_string(line_no), "l must be nonnegative");
    row.cell = static_cast<std::size_t>(l);
    row.z = parse_arm(fields[1], line_no, "z");
    row.a = parse_arm(fields[2], line_no, "a");
    row.y = parse_field<double>(fields[3], line_no, "y");
    if (!std::isfinite(row.y)) throw DomainError("line " + std::to_string(line_no), "y must be finite");
    max_cell = std::max(max_cell, row.cell);
    rows.push_back(row);
  }
  if (rows.empty()) throw EmptyDatasetError();
  const std::size_t k = cell_count.value_or(max_cell + 1);
  return Dataset(std::move(rows), k);
}

Dataset read_csv(const std::filesystem::path& path, std::optional<std::size_t> cell_count) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError(path.string(), "cannot open dataset file");
  return read_csv(in, cell_count);
}

}  // namespace ivregime
