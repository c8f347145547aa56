#include "hrmsbo/csv.hpp"

#include <charconv>
#include <stdexcept>
#include <system_error>

namespace hrmsbo::csv {

namespace {

template <typename T>
std::string format_via_chars(T v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw std::runtime_error("to_chars failed");
  return std::string(buf, ptr);
}

template <typename T>
T parse_via_chars(const std::string& field, const char* what) {
  T value{};
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size()) {
    throw std::invalid_argument(std::string("bad ") + what + " field: " + field);
  }
  return value;
}

}  // namespace

std::string format_double(double v) { return format_via_chars(v); }
std::string format_int(std::int64_t v) { return format_via_chars(v); }
std::string format_u64(std::uint64_t v) { return format_via_chars(v); }
std::string format_bool(bool v) { return v ? "true" : "false"; }

double parse_double(const std::string& field) {
  return parse_via_chars<double>(field, "double");
}
std::int64_t parse_int(const std::string& field) {
  return parse_via_chars<std::int64_t>(field, "integer");
}
std::uint64_t parse_u64(const std::string& field) {
  return parse_via_chars<std::uint64_t>(field, "unsigned");
}
bool parse_bool(const std::string& field) {
  if (field == "true") return true;
  if (field == "false") return false;
  throw std::invalid_argument("bad boolean field: " + field);
}

std::string join_row(const std::vector<std::string>& fields) {
  std::string row;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    const std::string& f = fields[i];
    if (f.find_first_of(",\n\r") != std::string::npos) {
      throw std::invalid_argument("csv field contains a separator: " + f);
    }
    if (i) row += ',';
    row += f;
  }
  return row;
}

std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return fields;
}

}  // namespace hrmsbo::csv
