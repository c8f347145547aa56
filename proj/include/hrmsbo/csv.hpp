#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace hrmsbo::csv {

/// Shortest decimal form that round-trips to the same double (to_chars).
/// Guarantees re-export of identical values is byte-identical.
std::string format_double(double v);
std::string format_int(std::int64_t v);
std::string format_u64(std::uint64_t v);
std::string format_bool(bool v);

double parse_double(const std::string& field);
std::int64_t parse_int(const std::string& field);
std::uint64_t parse_u64(const std::string& field);
bool parse_bool(const std::string& field);

/// Join fields with commas. Fields must not contain commas or newlines;
/// violations throw (all values written here are names and numbers).
std::string join_row(const std::vector<std::string>& fields);
std::vector<std::string> split_row(const std::string& line);

}  // namespace hrmsbo::csv
