#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace stylip {

struct KeyValue {
  std::string key;
  std::string value;
  std::size_t line = 0;  // 1-based source line
};

/// Parses `key = value` lines; blank lines and `#` comments are skipped.
/// Throws ConfigError naming the line on anything else.
std::vector<KeyValue> parse_key_values(std::string_view text);

std::string trim(std::string_view s);
std::vector<std::string> split_list(std::string_view s, char sep = ',');

std::size_t parse_size(const KeyValue& kv);
double parse_double(const KeyValue& kv);
long long parse_int(const KeyValue& kv);
bool parse_bool(const KeyValue& kv);

// Shortest decimal form that round-trips to the same double.
std::string format_double(double v);

}  // namespace stylip
