#include "stylip/key_value.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <string>

#include "stylip/errors.hpp"

namespace stylip {
namespace {

[[noreturn]] void bad_value(const KeyValue& kv, const char* what) {
  const std::string where = kv.line ? "line " + std::to_string(kv.line) + ": " : std::string();
  throw ConfigError(where + "key '" + kv.key + "' expects " + what + ", got '" + kv.value + "'");
}

}  // namespace

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(std::string_view s, char sep) {
  std::vector<std::string> out;
  if (trim(s).empty()) return out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::vector<KeyValue> parse_key_values(std::string_view text) {
  std::vector<KeyValue> out;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    ++line_no;
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    const std::string stripped = trim(line);
    if (stripped.empty()) {
      if (end == text.size()) break;
      continue;
    }
    const auto eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(line_no) + ": expected 'key = value', got '" +
                        stripped + "'");
    }
    KeyValue kv{trim(std::string_view(stripped).substr(0, eq)),
                trim(std::string_view(stripped).substr(eq + 1)), line_no};
    if (kv.key.empty()) throw ConfigError("line " + std::to_string(line_no) + ": empty key");
    out.push_back(std::move(kv));
    if (end == text.size()) break;
  }
  return out;
}

std::size_t parse_size(const KeyValue& kv) {
  std::size_t v = 0;
  const char* b = kv.value.data();
  const char* e = b + kv.value.size();
  auto [ptr, ec] = std::from_chars(b, e, v);
  if (ec != std::errc() || ptr != e || kv.value.empty()) bad_value(kv, "a non-negative integer");
  return v;
}

long long parse_int(const KeyValue& kv) {
  long long v = 0;
  const char* b = kv.value.data();
  const char* e = b + kv.value.size();
  auto [ptr, ec] = std::from_chars(b, e, v);
  if (ec != std::errc() || ptr != e || kv.value.empty()) bad_value(kv, "an integer");
  return v;
}

double parse_double(const KeyValue& kv) {
  double v = 0.0;
  const char* b = kv.value.data();
  const char* e = b + kv.value.size();
  auto [ptr, ec] = std::from_chars(b, e, v);
  if (ec != std::errc() || ptr != e || kv.value.empty() || !std::isfinite(v)) bad_value(kv, "a finite real number");
  return v;
}

bool parse_bool(const KeyValue& kv) {
  if (kv.value == "true" || kv.value == "1" || kv.value == "yes") return true;
  if (kv.value == "false" || kv.value == "0" || kv.value == "no") return false;
  bad_value(kv, "true or false");
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

}  // namespace stylip
