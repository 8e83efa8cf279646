#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace rpavg::cli {

// Parse error carrying the 1-based line it refers to.
class TomlError : public std::runtime_error {
 public:
  TomlError(int line, const std::string& message);
  int line() const noexcept { return line_; }

 private:
  int line_;
};

struct TomlValue {
  enum class Kind { kBool, kInt, kFloat, kString, kArray };

  Kind kind = Kind::kInt;
  bool b = false;
  std::int64_t i = 0;
  double f = 0.0;
  std::string s;
  std::vector<TomlValue> array;
  int line = 0;

  bool is_number() const { return kind == Kind::kInt || kind == Kind::kFloat; }
  double as_double() const { return kind == Kind::kInt ? static_cast<double>(i) : f; }
  std::string kind_name() const;
};

struct TomlTable {
  std::map<std::string, TomlValue> values;
  std::map<std::string, TomlTable> tables;
  int line = 0;
};

// The subset used by experiment files: [table] and [a.b] headers, bare or
// quoted keys, basic and literal strings, integers, floats (incl. inf/nan),
// booleans, and arrays that may span lines. Inline tables, dates and
// multi-line strings are rejected.
TomlTable parse_toml(std::string_view text);

}  // namespace rpavg::cli
