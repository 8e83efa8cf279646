#include "rpavg_cli/toml_lite.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <limits>

namespace rpavg::cli {

TomlError::TomlError(int line, const std::string& message)
    : std::runtime_error("line " + std::to_string(line) + ": " + message), line_(line) {}

std::string TomlValue::kind_name() const {
  switch (kind) {
    case Kind::kBool:
      return "boolean";
    case Kind::kInt:
      return "integer";
    case Kind::kFloat:
      return "float";
    case Kind::kString:
      return "string";
    case Kind::kArray:
      return "array";
  }
  return "value";
}

namespace {

class Parser {
 public:
  explicit Parser(std::string_view text) : t_(text) {}

  TomlTable parse() {
    TomlTable root;
    root.line = 1;
    TomlTable* current = &root;
    for (;;) {
      skip_blank_lines();
      if (eof()) break;
      if (peek() == '[') {
        current = &open_table(root);
      } else {
        parse_pair(*current);
      }
      end_of_line();
    }
    return root;
  }

 private:
  bool eof() const { return pos_ >= t_.size(); }
  char peek() const { return eof() ? '\0' : t_[pos_]; }
  char get() {
    const char c = t_[pos_++];
    if (c == '\n') ++line_;
    return c;
  }
  [[noreturn]] void fail(const std::string& msg) const { throw TomlError(line_, msg); }

  void skip_ws() {
    while (!eof() && (peek() == ' ' || peek() == '\t')) ++pos_;
  }
  void skip_comment() {
    if (peek() == '#')
      while (!eof() && peek() != '\n') ++pos_;
  }
  void skip_blank_lines() {
    for (;;) {
      skip_ws();
      skip_comment();
      if (peek() == '\r') ++pos_;
      if (peek() == '\n') {
        get();
        continue;
      }
      return;
    }
  }
  // Whitespace, comments and newlines inside arrays.
  void skip_array_space() {
    for (;;) {
      skip_ws();
      skip_comment();
      if (peek() == '\r' || peek() == '\n') {
        get();
        continue;
      }
      return;
    }
  }
  void end_of_line() {
    skip_ws();
    skip_comment();
    if (peek() == '\r') ++pos_;
    if (eof()) return;
    if (peek() != '\n') fail(std::string("unexpected character '") + peek() + "' after value");
    get();
  }

  std::string parse_key_part() {
    skip_ws();
    if (peek() == '"' || peek() == '\'') return parse_string();
    std::string k;
    while (!eof() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_' || peek() == '-'))
      k += t_[pos_++];
    if (k.empty()) fail("expected a key");
    return k;
  }

  std::vector<std::string> parse_dotted_key() {
    std::vector<std::string> parts{parse_key_part()};
    skip_ws();
    while (peek() == '.') {
      ++pos_;
      parts.push_back(parse_key_part());
      skip_ws();
    }
    return parts;
  }

  TomlTable& open_table(TomlTable& root) {
    const int header_line = line_;
    ++pos_;
    if (peek() == '[') fail("arrays of tables are not supported");
    const auto parts = parse_dotted_key();
    if (peek() != ']') fail("expected ']' to close the table header");
    ++pos_;
    TomlTable* t = &root;
    for (std::size_t i = 0; i < parts.size(); ++i) {
      if (t->values.count(parts[i])) fail("'" + parts[i] + "' is already defined as a value");
      auto [it, inserted] = t->tables.try_emplace(parts[i]);
      if (i + 1 == parts.size()) {
        if (!inserted && it->second.line > 0 && defined_.count(&it->second))
          fail("table [" + join(parts) + "] is defined twice");
        defined_.insert({&it->second, true});
        it->second.line = header_line;
      } else if (inserted) {
        it->second.line = header_line;
      }
      t = &it->second;
    }
    return *t;
  }

  static std::string join(const std::vector<std::string>& parts) {
    std::string s;
    for (std::size_t i = 0; i < parts.size(); ++i) s += (i ? "." : "") + parts[i];
    return s;
  }

  void parse_pair(TomlTable& table) {
    const int key_line = line_;
    const auto parts = parse_dotted_key();
    if (peek() != '=') fail("expected '=' after key '" + join(parts) + "'");
    ++pos_;
    skip_ws();
    TomlTable* t = &table;
    for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
      auto [it, inserted] = t->tables.try_emplace(parts[i]);
      if (inserted) it->second.line = key_line;
      t = &it->second;
    }
    const std::string& key = parts.back();
    if (t->values.count(key) || t->tables.count(key)) fail("duplicate key '" + join(parts) + "'");
    TomlValue v = parse_value();
    v.line = key_line;
    t->values.emplace(key, std::move(v));
  }

  TomlValue parse_value() {
    TomlValue v;
    v.line = line_;
    const char c = peek();
    if (c == '"' || c == '\'') {
      v.kind = TomlValue::Kind::kString;
      v.s = parse_string();
    } else if (c == '[') {
      v.kind = TomlValue::Kind::kArray;
      ++pos_;
      for (;;) {
        skip_array_space();
        if (peek() == ']') {
          ++pos_;
          break;
        }
        v.array.push_back(parse_value());
        skip_array_space();
        if (peek() == ',') {
          ++pos_;
          continue;
        }
        if (peek() == ']') {
          ++pos_;
          break;
        }
        fail("expected ',' or ']' in array");
      }
    } else if (c == '{') {
      fail("inline tables are not supported");
    } else if (t_.substr(pos_, 4) == "true") {
      pos_ += 4;
      v.kind = TomlValue::Kind::kBool;
      v.b = true;
    } else if (t_.substr(pos_, 5) == "false") {
      pos_ += 5;
      v.kind = TomlValue::Kind::kBool;
      v.b = false;
    } else {
      parse_number(v);
    }
    return v;
  }

  std::string parse_string() {
    const char q = get();
    if (t_.substr(pos_, 2) == std::string(2, q)) fail("multi-line strings are not supported");
    std::string s;
    for (;;) {
      if (eof() || peek() == '\n') fail("unterminated string");
      char c = get();
      if (c == q) break;
      if (q == '"' && c == '\\') {
        if (eof()) fail("unterminated escape");
        const char e = get();
        switch (e) {
          case 'n': s += '\n'; break;
          case 't': s += '\t'; break;
          case 'r': s += '\r'; break;
          case '"': s += '"'; break;
          case '\\': s += '\\'; break;
          default: fail(std::string("unsupported escape '\\") + e + "'");
        }
        continue;
      }
      s += c;
    }
    return s;
  }

  void parse_number(TomlValue& v) {
    std::string tok;
    while (!eof()) {
      const char c = peek();
      if (std::isalnum(static_cast<unsigned char>(c)) || c == '+' || c == '-' || c == '.' || c == '_') {
        if (c != '_') tok += c;
        ++pos_;
      } else {
        break;
      }
    }
    if (tok.empty()) fail("expected a value");
    std::string body = tok;
    double sign = 1.0;
    if (body[0] == '+' || body[0] == '-') {
      sign = body[0] == '-' ? -1.0 : 1.0;
      body = body.substr(1);
    }
    if (body == "inf" || body == "nan") {
      v.kind = TomlValue::Kind::kFloat;
      v.f = body == "inf" ? sign * std::numeric_limits<double>::infinity()
                          : std::numeric_limits<double>::quiet_NaN();
      return;
    }
    const bool is_float = tok.find_first_of(".eE") != std::string::npos;
    const char* first = tok.data() + (tok[0] == '+' ? 1 : 0);
    const char* last = tok.data() + tok.size();
    if (is_float) {
      double d = 0.0;
      auto [p, ec] = std::from_chars(first, last, d);
      if (ec != std::errc() || p != last) fail("invalid number '" + tok + "'");
      v.kind = TomlValue::Kind::kFloat;
      v.f = d;
    } else {
      std::int64_t i = 0;
      auto [p, ec] = std::from_chars(first, last, i);
      if (ec != std::errc() || p != last) fail("invalid value '" + tok + "'");
      v.kind = TomlValue::Kind::kInt;
      v.i = i;
    }
  }

  std::string_view t_;
  std::size_t pos_ = 0;
  int line_ = 1;
  std::map<const TomlTable*, bool> defined_;
};

}  // namespace

TomlTable parse_toml(std::string_view text) { return Parser(text).parse(); }

}  // namespace rpavg::cli
