#pragma once

// Key-value configuration: a minimal TOML-style text format (sections, dotted
// keys, strings, booleans, numbers, nested arrays) with typed accessors and a
// canonical sorted serialization used for run manifests. Parsing keeps the
// raw numeric token so 64-bit seeds survive untouched; setters store shortest
// round-trip tokens so serialize() is byte-deterministic.

#include <Eigen/Dense>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "tsr/errors.hpp"
#include "tsr/io.hpp"

namespace tsr {

using Mat = Eigen::MatrixXd;

struct ConfigValue {
  enum class Kind { boolean, number, string, array };

  Kind kind = Kind::string;
  std::string text;                 // scalar payload (raw token / string body)
  std::vector<ConfigValue> items;   // array elements

  static ConfigValue boolean(bool b) {
    return {Kind::boolean, b ? "true" : "false", {}};
  }
  static ConfigValue number_token(std::string token) {
    return {Kind::number, std::move(token), {}};
  }
  static ConfigValue str(std::string s) { return {Kind::string, std::move(s), {}}; }
  static ConfigValue array(std::vector<ConfigValue> elems) {
    return {Kind::array, {}, std::move(elems)};
  }
};

namespace detail {

inline bool config_key_ok(std::string_view key) {
  if (key.empty()) return false;
  for (const char c : key)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' ||
          c == '-'))
      return false;
  return true;
}

inline std::string_view config_trim(std::string_view sv) {
  while (!sv.empty() && std::isspace(static_cast<unsigned char>(sv.front())))
    sv.remove_prefix(1);
  while (!sv.empty() && std::isspace(static_cast<unsigned char>(sv.back())))
    sv.remove_suffix(1);
  return sv;
}

inline std::string config_quote(const std::string& s) {
  std::string out = "\"";
  for (const char c : s) {
    if (static_cast<unsigned char>(c) < 0x20)
      throw config_error("control character in string value");
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  out += '"';
  return out;
}

inline std::string config_value_to_string(const ConfigValue& v) {
  switch (v.kind) {
    case ConfigValue::Kind::boolean:
    case ConfigValue::Kind::number:
      return v.text;
    case ConfigValue::Kind::string:
      return config_quote(v.text);
    case ConfigValue::Kind::array: {
      std::string out = "[";
      const char* sep = "";
      for (const auto& e : v.items) {
        out += sep;
        out += config_value_to_string(e);
        sep = ", ";
      }
      out += "]";
      return out;
    }
  }
  throw config_error("corrupt config value");
}

// Parse one value token; `where` names the location for error messages.
inline ConfigValue config_parse_value(std::string_view sv, const std::string& where);

inline ConfigValue config_parse_array(std::string_view sv, const std::string& where) {
  // sv includes the surrounding brackets
  sv.remove_prefix(1);
  sv.remove_suffix(1);
  std::vector<std::string_view> pieces;
  int depth = 0;
  bool in_string = false, escaped = false;
  size_t start = 0;
  for (size_t i = 0; i < sv.size(); ++i) {
    const char c = sv[i];
    if (in_string) {
      if (escaped)
        escaped = false;
      else if (c == '\\')
        escaped = true;
      else if (c == '"')
        in_string = false;
      continue;
    }
    if (c == '"') {
      in_string = true;
    } else if (c == '[') {
      ++depth;
    } else if (c == ']') {
      --depth;
      if (depth < 0) throw config_error(where + ": unbalanced ']'");
    } else if (c == ',' && depth == 0) {
      pieces.push_back(sv.substr(start, i - start));
      start = i + 1;
    }
  }
  if (in_string) throw config_error(where + ": unterminated string in array");
  if (depth != 0) throw config_error(where + ": unbalanced '['");
  pieces.push_back(sv.substr(start));

  std::vector<ConfigValue> items;
  if (pieces.size() == 1 && config_trim(pieces.front()).empty())
    return ConfigValue::array({});  // "[]" or "[ ]"
  items.reserve(pieces.size());
  for (const auto piece : pieces) {
    const auto body = config_trim(piece);
    if (body.empty()) throw config_error(where + ": empty array element");
    items.push_back(config_parse_value(body, where));
  }
  return ConfigValue::array(std::move(items));
}

inline ConfigValue config_parse_value(std::string_view sv, const std::string& where) {
  sv = config_trim(sv);
  if (sv.empty()) throw config_error(where + ": missing value");

  if (sv.front() == '"') {
    std::string body;
    bool closed = false;
    size_t i = 1;
    for (; i < sv.size(); ++i) {
      const char c = sv[i];
      if (c == '\\') {
        if (i + 1 >= sv.size()) throw config_error(where + ": dangling escape");
        const char n = sv[++i];
        if (n != '"' && n != '\\')
          throw config_error(where + ": unsupported escape '\\" +
                             std::string(1, n) + "'");
        body += n;
      } else if (c == '"') {
        closed = true;
        ++i;
        break;
      } else if (static_cast<unsigned char>(c) < 0x20) {
        throw config_error(where + ": control character in string");
      } else {
        body += c;
      }
    }
    if (!closed) throw config_error(where + ": unterminated string");
    if (i != sv.size()) throw config_error(where + ": trailing characters after string");
    return ConfigValue::str(std::move(body));
  }

  if (sv.front() == '[') {
    if (sv.back() != ']') throw config_error(where + ": array does not end with ']'");
    return config_parse_array(sv, where);
  }

  if (sv == "true") return ConfigValue::boolean(true);
  if (sv == "false") return ConfigValue::boolean(false);

  // number: validate the whole token as a finite double, keep it verbatim
  std::string_view tok = sv;
  if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
  double parsed = 0.0;
  const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), parsed);
  if (res.ec != std::errc{} || res.ptr != tok.data() + tok.size())
    throw config_error(where + ": cannot parse value '" + std::string(sv) + "'");
  if (!std::isfinite(parsed))
    throw config_error(where + ": non-finite number '" + std::string(sv) + "'");
  return ConfigValue::number_token(std::string(tok));
}

}  // namespace detail

class Config {
 public:
  Config() = default;

  /// Parse section/key-value text. Duplicate keys are rejected.
  static Config parse(std::string_view text) {
    Config cfg;
    std::string prefix;
    int line_no = 0;
    size_t pos = 0;
    while (pos <= text.size()) {
      const size_t eol = text.find('\n', pos);
      std::string_view line = text.substr(
          pos, eol == std::string_view::npos ? text.size() - pos : eol - pos);
      pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

      // strip comments that start outside quoted strings
      bool in_string = false, escaped = false;
      size_t cut = line.size();
      for (size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (in_string) {
          if (escaped)
            escaped = false;
          else if (c == '\\')
            escaped = true;
          else if (c == '"')
            in_string = false;
        } else if (c == '"') {
          in_string = true;
        } else if (c == '#') {
          cut = i;
          break;
        }
      }
      const auto body = detail::config_trim(line.substr(0, cut));
      if (body.empty()) continue;
      const std::string where = "config line " + std::to_string(line_no);

      if (body.front() == '[') {
        if (body.back() != ']') throw config_error(where + ": malformed section");
        const auto name = detail::config_trim(body.substr(1, body.size() - 2));
        if (!detail::config_key_ok(name))
          throw config_error(where + ": bad section name");
        prefix = std::string(name) + ".";
        continue;
      }

      const size_t eq = body.find('=');
      if (eq == std::string_view::npos)
        throw config_error(where + ": expected 'key = value'");
      const auto key_part = detail::config_trim(body.substr(0, eq));
      if (!detail::config_key_ok(key_part))
        throw config_error(where + ": bad key '" + std::string(key_part) + "'");
      const std::string key = prefix + std::string(key_part);
      if (cfg.values_.count(key))
        throw config_error(where + ": duplicate key '" + key + "'");
      cfg.values_.emplace(key,
                          detail::config_parse_value(body.substr(eq + 1), where));
    }
    return cfg;
  }

  static Config load(const std::filesystem::path& path) {
    return parse(read_text(path));
  }

  bool has(const std::string& key) const { return values_.count(key) != 0; }

  /// Later values win; used for defaults <- file <- command line layering.
  void merge(const Config& other) {
    for (const auto& [k, v] : other.values_) values_[k] = v;
  }

  const std::map<std::string, ConfigValue>& entries() const { return values_; }

  // -- setters (store canonical tokens) --------------------------------------

  void set(const std::string& key, ConfigValue v) {
    if (!detail::config_key_ok(key)) throw config_error("bad config key '" + key + "'");
    values_[key] = std::move(v);
  }
  void set_bool(const std::string& key, bool v) { set(key, ConfigValue::boolean(v)); }
  void set_double(const std::string& key, double v) {
    if (!std::isfinite(v)) throw config_error("non-finite value for '" + key + "'");
    set(key, ConfigValue::number_token(format_double(v)));
  }
  void set_int(const std::string& key, std::int64_t v) {
    set(key, ConfigValue::number_token(std::to_string(v)));
  }
  void set_u64(const std::string& key, std::uint64_t v) {
    set(key, ConfigValue::number_token(std::to_string(v)));
  }
  void set_string(const std::string& key, std::string v) {
    set(key, ConfigValue::str(std::move(v)));
  }
  void set_double_list(const std::string& key, const std::vector<double>& vs) {
    std::vector<ConfigValue> items;
    items.reserve(vs.size());
    for (const double v : vs) {
      if (!std::isfinite(v)) throw config_error("non-finite value for '" + key + "'");
      items.push_back(ConfigValue::number_token(format_double(v)));
    }
    set(key, ConfigValue::array(std::move(items)));
  }
  void set_string_list(const std::string& key, const std::vector<std::string>& vs) {
    std::vector<ConfigValue> items;
    items.reserve(vs.size());
    for (const auto& v : vs) items.push_back(ConfigValue::str(v));
    set(key, ConfigValue::array(std::move(items)));
  }
  void set_mat(const std::string& key, const Mat& m) {
    std::vector<ConfigValue> rows;
    rows.reserve(static_cast<size_t>(m.rows()));
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      std::vector<ConfigValue> row;
      row.reserve(static_cast<size_t>(m.cols()));
      for (Eigen::Index j = 0; j < m.cols(); ++j)
        row.push_back(ConfigValue::number_token(format_double(m(i, j))));
      rows.push_back(ConfigValue::array(std::move(row)));
    }
    set(key, ConfigValue::array(std::move(rows)));
  }

  // -- typed getters ----------------------------------------------------------

  double get_double(const std::string& key) const {
    const auto& v = require(key, ConfigValue::Kind::number, "number");
    double out = 0.0;
    std::from_chars(v.text.data(), v.text.data() + v.text.size(), out);
    return out;
  }
  std::int64_t get_int(const std::string& key) const {
    return parse_integer<std::int64_t>(key);
  }
  std::uint64_t get_u64(const std::string& key) const {
    return parse_integer<std::uint64_t>(key);
  }
  bool get_bool(const std::string& key) const {
    return require(key, ConfigValue::Kind::boolean, "boolean").text == "true";
  }
  std::string get_string(const std::string& key) const {
    return require(key, ConfigValue::Kind::string, "string").text;
  }
  std::vector<double> get_double_list(const std::string& key) const {
    const auto& v = require(key, ConfigValue::Kind::array, "array");
    std::vector<double> out;
    out.reserve(v.items.size());
    for (const auto& e : v.items) {
      if (e.kind != ConfigValue::Kind::number)
        throw config_error("key '" + key + "': expected an array of numbers");
      double d = 0.0;
      std::from_chars(e.text.data(), e.text.data() + e.text.size(), d);
      out.push_back(d);
    }
    return out;
  }
  std::vector<std::string> get_string_list(const std::string& key) const {
    const auto& v = require(key, ConfigValue::Kind::array, "array");
    std::vector<std::string> out;
    out.reserve(v.items.size());
    for (const auto& e : v.items) {
      if (e.kind != ConfigValue::Kind::string)
        throw config_error("key '" + key + "': expected an array of strings");
      out.push_back(e.text);
    }
    return out;
  }
  /// Array of numbers -> N x 1; array of equal-length number rows -> N x d.
  Mat get_mat(const std::string& key) const {
    const auto& v = require(key, ConfigValue::Kind::array, "array");
    if (v.items.empty()) throw config_error("key '" + key + "': empty matrix");
    if (v.items.front().kind == ConfigValue::Kind::number) {
      const auto flat = get_double_list(key);
      Mat m(static_cast<Eigen::Index>(flat.size()), 1);
      for (size_t i = 0; i < flat.size(); ++i)
        m(static_cast<Eigen::Index>(i), 0) = flat[i];
      return m;
    }
    const size_t d = v.items.front().items.size();
    if (d == 0) throw config_error("key '" + key + "': empty matrix row");
    Mat m(static_cast<Eigen::Index>(v.items.size()), static_cast<Eigen::Index>(d));
    for (size_t i = 0; i < v.items.size(); ++i) {
      const auto& row = v.items[i];
      if (row.kind != ConfigValue::Kind::array || row.items.size() != d)
        throw config_error("key '" + key + "': ragged matrix rows");
      for (size_t j = 0; j < d; ++j) {
        const auto& e = row.items[j];
        if (e.kind != ConfigValue::Kind::number)
          throw config_error("key '" + key + "': expected numeric matrix entries");
        double val = 0.0;
        std::from_chars(e.text.data(), e.text.data() + e.text.size(), val);
        m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = val;
      }
    }
    return m;
  }

  // -- defaulted getters --------------------------------------------------------

  double get_double_or(const std::string& key, double fallback) const {
    return has(key) ? get_double(key) : fallback;
  }
  std::int64_t get_int_or(const std::string& key, std::int64_t fallback) const {
    return has(key) ? get_int(key) : fallback;
  }
  std::uint64_t get_u64_or(const std::string& key, std::uint64_t fallback) const {
    return has(key) ? get_u64(key) : fallback;
  }
  bool get_bool_or(const std::string& key, bool fallback) const {
    return has(key) ? get_bool(key) : fallback;
  }
  std::string get_string_or(const std::string& key, std::string fallback) const {
    return has(key) ? get_string(key) : std::move(fallback);
  }

  /// Canonical text form: flat dotted keys, sorted, one per line.
  std::string serialize() const {
    std::string out;
    for (const auto& [k, v] : values_) {
      out += k;
      out += " = ";
      out += detail::config_value_to_string(v);
      out += '\n';
    }
    return out;
  }

 private:
  const ConfigValue& require(const std::string& key, ConfigValue::Kind kind,
                             const char* kind_name) const {
    const auto it = values_.find(key);
    if (it == values_.end()) throw config_error("missing config key '" + key + "'");
    if (it->second.kind != kind)
      throw config_error("key '" + key + "': expected " + std::string(kind_name) +
                         " value");
    return it->second;
  }

  template <typename Int>
  Int parse_integer(const std::string& key) const {
    const auto& v = require(key, ConfigValue::Kind::number, "number");
    Int out{};
    const auto res =
        std::from_chars(v.text.data(), v.text.data() + v.text.size(), out);
    if (res.ec != std::errc{} || res.ptr != v.text.data() + v.text.size())
      throw config_error("key '" + key + "': '" + v.text + "' is not a valid integer");
    return out;
  }

  std::map<std::string, ConfigValue> values_;
};

}  // namespace tsr
