#pragma once

// Deterministic text artifacts: shortest round-trip double formatting, atomic
// file writes (temp + rename), and a small CSV builder that stamps a schema
// version line ahead of the header row.

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

#include "tsr/errors.hpp"

namespace tsr {

/// Shortest decimal string that parses back to exactly the same double.
inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

/// Write the whole file through a temp sibling and rename into place, creating
/// parent directories as needed. Readers never observe a partial file.
inline void write_text_atomic(const std::filesystem::path& path,
                              std::string_view content) {
  std::error_code ec;
  const auto parent = path.parent_path();
  if (!parent.empty()) {
    std::filesystem::create_directories(parent, ec);
    if (ec) throw io_error("cannot create directory " + parent.string() + ": " +
                           ec.message());
  }
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw io_error("cannot open " + tmp.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw io_error("short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw io_error("cannot rename " + tmp.string() + " to " + path.string() +
                         ": " + ec.message());
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open " + path.string() + " for reading");
  std::string content((std::istreambuf_iterator<char>(in)),
                      std::istreambuf_iterator<char>());
  if (in.bad()) throw io_error("read failure on " + path.string());
  return content;
}

namespace detail {

inline std::string csv_field(double v) { return format_double(v); }
inline std::string csv_field(bool v) { return v ? "true" : "false"; }
inline std::string csv_field(int v) { return std::to_string(v); }
inline std::string csv_field(long v) { return std::to_string(v); }
inline std::string csv_field(long long v) { return std::to_string(v); }
inline std::string csv_field(unsigned v) { return std::to_string(v); }
inline std::string csv_field(unsigned long v) { return std::to_string(v); }
inline std::string csv_field(unsigned long long v) { return std::to_string(v); }
inline std::string csv_field(const char* v) { return std::string(v); }
inline std::string csv_field(std::string v) { return v; }

}  // namespace detail

/// Column-checked CSV accumulator. The first emitted line names the schema so
/// downstream readers can detect layout drift; the second is the header row.
class CsvTable {
 public:
  CsvTable(std::string schema, std::vector<std::string> columns)
      : schema_(std::move(schema)), columns_(std::move(columns)) {
    if (columns_.empty()) throw param_error("CsvTable: no columns");
  }

  template <typename... Ts>
  void add_row(Ts&&... values) {
    static_assert(sizeof...(Ts) > 0, "CsvTable: empty row");
    if (sizeof...(Ts) != columns_.size())
      throw param_error("CsvTable: row width does not match column count");
    std::string row;
    const char* sep = "";
    ((row += sep, row += detail::csv_field(std::forward<Ts>(values)), sep = ","),
     ...);
    body_ += row;
    body_ += '\n';
    ++rows_;
  }

  /// Runtime-width variant for tables whose column count is data-dependent.
  void add_cells(const std::vector<std::string>& cells) {
    if (cells.size() != columns_.size())
      throw param_error("CsvTable: row width does not match column count");
    const char* sep = "";
    for (const auto& c : cells) {
      body_ += sep;
      body_ += c;
      sep = ",";
    }
    body_ += '\n';
    ++rows_;
  }

  std::size_t rows() const { return rows_; }

  std::string str() const {
    std::string out = "# schema: " + schema_ + "\n";
    const char* sep = "";
    for (const auto& c : columns_) {
      out += sep;
      out += c;
      sep = ",";
    }
    out += '\n';
    out += body_;
    return out;
  }

  void write(const std::filesystem::path& path) const {
    write_text_atomic(path, str());
  }

 private:
  std::string schema_;
  std::vector<std::string> columns_;
  std::string body_;
  std::size_t rows_ = 0;
};

}  // namespace tsr
