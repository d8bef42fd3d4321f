#pragma once

// Flat result tables and their CSV / JSON encodings.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

namespace tvvi {

inline constexpr const char* kSchemaLine = "# schema=v1";
inline constexpr const char* kDivergedToken = "diverged";

struct Diverged {
  bool operator==(const Diverged&) const = default;
};

/// Reals print with 17 significant digits; non-finite reals are rejected.
using Cell = std::variant<double, std::int64_t, std::string, Diverged>;

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<Cell>> rows;

  /// Throws ContractViolation when the row width differs from the header.
  void add(std::vector<Cell> row);
  bool operator==(const Table&) const = default;
};

enum class Format { Csv, Json };

Format parse_format(const std::string& s);
std::string format_name(Format f);

std::string format_cell(const Cell& c);

/// Schema comment, header, then one line per row, CRLF-free.
void write_csv(std::ostream& os, const Table& table);
std::string to_csv(const Table& table);
/// Array of objects keyed by the header.
std::string to_json(const Table& table);

/// Inverse of to_csv. Fields that read back fully as integers or reals get
/// those types, the diverged token becomes Diverged, the rest stay text.
Table parse_csv(const std::string& text);

/// Writes to `path` ("-" is stdout); I/O failures throw std::runtime_error
/// naming the path.
void emit_rows(const Table& table, Format format, const std::string& path);

/// "1;2.5;-3" with 17 significant digits per entry.
std::string join_reals(const std::vector<double>& xs);

}  // namespace tvvi
