#include "tvvi/rows.hpp"

#include "tvvi/vi_core.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace tvvi {

void Table::add(std::vector<Cell> row) {
  if (row.size() != header.size())
    throw ContractViolation("row has " + std::to_string(row.size()) + " cells, header has " +
                            std::to_string(header.size()));
  rows.push_back(std::move(row));
}

Format parse_format(const std::string& s) {
  if (s == "csv") return Format::Csv;
  if (s == "json") return Format::Json;
  throw ConfigError("format", "expected csv or json, got '" + s + "'");
}

std::string format_name(Format f) { return f == Format::Csv ? "csv" : "json"; }

namespace {

std::string real17(double x) {
  if (!std::isfinite(x)) throw ContractViolation("non-finite value in result row");
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  std::string s = buf;
  // Keep integral reals distinguishable from integers when read back.
  if (s.find_first_of(".en") == std::string::npos) s += ".0";
  return s;
}

bool needs_quotes(const std::string& s) {
  if (s.empty()) return false;
  if (s.front() == ' ' || s.back() == ' ') return true;
  return s.find_first_of(",\"\r\n") != std::string::npos;
}

std::string quote(const std::string& s) {
  if (!needs_quotes(s)) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

Cell infer(const std::string& s, bool quoted) {
  if (quoted) return s;
  if (s == kDivergedToken) return Diverged{};
  if (s.empty()) return s;
  const char* b = s.c_str();
  char* end = nullptr;
  errno = 0;
  long long i = std::strtoll(b, &end, 10);
  if (errno == 0 && *end == '\0') return static_cast<std::int64_t>(i);
  errno = 0;
  double d = std::strtod(b, &end);
  if (errno == 0 && *end == '\0' && std::isfinite(d)) return d;
  return s;
}

}  // namespace

std::string format_cell(const Cell& c) {
  return std::visit(
      [](const auto& v) -> std::string {
        using V = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<V, double>)
          return real17(v);
        else if constexpr (std::is_same_v<V, std::int64_t>)
          return std::to_string(v);
        else if constexpr (std::is_same_v<V, std::string>)
          return v;
        else
          return kDivergedToken;
      },
      c);
}

std::string join_reals(const std::vector<double>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ';';
    out += real17(xs[i]);
  }
  return out;
}

void write_csv(std::ostream& os, const Table& table) {
  os << kSchemaLine << '\n';
  for (std::size_t i = 0; i < table.header.size(); ++i) os << (i ? "," : "") << quote(table.header[i]);
  os << '\n';
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      const Cell& c = row[i];
      std::string s = format_cell(c);
      // Text that would read back as another type gets forced quotes.
      if (std::holds_alternative<std::string>(c) && !needs_quotes(s) &&
          !std::holds_alternative<std::string>(infer(s, false)))
        s = "\"" + s + "\"";
      else
        s = quote(s);
      os << (i ? "," : "") << s;
    }
    os << '\n';
  }
}

std::string to_csv(const Table& table) {
  std::ostringstream os;
  write_csv(os, table);
  return os.str();
}

std::string to_json(const Table& table) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& row : table.rows) {
    nlohmann::ordered_json obj = nlohmann::ordered_json::object();
    for (std::size_t i = 0; i < row.size(); ++i) {
      const auto& key = table.header[i];
      std::visit(
          [&](const auto& v) {
            using V = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<V, double>) {
              if (!std::isfinite(v)) throw ContractViolation("non-finite value in result row");
              obj[key] = v;
            } else if constexpr (std::is_same_v<V, Diverged>) {
              obj[key] = kDivergedToken;
            } else {
              obj[key] = v;
            }
          },
          row[i]);
    }
    arr.push_back(std::move(obj));
  }
  return arr.dump(2) + "\n";
}

Table parse_csv(const std::string& text) {
  struct Field {
    std::string text;
    bool quoted = false;
  };
  std::vector<std::vector<Field>> records;
  std::vector<Field> rec;
  Field f;
  bool in_quotes = false, at_line_start = true, any = false;
  std::size_t i = 0;
  auto end_record = [&] {
    rec.push_back(std::move(f));
    f = {};
    records.push_back(std::move(rec));
    rec.clear();
    at_line_start = true;
    any = false;
  };
  while (i < text.size()) {
    char c = text[i];
    if (at_line_start && c == '#') {
      while (i < text.size() && text[i] != '\n') ++i;
      ++i;
      continue;
    }
    at_line_start = false;
    any = true;
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          f.text += '"';
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        f.text += c;
      }
    } else if (c == '"') {
      in_quotes = true;
      f.quoted = true;
    } else if (c == ',') {
      rec.push_back(std::move(f));
      f = {};
    } else if (c == '\n') {
      end_record();
    } else if (c != '\r') {
      f.text += c;
    }
    ++i;
  }
  if (in_quotes) throw ContractViolation("parse_csv: unterminated quoted field");
  if (any) end_record();

  Table t;
  if (records.empty()) return t;
  for (auto& h : records.front()) t.header.push_back(h.text);
  for (std::size_t r = 1; r < records.size(); ++r) {
    std::vector<Cell> row;
    for (auto& fld : records[r]) row.push_back(infer(fld.text, fld.quoted));
    t.add(std::move(row));
  }
  return t;
}

void emit_rows(const Table& table, Format format, const std::string& path) {
  const std::string body = format == Format::Csv ? to_csv(table) : to_json(table);
  if (path == "-") {
    std::cout << body << std::flush;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << body;
  out.close();
  if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

}  // namespace tvvi
