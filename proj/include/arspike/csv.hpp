#ifndef ARSPIKE_CSV_HPP
#define ARSPIKE_CSV_HPP

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "arspike/common.hpp"
#include "arspike/signal_model.hpp"

namespace arspike {

/// Round-trip-exact formatting for stored numerics.
inline std::string format_full(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Shorter form for derived statistics (frequencies, intervals).
inline std::string format_stat(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open for writing: " + path);
  out << text;
  out.flush();
  if (!out) throw Error("write failed: " + path);
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open for reading: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

namespace detail {

inline std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= line.size(); ++i) {
    if (i == line.size() || line[i] == sep) {
      out.push_back(line.substr(start, i - start));
      start = i + 1;
    }
  }
  return out;
}

inline std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::string cur;
  for (char ch : text) {
    if (ch == '\n') {
      if (!cur.empty() && cur.back() == '\r') cur.pop_back();
      lines.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  if (!cur.empty()) {
    if (cur.back() == '\r') cur.pop_back();
    lines.push_back(cur);
  }
  return lines;
}

inline double parse_double(const std::string& tok, const std::string& where) {
  char* end = nullptr;
  const double v = std::strtod(tok.c_str(), &end);
  if (end == tok.c_str() || (end && *end != '\0'))
    throw Error("bad numeric field '" + tok + "' in " + where);
  return v;
}

inline long long parse_int(const std::string& tok, const std::string& where) {
  char* end = nullptr;
  const long long v = std::strtoll(tok.c_str(), &end, 10);
  if (end == tok.c_str() || (end && *end != '\0'))
    throw Error("bad integer field '" + tok + "' in " + where);
  return v;
}

}  // namespace detail

/// Matrix plus the provenance carried in the one-line header.
struct CsvMatrix {
  Matrix values;
  std::string kind;
  std::uint64_t seed = 0;
};

inline std::string matrix_csv_text(const Matrix& M, const std::string& kind,
                                   std::uint64_t seed) {
  std::string out = std::to_string(M.rows()) + "," + std::to_string(M.cols()) +
                    "," + kind + "," + std::to_string(seed) + "\n";
  for (Index i = 0; i < M.rows(); ++i) {
    for (Index j = 0; j < M.cols(); ++j) {
      if (j > 0) out += ',';
      out += format_full(M(i, j));
    }
    out += '\n';
  }
  return out;
}

inline void write_matrix_csv(const std::string& path, const Matrix& M,
                             const std::string& kind, std::uint64_t seed) {
  write_text_file(path, matrix_csv_text(M, kind, seed));
}

inline void write_vector_csv(const std::string& path, const Vector& v,
                             const std::string& kind, std::uint64_t seed) {
  write_matrix_csv(path, Matrix(v), kind, seed);
}

inline CsvMatrix read_matrix_csv(const std::string& path) {
  const auto lines = detail::split_lines(read_text_file(path));
  if (lines.empty()) throw Error("empty matrix file: " + path);
  const auto head = detail::split(lines[0], ',');
  if (head.size() != 4)
    throw Error("expected header rows,cols,kind,seed in " + path);
  const Index rows = static_cast<Index>(detail::parse_int(head[0], path));
  const Index cols = static_cast<Index>(detail::parse_int(head[1], path));
  if (rows < 0 || cols < 0) throw Error("negative dimensions in " + path);
  if (static_cast<Index>(lines.size()) < rows + 1)
    throw Error("matrix data truncated in " + path);
  CsvMatrix out;
  out.kind = head[2];
  out.seed = static_cast<std::uint64_t>(detail::parse_int(head[3], path));
  out.values.resize(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    const auto toks = detail::split(lines[static_cast<std::size_t>(i) + 1], ',');
    if (static_cast<Index>(toks.size()) != cols)
      throw Error("row " + std::to_string(i) + " has " +
                  std::to_string(toks.size()) + " fields, expected " +
                  std::to_string(cols) + " in " + path);
    for (Index j = 0; j < cols; ++j)
      out.values(i, j) = detail::parse_double(toks[static_cast<std::size_t>(j)], path);
  }
  return out;
}

inline Vector read_vector_csv(const std::string& path) {
  const CsvMatrix m = read_matrix_csv(path);
  if (m.values.cols() == 1) return m.values.col(0);
  if (m.values.rows() == 1) return m.values.row(0).transpose();
  throw Error("expected a single row or column in " + path);
}

/// Sparse record: header then one index,value line per spike.
inline std::string spikes_csv_text(const SpikeTrain& u) {
  std::string out = "index,value\n";
  for (Index i : u.support)
    out += std::to_string(i) + "," + format_full(u.values[i]) + "\n";
  return out;
}

inline void write_spikes_csv(const std::string& path, const SpikeTrain& u) {
  write_text_file(path, spikes_csv_text(u));
}

inline std::string table_csv_text(
    const std::vector<std::string>& header,
    const std::vector<std::vector<std::string>>& rows) {
  std::string out;
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (j > 0) out += ',';
    out += header[j];
  }
  out += '\n';
  for (const auto& row : rows) {
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (j > 0) out += ',';
      out += row[j];
    }
    out += '\n';
  }
  return out;
}

/// Canonical form for comparing run outputs: wall-clock columns are the
/// one part of a record that honestly cannot reproduce, so they are
/// dropped by header name before any byte comparison.
inline std::string strip_runtime_columns(const std::string& csv_text) {
  const auto lines = detail::split_lines(csv_text);
  if (lines.empty()) return csv_text;
  const auto header = detail::split(lines[0], ',');
  std::vector<bool> keep(header.size(), true);
  bool any_drop = false;
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (header[j].find("runtime") != std::string::npos) {
      keep[j] = false;
      any_drop = true;
    }
  }
  if (!any_drop) return csv_text;
  std::string out;
  for (const auto& line : lines) {
    const auto toks = detail::split(line, ',');
    bool first = true;
    for (std::size_t j = 0; j < toks.size(); ++j) {
      if (j < keep.size() && !keep[j]) continue;
      if (!first) out += ',';
      out += toks[j];
      first = false;
    }
    out += '\n';
  }
  return out;
}

}  // namespace arspike

#endif  // ARSPIKE_CSV_HPP
