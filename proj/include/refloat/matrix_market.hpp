#pragma once
//
// Matrix Market coordinate-format reader/writer. Supported kinds: real or
// integer values, general or symmetric storage. Symmetric input is expanded
// to both triangles at parse time.
//

#include <cctype>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "refloat/coo.hpp"

namespace refloat {

struct ParseError : std::runtime_error {
  std::size_t line;
  ParseError(std::size_t line_no, const std::string& what)
      : std::runtime_error("matrix market line " + std::to_string(line_no) +
                           ": " + what),
        line(line_no) {}
};

namespace detail {

inline std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

inline bool next_data_line(std::istream& in, std::string& out, std::size_t& line_no) {
  while (std::getline(in, out)) {
    ++line_no;
    std::size_t i = out.find_first_not_of(" \t\r\n");
    if (i == std::string::npos) continue;  // blank
    if (out[i] == '%') continue;           // comment
    return true;
  }
  return false;
}

}  // namespace detail

inline SparseMatrixCoo parse_matrix_market(std::istream& in) {
  std::size_t line_no = 0;
  std::string line;
  if (!std::getline(in, line))
    throw ParseError(1, "empty input");
  ++line_no;

  std::istringstream header(line);
  std::string banner, object, format, field, symmetry;
  header >> banner >> object >> format >> field >> symmetry;
  if (banner != "%%MatrixMarket")
    throw ParseError(line_no, "missing %%MatrixMarket banner");
  object = detail::lower(object);
  format = detail::lower(format);
  field = detail::lower(field);
  symmetry = detail::lower(symmetry);
  if (object != "matrix" || format != "coordinate")
    throw ParseError(line_no, "only coordinate matrices are supported");
  if (field == "complex" || field == "pattern")
    throw ParseError(line_no, "unsupported field kind: " + field);
  if (field != "real" && field != "integer")
    throw ParseError(line_no, "unknown field kind: " + field);
  if (symmetry != "general" && symmetry != "symmetric")
    throw ParseError(line_no, "unsupported symmetry kind: " + symmetry);
  const bool symmetric = symmetry == "symmetric";

  if (!detail::next_data_line(in, line, line_no))
    throw ParseError(line_no + 1, "missing size line");
  std::uint64_t rows = 0, cols = 0, declared = 0;
  {
    std::istringstream sizes(line);
    if (!(sizes >> rows >> cols >> declared))
      throw ParseError(line_no, "malformed size line");
    if (rows > 0xffffffffULL || cols > 0xffffffffULL)
      throw ParseError(line_no, "matrix dimensions exceed 32-bit indices");
  }

  SparseMatrixCoo m;
  m.n_rows = static_cast<std::uint32_t>(rows);
  m.n_cols = static_cast<std::uint32_t>(cols);
  m.entries.reserve(symmetric ? declared * 2 : declared);

  for (std::uint64_t k = 0; k < declared; ++k) {
    if (!detail::next_data_line(in, line, line_no))
      throw ParseError(line_no + 1, "unexpected end of file; expected " +
                                        std::to_string(declared) + " entries");
    std::istringstream entry(line);
    std::uint64_t r = 0, c = 0;
    double v = 0.0;
    if (!(entry >> r >> c >> v))
      throw ParseError(line_no, "malformed entry");
    if (r < 1 || r > rows || c < 1 || c > cols)
      throw ParseError(line_no, "index out of range");
    if (symmetric && c > r)
      throw ParseError(line_no, "upper-triangle entry in symmetric file");
    if (v == 0.0) continue;  // explicit zeros are dropped
    const auto row = static_cast<std::uint32_t>(r - 1);
    const auto col = static_cast<std::uint32_t>(c - 1);
    m.entries.push_back({row, col, v});
    if (symmetric && row != col) m.entries.push_back({col, row, v});
  }

  try {
    canonicalize(m);
  } catch (const std::invalid_argument& err) {
    throw ParseError(line_no, err.what());
  }
  return m;
}

inline SparseMatrixCoo parse_matrix_market_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open matrix file: " + path);
  return parse_matrix_market(in);
}

// Writes general-kind coordinate output; %.17g values re-parse bit-exactly.
inline void write_matrix_market(std::ostream& out, const SparseMatrixCoo& m) {
  out << "%%MatrixMarket matrix coordinate real general\n";
  out << m.n_rows << ' ' << m.n_cols << ' ' << m.entries.size() << '\n';
  char buf[64];
  for (const auto& e : m.entries) {
    std::snprintf(buf, sizeof buf, "%u %u %.17g\n", e.row + 1, e.col + 1, e.value);
    out << buf;
  }
}

}  // namespace refloat
