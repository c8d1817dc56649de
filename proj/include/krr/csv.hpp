#pragma once

#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "krr/errors.hpp"
#include "krr/regression.hpp"

namespace krr {

namespace detail {

inline double parse_cell(const std::string& token, std::size_t line_no) {
  double v = 0.0;
  const char* begin = token.data();
  const char* end = begin + token.size();
  const auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc() || ptr != end || !std::isfinite(v))
    throw InputError("csv: non-numeric cell '" + token + "' on line " +
                     std::to_string(line_no));
  return v;
}

}  // namespace detail

// Expects a header "x0,...,x{n-1},y" followed by numeric rows. Row t of
// the data becomes example t with id t (1-based). Line numbers in errors
// count from the top of the file, header included. Both LF and CRLF
// line endings are accepted.
inline Sample parse_csv_text(const std::string& text) {
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t pos = text.find('\n', start);
    if (pos == std::string::npos) pos = text.size();
    std::string line = text.substr(start, pos - start);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
    start = pos + 1;
  }
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  if (lines.empty()) throw InputError("csv: missing header");

  const auto header = detail::split(lines.front(), ',');
  if (header.size() < 2 || header.back() != "y")
    throw InputError("csv: header must be x0,...,y");
  const std::size_t dim = header.size() - 1;
  for (std::size_t i = 0; i < dim; ++i)
    if (header[i] != "x" + std::to_string(i))
      throw InputError("csv: header must be x0,...,y");

  std::vector<Vector> coords;
  Vector outcomes;
  for (std::size_t row = 1; row < lines.size(); ++row) {
    const std::size_t line_no = row + 1;
    const auto cells = detail::split(lines[row], ',');
    if (cells.size() != dim + 1)
      throw InputError("csv: expected " + std::to_string(dim + 1) +
                       " cells on line " + std::to_string(line_no) + ", got " +
                       std::to_string(cells.size()));
    Vector x(dim);
    for (std::size_t i = 0; i < dim; ++i)
      x[i] = detail::parse_cell(cells[i], line_no);
    coords.push_back(std::move(x));
    outcomes.push_back(detail::parse_cell(cells.back(), line_no));
  }
  return Sample::from_rows(coords, outcomes, dim);
}

inline Sample parse_csv_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("csv: cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_csv_text(buf.str());
}

// Per-step trace as CSV. Floats are written with 17 significant digits,
// which reparses to the identical double. Optional fields are left
// empty when the trace ran without clipping.
inline std::string write_trace_csv(const OnlineTrace& trace) {
  std::string out =
      "t,gamma,d,gamma_clipped,sq_loss,sq_loss_clipped,weighted_loss\n";
  char buf[64];
  const auto put = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out += buf;
  };
  for (std::size_t t = 0; t < trace.steps.size(); ++t) {
    const OnlineStep& s = trace.steps[t];
    out += std::to_string(t + 1);
    out += ',';
    put(s.gamma);
    out += ',';
    put(s.d);
    out += ',';
    if (s.gamma_clipped) put(*s.gamma_clipped);
    out += ',';
    put(s.sq_loss);
    out += ',';
    if (s.sq_loss_clipped) put(*s.sq_loss_clipped);
    out += ',';
    put(s.weighted_loss);
    out += '\n';
  }
  return out;
}

}  // namespace krr
