#pragma once

// Plain CSV exchange. Floats are written with 17 significant digits so a
// write/read cycle is lossless.

#include <charconv>
#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "sgdfclt/linalg.hpp"
#include "sgdfclt/sgd_engine.hpp"

namespace sgdfclt {

class CsvError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

inline std::string column_header(std::string_view first, std::string_view prefix, std::size_t d) {
  std::string h(first);
  for (std::size_t i = 1; i <= d; ++i) h += "," + std::string(prefix) + std::to_string(i);
  return h;
}

/// k,theta_1,...,theta_d
inline void write_trajectory_csv(std::ostream& out, const Trajectory& tr) {
  out << column_header("k", "theta_", tr.dim()) << '\n';
  for (std::size_t r = 0; r < tr.size(); ++r) {
    out << tr.indices[r];
    for (double v : tr.iterate(r)) out << ',' << format_double(v);
    out << '\n';
  }
}

/// Rows of `values` keyed by `keys`; header `key_name,prefix1,...`.
inline void write_keyed_csv(std::ostream& out, std::string_view key_name, std::string_view prefix,
                            std::span<const double> keys, const Matrix& values) {
  if (keys.size() != values.rows()) throw CsvError("key count does not match row count");
  out << column_header(key_name, prefix, values.cols()) << '\n';
  for (std::size_t r = 0; r < values.rows(); ++r) {
    out << format_double(keys[r]);
    for (double v : values.row(r)) out << ',' << format_double(v);
    out << '\n';
  }
}

/// t,y_1,...,y_d; shared by rescaled samples and diffusion paths.
inline void write_path_csv(std::ostream& out, std::span<const double> grid, const Matrix& values) {
  write_keyed_csv(out, "t", "y_", grid, values);
}

namespace detail {

inline std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    fields.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return fields;
}

template <class T>
T parse_field(std::string_view f, std::size_t line_no) {
  while (!f.empty() && (f.back() == '\r' || f.back() == ' ')) f.remove_suffix(1);
  while (!f.empty() && f.front() == ' ') f.remove_prefix(1);
  T v{};
  const auto res = std::from_chars(f.data(), f.data() + f.size(), v);
  if (res.ec != std::errc{} || res.ptr != f.data() + f.size())
    throw CsvError("line " + std::to_string(line_no) + ": cannot parse field '" + std::string(f) + "'");
  return v;
}

}  // namespace detail

/// Reads a trajectory CSV. The result carries indices and values only; the
/// stride is inferred from the index spacing.
inline Trajectory read_trajectory_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw CsvError("trajectory CSV is empty");
  const auto header = detail::split_fields(line);
  if (header.size() < 2 || header.front() != "k") throw CsvError("trajectory CSV header must start with k,theta_1");
  const std::size_t d = header.size() - 1;
  for (std::size_t i = 1; i <= d; ++i) {
    auto h = header[i];
    while (!h.empty() && h.back() == '\r') h.remove_suffix(1);
    if (h != "theta_" + std::to_string(i)) throw CsvError("unexpected trajectory column '" + std::string(h) + "'");
  }
  Trajectory tr;
  tr.theta0.assign(d, 0.0);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = detail::split_fields(line);
    if (fields.size() != d + 1) throw CsvError("line " + std::to_string(line_no) + ": wrong field count");
    tr.indices.push_back(detail::parse_field<std::uint64_t>(fields[0], line_no));
    for (std::size_t i = 1; i <= d; ++i) tr.values.push_back(detail::parse_field<double>(fields[i], line_no));
  }
  if (tr.indices.empty()) throw CsvError("trajectory CSV has no rows");
  for (std::size_t i = 0; i < d; ++i) tr.theta0[i] = tr.values[i];
  tr.n_steps = tr.indices.back();
  tr.stride = tr.indices.size() > 1 ? tr.indices[1] - tr.indices[0] : 1;
  return tr;
}

inline Trajectory read_trajectory_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CsvError("cannot open " + path);
  return read_trajectory_csv(in);
}

}  // namespace sgdfclt
