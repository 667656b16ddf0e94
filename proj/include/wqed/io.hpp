#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "wqed/analysis.hpp"
#include "wqed/baseline.hpp"
#include "wqed/views.hpp"

namespace wqed::io {

/// Shortest round-trippable decimal form; output is locale-independent with
/// '.' as the decimal separator.
inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

/// Writes content to path atomically (temp file + rename).
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open for writing: " + tmp.string());
    out << content;
    if (!out) throw std::runtime_error("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

inline void write_one_photon_csv(const std::filesystem::path& path,
                                 const OnePhotonWavefunction& wf) {
  std::string s = "t,re,im\n";
  for (int k = 1; k <= wf.grid.n_bins(); ++k) {
    const complex v = wf.at(k);
    s += format_double(wf.grid.time_at(k)) + "," + format_double(v.real()) + "," +
         format_double(v.imag()) + "\n";
  }
  write_file_atomic(path, s);
}

inline void write_two_photon_csv(const std::filesystem::path& path,
                                 const TwoPhotonWavefunction& wf) {
  std::string s = "t1,t2,re,im\n";
  for (int i = 1; i <= wf.grid.n_bins(); ++i)
    for (int k = 1; k <= wf.grid.n_bins(); ++k) {
      const complex v = wf.at(i, k);
      s += format_double(wf.grid.time_at(i)) + "," + format_double(wf.grid.time_at(k)) + "," +
           format_double(v.real()) + "," + format_double(v.imag()) + "\n";
    }
  write_file_atomic(path, s);
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

inline double parse_double(const std::string& s) {
  std::size_t used = 0;
  const double v = std::stod(s, &used);
  return v;
}

}  // namespace detail

struct SampledOnePhoton {
  std::vector<double> times;
  std::vector<complex> values;
};

inline SampledOnePhoton read_one_photon_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path.string());
  std::string line;
  if (!std::getline(in, line) || detail::split_csv_line(line).size() != 3)
    throw std::runtime_error("bad one-photon CSV header in " + path.string());
  SampledOnePhoton out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cols = detail::split_csv_line(line);
    if (cols.size() != 3) throw std::runtime_error("bad one-photon CSV row in " + path.string());
    out.times.push_back(detail::parse_double(cols[0]));
    out.values.emplace_back(detail::parse_double(cols[1]), detail::parse_double(cols[2]));
  }
  return out;
}

struct SampledTwoPhoton {
  std::vector<double> times;      // grid (deduplicated t1 values, in file order)
  std::vector<complex> values;    // row-major over (t1, t2)
};

inline SampledTwoPhoton read_two_photon_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path.string());
  std::string line;
  if (!std::getline(in, line) || detail::split_csv_line(line).size() != 4)
    throw std::runtime_error("bad two-photon CSV header in " + path.string());
  std::vector<double> t1s;
  std::vector<complex> values;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cols = detail::split_csv_line(line);
    if (cols.size() != 4) throw std::runtime_error("bad two-photon CSV row in " + path.string());
    const double t1 = detail::parse_double(cols[0]);
    if (t1s.empty() || t1 != t1s.back()) t1s.push_back(t1);
    values.emplace_back(detail::parse_double(cols[2]), detail::parse_double(cols[3]));
  }
  if (!t1s.empty() && values.size() != t1s.size() * t1s.size())
    throw std::runtime_error("two-photon CSV is not a full square grid: " + path.string());
  return {std::move(t1s), std::move(values)};
}

inline void write_schmidt_csv(const std::filesystem::path& path,
                              const SchmidtDecomposition& dec) {
  std::string s = "mode_index,lambda_sq\n";
  for (std::size_t i = 0; i < dec.lambdas.size(); ++i)
    s += std::to_string(i + 1) + "," + format_double(dec.lambdas[i] * dec.lambdas[i]) + "\n";
  write_file_atomic(path, s);
}

inline void write_schmidt_mode_csv(const std::filesystem::path& path,
                                   const SchmidtDecomposition& dec, std::size_t mode) {
  const auto& m = dec.modes.at(mode);
  std::string s = "t,re,im\n";
  for (int k = 1; k <= dec.grid.n_bins(); ++k) {
    const complex v = m[static_cast<std::size_t>(k - 1)];
    s += format_double(dec.grid.time_at(k)) + "," + format_double(v.real()) + "," +
         format_double(v.imag()) + "\n";
  }
  write_file_atomic(path, s);
}

inline void write_benchmark_csv(const std::filesystem::path& path,
                                const std::vector<BenchmarkReport>& reports) {
  std::string s = "method,scenario,n_bins,alloc_seconds,solve_seconds,operator_bytes\n";
  for (const BenchmarkReport& r : reports)
    s += r.method + "," + r.scenario + "," + std::to_string(r.n_bins) + "," +
         format_double(r.alloc_seconds) + "," + format_double(r.solve_seconds) + "," +
         std::to_string(r.operator_bytes) + "\n";
  write_file_atomic(path, s);
}

/// Generic numeric table: first column is typically time.
inline void write_table_csv(const std::filesystem::path& path,
                            const std::vector<std::string>& header,
                            const std::vector<std::vector<double>>& columns) {
  if (header.empty() || header.size() != columns.size())
    throw std::invalid_argument("write_table_csv: header/column mismatch");
  const std::size_t rows = columns.front().size();
  for (const auto& c : columns)
    if (c.size() != rows) throw std::invalid_argument("write_table_csv: ragged columns");
  std::string s;
  for (std::size_t i = 0; i < header.size(); ++i) s += (i ? "," : "") + header[i];
  s += "\n";
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < columns.size(); ++c)
      s += (c ? "," : "") + format_double(columns[c][r]);
    s += "\n";
  }
  write_file_atomic(path, s);
}

}  // namespace wqed::io
