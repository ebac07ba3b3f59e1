#pragma once

#include <array>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "qel/diagnostics.hpp"
#include "qel/error.hpp"

namespace qel {

inline constexpr const char* series_header =
    "t,Q,Qdiag,C,sigma,a_lam,b_lam,Q_lam,C_lam,b,mu,rho,Rprof,delta_jet,eps_strain,eta_ext,E,r_star,lambda";

inline constexpr std::size_t series_columns = 19;

namespace detail {

inline std::array<double DiagnosticsRecord::*, series_columns> series_members() {
  using R = DiagnosticsRecord;
  return {&R::t,     &R::Q,   &R::Qdiag, &R::C,     &R::sigma,     &R::a_lam,      &R::b_lam,
          &R::Q_lam, &R::C_lam, &R::b,   &R::mu,    &R::rho,       &R::Rprof,      &R::delta_jet,
          &R::eps_strain, &R::eta_ext, &R::E, &R::r_star, &R::lambda};
}

}  // namespace detail

/// CSV with the fixed header, 17 significant digits, one row per record.
inline void write_series(const std::vector<DiagnosticsRecord>& records, const std::string& path) {
  if (records.empty()) throw std::invalid_argument("no records to write");
  std::ofstream os(path);
  if (!os) throw Error("cannot open series for writing: " + path);
  os << series_header << '\n';
  const auto cols = detail::series_members();
  char buf[40];
  for (const auto& r : records) {
    for (std::size_t k = 0; k < cols.size(); ++k) {
      std::snprintf(buf, sizeof buf, "%.17g", r.*cols[k]);
      if (k) os << ',';
      os << buf;
    }
    os << '\n';
  }
  if (!os) throw Error("write failure on series: " + path);
}

inline std::vector<DiagnosticsRecord> read_series(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open series: " + path);
  std::string line;
  if (!std::getline(is, line) || line != series_header)
    throw FormatError("unexpected series header in " + path);
  const auto cols = detail::series_members();
  std::vector<DiagnosticsRecord> out;
  int row = 1;
  while (std::getline(is, line)) {
    ++row;
    if (line.empty()) continue;
    DiagnosticsRecord r;
    std::size_t k = 0;
    const char* p = line.c_str();
    while (true) {
      if (k == cols.size()) throw FormatError("too many columns on row " + std::to_string(row));
      char* end = nullptr;
      r.*cols[k] = std::strtod(p, &end);
      if (end == p) throw FormatError("bad number on row " + std::to_string(row));
      ++k;
      if (*end == '\0') break;
      if (*end != ',') throw FormatError("bad separator on row " + std::to_string(row));
      p = end + 1;
    }
    if (k != cols.size()) throw FormatError("too few columns on row " + std::to_string(row));
    out.push_back(r);
  }
  return out;
}

}  // namespace qel
