#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "qel/error.hpp"
#include "qel/field.hpp"
#include "qel/frame.hpp"
#include "qel/initial_data.hpp"

namespace qel {

/// Snapshot persisted in the "QEL1" binary layout:
///   magic "QEL1" | u32 n_r | u32 n_z | u32 n_params | f64 params[n_params]
///   | u32 n_fields | f64 G[n_r*n_z] | f64 Gamma[n_r*n_z]
/// Params: r_min r_max z_min z_max t r_star lambda r0 lambda0 a0
/// Gamma_star0 A_b epsilon0 kappa. Arrays are row-major in (i, j) with j
/// fastest; every number is little-endian.
struct Checkpoint {
  double t = 0.0;
  PacketFrame frame;
  DataParameters params;
  ScalarField G, Gamma;
};

namespace detail {

inline constexpr std::array<char, 4> checkpoint_magic{'Q', 'E', 'L', '1'};
inline constexpr std::uint32_t checkpoint_params = 14;

template <class T>
T to_little(T v) {
  if constexpr (std::endian::native == std::endian::big) {
    unsigned char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    for (std::size_t k = 0; k < sizeof(T) / 2; ++k) std::swap(b[k], b[sizeof(T) - 1 - k]);
    std::memcpy(&v, b, sizeof(T));
  }
  return v;
}

template <class T>
void put(std::ostream& os, T v) {
  v = to_little(v);
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& is) {
  T v;
  if (!is.read(reinterpret_cast<char*>(&v), sizeof(T)))
    throw FormatError("truncated checkpoint");
  return to_little(v);
}

}  // namespace detail

inline void write_checkpoint(const Checkpoint& c, const std::string& path) {
  const MeridionalGrid& g = c.G.grid();
  if (!(c.Gamma.grid() == g)) throw std::invalid_argument("checkpoint fields on different grids");
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open checkpoint for writing: " + path);
  os.write(detail::checkpoint_magic.data(), 4);
  detail::put<std::uint32_t>(os, static_cast<std::uint32_t>(g.n_r()));
  detail::put<std::uint32_t>(os, static_cast<std::uint32_t>(g.n_z()));
  detail::put<std::uint32_t>(os, detail::checkpoint_params);
  const DataParameters& p = c.params;
  for (double v : {g.r_min(), g.r_max(), g.z_min(), g.z_max(), c.t, c.frame.r_star,
                   c.frame.lambda, p.r0, p.lambda0, p.a0, p.Gamma_star0, p.A_b, p.epsilon0,
                   p.kappa})
    detail::put<double>(os, v);
  detail::put<std::uint32_t>(os, 2);
  for (const ScalarField* f : {&c.G, &c.Gamma})
    for (double v : f->values()) detail::put<double>(os, v);
  if (!os) throw Error("write failure on checkpoint: " + path);
}

inline Checkpoint read_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open checkpoint: " + path);
  std::array<char, 4> magic{};
  if (!is.read(magic.data(), 4) || magic != detail::checkpoint_magic)
    throw FormatError("not a QEL1 checkpoint: " + path);
  const auto nr = detail::get<std::uint32_t>(is);
  const auto nz = detail::get<std::uint32_t>(is);
  const auto np = detail::get<std::uint32_t>(is);
  if (np < detail::checkpoint_params) throw FormatError("checkpoint parameter block too short");
  if (nr < 8 || nz < 8 || nr > (1u << 16) || nz > (1u << 16))
    throw FormatError("implausible checkpoint grid dimensions");
  std::vector<double> prm(np);
  for (auto& v : prm) v = detail::get<double>(is);
  const auto nf = detail::get<std::uint32_t>(is);
  if (nf != 2) throw FormatError("checkpoint must hold exactly two fields");

  Checkpoint c;
  GridPtr grid;
  try {
    grid = make_grid(prm[0], prm[1], prm[2], prm[3], static_cast<int>(nr), static_cast<int>(nz));
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("bad checkpoint grid: ") + e.what());
  }
  c.t = prm[4];
  c.frame = PacketFrame{prm[5], prm[6], prm[4]};
  c.params = DataParameters{prm[7], prm[8], prm[9], prm[10], prm[11], prm[12], prm[13]};
  for (ScalarField* f : {&c.G, &c.Gamma}) {
    std::vector<double> vals(grid->size());
    for (auto& v : vals) v = detail::get<double>(is);
    *f = ScalarField(grid, std::move(vals));
  }
  return c;
}

}  // namespace qel
