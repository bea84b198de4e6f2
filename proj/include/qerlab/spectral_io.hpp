#pragma once

// Binary container for spectral batches.
//
// Layout (little endian):
//   "QERSPEC1"                     8 bytes
//   u64 domain hash, u32 domain kind, f64 a, f64 r
//   f64 h, u32 stencil, u32 m, u32 nx, u32 ny
//   f64[m] lambda^2, f64[m] residual, i32[m] parity, f64[m] parity ratio
//   m grids of nx*ny f64, row-major (y outer), zero off the mask

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <string>
#include <type_traits>
#include <variant>

#include "qerlab/spectral.hpp"

namespace qerlab {

namespace io {

template <class T>
void put(std::ostream& os, T v) {
  static_assert(std::is_trivially_copyable_v<T>);
  unsigned char b[sizeof(T)];
  std::memcpy(b, &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
  os.write(reinterpret_cast<const char*>(b), sizeof(T));
}

template <class T>
T get(std::istream& is) {
  unsigned char b[sizeof(T)];
  if (!is.read(reinterpret_cast<char*>(b), sizeof(T))) throw ConfigError("truncated spectral container");
  if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
  T v;
  std::memcpy(&v, b, sizeof(T));
  return v;
}

}  // namespace io

inline constexpr char kSpectralMagic[8] = {'Q', 'E', 'R', 'S', 'P', 'E', 'C', '1'};

inline void save_batch(const SpectralBatch& b, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("cannot write " + path);
  os.write(kSpectralMagic, 8);
  const Domain& d = b.grid.domain();
  io::put<std::uint64_t>(os, d.hash());
  if (const auto* st = std::get_if<StadiumBilliard>(&d.variant())) {
    io::put<std::uint32_t>(os, 0);
    io::put<double>(os, st->half_length);
    io::put<double>(os, st->cap_radius);
  } else {
    io::put<std::uint32_t>(os, 1);
    io::put<double>(os, 0.0);
    io::put<double>(os, 0.0);
  }
  const int m = b.size();
  io::put<double>(os, b.grid.h());
  io::put<std::uint32_t>(os, b.grid.stencil() == Stencil::Plain ? 0u : 1u);
  io::put<std::uint32_t>(os, static_cast<std::uint32_t>(m));
  io::put<std::uint32_t>(os, static_cast<std::uint32_t>(b.grid.nx()));
  io::put<std::uint32_t>(os, static_cast<std::uint32_t>(b.grid.ny()));
  for (double v : b.eigenvalues) io::put<double>(os, v);
  for (double v : b.residuals) io::put<double>(os, v);
  for (int v : b.parity) io::put<std::int32_t>(os, v);
  for (double v : b.parity_ratio) io::put<double>(os, v);
  for (int j = 0; j < m; ++j) {
    for (int y = 0; y < b.grid.ny(); ++y) {
      for (int x = 0; x < b.grid.nx(); ++x) io::put<double>(os, b.value(j, x, y));
    }
  }
  if (!os) throw ConfigError("write failed for " + path);
}

inline SpectralBatch load_batch(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DependencyError("spectral batch " + path + " not found; run the spectrum subcommand first");
  char magic[8];
  if (!is.read(magic, 8) || std::memcmp(magic, kSpectralMagic, 8) != 0) throw ConfigError(path + " is not a spectral batch");
  const auto hash = io::get<std::uint64_t>(is);
  const auto kind = io::get<std::uint32_t>(is);
  const double a = io::get<double>(is);
  const double r = io::get<double>(is);
  const Domain domain = kind == 0 ? Domain::stadium(a, r) : Domain::unit_square();
  if (domain.hash() != hash) throw ConfigError("domain hash mismatch in " + path);
  const double h = io::get<double>(is);
  const Stencil stencil = io::get<std::uint32_t>(is) == 0 ? Stencil::Plain : Stencil::Corrected;
  const int m = static_cast<int>(io::get<std::uint32_t>(is));
  const int nx = static_cast<int>(io::get<std::uint32_t>(is));
  const int ny = static_cast<int>(io::get<std::uint32_t>(is));
  Grid grid = Grid::build(domain, h, stencil);
  if (grid.nx() != nx || grid.ny() != ny) throw ConfigError("grid shape mismatch in " + path);
  SpectralBatch b{std::move(grid), {}, {}, Eigen::MatrixXd(0, 0), {}, {}, {}};
  for (int j = 0; j < m; ++j) b.eigenvalues.push_back(io::get<double>(is));
  for (int j = 0; j < m; ++j) b.residuals.push_back(io::get<double>(is));
  for (int j = 0; j < m; ++j) b.parity.push_back(io::get<std::int32_t>(is));
  for (int j = 0; j < m; ++j) b.parity_ratio.push_back(io::get<double>(is));
  for (double v : b.eigenvalues) b.frequencies.push_back(std::sqrt(v));
  b.phi.resize(b.grid.size(), m);
  for (int j = 0; j < m; ++j) {
    for (int y = 0; y < ny; ++y) {
      for (int x = 0; x < nx; ++x) {
        const double v = io::get<double>(is);
        const int k = b.grid.index(x, y);
        if (k >= 0) b.phi(k, j) = v;
      }
    }
  }
  return b;
}

inline void write_eigenvalue_csv(const SpectralBatch& b, std::ostream& os) {
  os << "j,lambda_sq[1/length^2],lambda[1/length],residual[rel],parity\n";
  os << std::setprecision(17);
  for (int j = 0; j < b.size(); ++j) {
    const auto u = static_cast<std::size_t>(j);
    os << j + 1 << ',' << b.eigenvalues[u] << ',' << b.frequencies[u] << ',' << b.residuals[u] << ','
       << b.parity[u] << '\n';
  }
}

}  // namespace qerlab
