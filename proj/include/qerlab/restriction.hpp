#pragma once

// Restriction of grid eigenfunctions to a curve, L^2(H) functionals, and a
// discrete-Fourier Kohn-Nirenberg quantisation of symbols on the curve:
//
//     (Op(a) u)(s) = sum_k a(s, xi_k / lambda) cap(xi_k / lambda) u_k e^{i xi_k s}.
//
// Open curves are periodised after a C^2 taper that vanishes at both ends;
// the tapered operator is tau Op(a) tau.

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "qerlab/interpolation.hpp"
#include "qerlab/parallel.hpp"
#include "qerlab/smooth.hpp"
#include "qerlab/spectral.hpp"
#include "qerlab/symbols.hpp"

namespace qerlab {

using cplx = std::complex<double>;

struct RestrictParams {
  int n_s = 0;                 // 0: max(64, 8 points per wavelength)
  double taper_fraction = 0.05;
  double eps0 = 0.2;           // frequency cap reach beyond |sigma| = 1
  double alias_threshold = 0.01;
};

struct CurveTrace {
  int j = 0;
  double lambda = 1.0;
  double length = 1.0;
  bool closed = false;
  std::vector<double> s;  // closed: k L / n; open: k L / (n - 1)
  std::vector<cplx> u;
  std::string interpolation = "keys-bicubic";

  int size() const { return static_cast<int>(s.size()); }
};

inline int default_node_count(double lambda, double length) {
  return std::max(64, static_cast<int>(std::ceil(8.0 * lambda * length / (2.0 * std::numbers::pi))));
}

inline std::vector<double> curve_nodes(double length, bool closed, int n) {
  std::vector<double> s(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    s[static_cast<std::size_t>(k)] = closed ? k * length / n : k * length / (n - 1);
  }
  if (!closed) s.back() = length;
  return s;
}

// Nodes within the taper zone of an endpoint lying on the wall are exempt
// from the clearance requirement; every other node needs distance >= 2h.
inline void check_clearance(const Grid& grid, const Hypersurface& h, const std::vector<double>& s,
                            double taper_fraction) {
  const Domain& d = grid.domain();
  const double need = 2.0 * grid.h();
  const double L = h.length();
  const double zone = std::max(taper_fraction * L, need);
  bool anchored[2] = {false, false};
  if (!h.closed()) {
    for (int e = 0; e < 2; ++e) {
      const double sd = d.signed_distance(h.frame(e == 0 ? 0.0 : L).point);
      if (sd > 1e-9) throw GeometryError("curve endpoint lies outside the domain");
      anchored[e] = sd >= -1e-9;
    }
  }
  for (double sk : s) {
    const double sd = d.signed_distance(h.frame(std::min(sk, L)).point);
    if (sd > 1e-9) throw GeometryError("curve leaves the domain at s = " + std::to_string(sk));
    const bool exempt = (anchored[0] && sk < zone) || (anchored[1] && L - sk < zone);
    if (!exempt && sd > -need) {
      throw GeometryError("curve clearance " + std::to_string(-sd) + " below 2h at s = " + std::to_string(sk));
    }
  }
}

inline CurveTrace trace_on_curve(const SpectralBatch& batch, const Hypersurface& h, int j, int n_s = 0,
                                 double taper_fraction = 0.05) {
  if (!std::holds_alternative<Segment>(h.variant())) throw GeometryError("billiard curves must be segments");
  if (j < 0 || j >= batch.size()) throw RangeError("mode index out of range");
  CurveTrace t;
  t.j = j;
  t.lambda = batch.frequencies[static_cast<std::size_t>(j)];
  t.length = h.length();
  t.closed = h.closed();
  const int n = n_s > 0 ? n_s : default_node_count(t.lambda, t.length);
  if (n < 8) throw RangeError("too few curve nodes");
  t.s = curve_nodes(t.length, t.closed, n);
  check_clearance(batch.grid, h, t.s, taper_fraction);
  const Grid& g = batch.grid;
  const auto value = [&](int i, int jj) { return batch.value(j, i, jj); };
  t.u.reserve(t.s.size());
  for (double sk : t.s) {
    const Vec2 x = h.frame(std::min(sk, t.length)).point;
    t.u.emplace_back(keys_bicubic(value, g.nx(), g.ny(), g.x0(), g.y0(), g.h(), g.h(), x.x, x.y), 0.0);
  }
  return t;
}

// Quadrature weights: periodic trapezoid for closed curves, Gregory
// end-corrected trapezoid (third order) for open ones.
inline std::vector<double> quadrature_weights(const CurveTrace& t) {
  const int n = t.size();
  std::vector<double> w(static_cast<std::size_t>(n), 0.0);
  if (t.closed) {
    std::fill(w.begin(), w.end(), t.length / n);
    return w;
  }
  const double ds = t.length / (n - 1);
  std::fill(w.begin(), w.end(), ds);
  if (n >= 6) {
    const double ends[3] = {3.0 / 8.0, 7.0 / 6.0, 23.0 / 24.0};
    for (int k = 0; k < 3; ++k) {
      w[static_cast<std::size_t>(k)] = ends[k] * ds;
      w[static_cast<std::size_t>(n - 1 - k)] = ends[k] * ds;
    }
  } else {
    w.front() = w.back() = 0.5 * ds;
  }
  return w;
}

inline double l2_on_curve(const CurveTrace& t, const std::function<double(double)>& weight = nullptr) {
  const std::vector<double> w = quadrature_weights(t);
  double sum = 0.0;
  for (int k = 0; k < t.size(); ++k) {
    const auto u = static_cast<std::size_t>(k);
    sum += w[u] * (weight ? weight(t.s[u]) : 1.0) * std::norm(t.u[u]);
  }
  return sum;
}

// Inner product <f, g>_{L^2(H)} with the trace quadrature.
inline cplx inner_on_curve(const CurveTrace& f, const CurveTrace& g) {
  const std::vector<double> w = quadrature_weights(f);
  cplx sum = 0.0;
  for (int k = 0; k < f.size(); ++k) {
    const auto u = static_cast<std::size_t>(k);
    sum += w[u] * f.u[u] * std::conj(g.u[u]);
  }
  return sum;
}

// ---------------------------------------------------------------------------
// Quantisation

struct FourierData {
  std::vector<int> wavenumber;
  std::vector<double> xi;   // angular frequencies 2 pi k / L
  std::vector<cplx> coeff;  // u(s) = sum_k coeff_k e^{i xi_k s}
  double period = 1.0;
  int samples = 0;          // periodic sample count
};

// Periodic samples of the (tapered) trace and their discrete Fourier series.
inline FourierData fourier_series(const std::vector<cplx>& v, double period) {
  const int n = static_cast<int>(v.size());
  FourierData f;
  f.period = period;
  f.samples = n;
  const int kmin = -(n / 2);
  for (int q = 0; q < n; ++q) {
    const int k = kmin + q;
    cplx c = 0.0;
    for (int m = 0; m < n; ++m) {
      c += v[static_cast<std::size_t>(m)] *
           std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>((static_cast<long>(k) * m) % n) / n);
    }
    f.wavenumber.push_back(k);
    f.xi.push_back(2.0 * std::numbers::pi * k / period);
    f.coeff.push_back(c / static_cast<double>(n));
  }
  return f;
}

inline double taper_at(const CurveTrace& t, double s, double fraction) {
  return t.closed ? 1.0 : smooth::taper(s, t.length, fraction);
}

struct QuantizedTrace {
  CurveTrace out;
  double mass_above_cap = 0.0;  // fraction of ||tau u||^2 beyond |sigma| = 1 + eps0
  bool aliasing = false;
};

inline QuantizedTrace quantize_on_curve(const Symbol& a, const CurveTrace& t, const RestrictParams& p = {}) {
  if (t.size() < 4) throw RangeError("trace too short to quantise");
  QuantizedTrace q;
  q.out = t;
  const int n = t.size();
  const int periodic = t.closed ? n : n - 1;  // open: last node repeats the (vanishing) first
  std::vector<cplx> w(static_cast<std::size_t>(periodic));
  for (int k = 0; k < periodic; ++k) {
    const auto u = static_cast<std::size_t>(k);
    w[u] = taper_at(t, t.s[u], p.taper_fraction) * t.u[u];
  }
  const FourierData f = fourier_series(w, t.length);
  double total = 0.0;
  double above = 0.0;
  for (std::size_t k = 0; k < f.coeff.size(); ++k) {
    const double e = std::norm(f.coeff[k]);
    total += e;
    if (std::abs(f.xi[k] / t.lambda) > 1.0 + p.eps0) above += e;
  }
  q.mass_above_cap = total > 0.0 ? above / total : 0.0;
  q.aliasing = q.mass_above_cap > p.alias_threshold;

  for (int m = 0; m < n; ++m) {
    const auto um = static_cast<std::size_t>(m);
    const double s = t.s[um];
    const double tau = taper_at(t, s, p.taper_fraction);
    cplx v = 0.0;
    if (a.is_multiplication()) {
      v = a(s, 0.0) * tau * t.u[um];
    } else {
      for (std::size_t k = 0; k < f.coeff.size(); ++k) {
        const double sigma = f.xi[k] / t.lambda;
        const double cap = smooth::frequency_cap(sigma, p.eps0);
        if (cap == 0.0) continue;
        const long turn = (static_cast<long>(f.wavenumber[k]) * (m % periodic)) % periodic;
        const double phase = 2.0 * std::numbers::pi * static_cast<double>(turn) / periodic;
        v += a(s, std::clamp(sigma, -1.0, 1.0)) * cap * f.coeff[k] * std::polar(1.0, phase);
      }
    }
    q.out.u[um] = tau * v;
  }
  return q;
}

// ---------------------------------------------------------------------------
// Matrix elements

struct MatrixElementRecord {
  int j = 0;
  double lambda = 0.0;
  double norm2 = 0.0;      // ||u_j||^2_{L^2(H)}, untapered
  double value = 0.0;      // Re <Op(a) u_j, u_j>
  double imag = 0.0;       // Im part before symmetrisation
  double mass_above_cap = 0.0;
  bool aliasing = false;
  std::string symbol;
  std::string taper;
};

inline std::string taper_id(const Hypersurface& h, const RestrictParams& p) {
  if (h.closed()) return "none";
  std::ostringstream os;
  os << "c2-smoothstep-" << p.taper_fraction;
  return os.str();
}

inline MatrixElementRecord matrix_element(const Symbol& a, const SpectralBatch& batch, const Hypersurface& h, int j,
                                          const RestrictParams& p = {}) {
  const CurveTrace t = trace_on_curve(batch, h, j, p.n_s, p.taper_fraction);
  const QuantizedTrace q = quantize_on_curve(a, t, p);
  const cplx v = inner_on_curve(q.out, t);
  MatrixElementRecord r;
  r.j = j;
  r.lambda = t.lambda;
  r.norm2 = l2_on_curve(t);
  r.value = v.real();
  r.imag = v.imag();
  r.mass_above_cap = q.mass_above_cap;
  r.aliasing = q.aliasing;
  r.symbol = a.id();
  r.taper = taper_id(h, p);
  return r;
}

inline std::vector<MatrixElementRecord> matrix_elements(const Symbol& a, const SpectralBatch& batch,
                                                        const Hypersurface& h, const RestrictParams& p = {},
                                                        unsigned threads = 1) {
  return parallel_map<MatrixElementRecord>(static_cast<std::size_t>(batch.size()), threads, [&](std::size_t j) {
    return matrix_element(a, batch, h, static_cast<int>(j), p);
  });
}

}  // namespace qerlab
