#pragma once

// Upper half-plane model of the hyperbolic plane.
//
// The unit tangent bundle is identified with PSL(2,R): a matrix g stands
// for the unit vector g'(i)*(up) at g(i).  In that picture the geodesic
// flow is right multiplication by diag(e^{t/2}, e^{-t/2}), so positions and
// directions along a geodesic have closed forms:
//
//     z(t) = g(e^t i),     theta(t) = pi/2 - 2 arg(c e^t i + d).
//
// Directions are stored as Euclidean angles; since the metric is conformal
// these are also angles in the metric-orthonormal frame.
//
// The modular surface uses the standard fundamental domain
// F = { |x| <= 1/2, |z| >= 1 } with side pairings T^{+-1} (vertical sides)
// and S (unit arc).

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <optional>
#include <utility>

namespace qerlab::hyp {

using cplx = std::complex<double>;

struct SL2 {
  double a = 1.0;
  double b = 0.0;
  double c = 0.0;
  double d = 1.0;

  constexpr SL2 operator*(const SL2& o) const {
    return {a * o.a + b * o.c, a * o.b + b * o.d, c * o.a + d * o.c, c * o.b + d * o.d};
  }
  constexpr SL2 inverse() const { return {d, -b, -c, a}; }  // for det = 1
  constexpr double det() const { return a * d - b * c; }
  constexpr double trace() const { return a + d; }

  cplx apply(cplx z) const { return (a * z + b) / (c * z + d); }

  // Action on a boundary point given projectively as (p : q), q = 0 for infinity.
  std::pair<double, double> apply_boundary(double p, double q) const { return {a * p + b * q, c * p + d * q}; }

  bool approx_equal_projective(const SL2& o, double tol) const {
    const auto diff = [&](double s) {
      return std::max({std::abs(a - s * o.a), std::abs(b - s * o.b), std::abs(c - s * o.c), std::abs(d - s * o.d)});
    };
    return std::min(diff(1.0), diff(-1.0)) <= tol;
  }
};

inline constexpr SL2 identity() { return {}; }
inline constexpr SL2 translation(double x) { return {1.0, x, 0.0, 1.0}; }
inline SL2 dilation(double y) {
  const double r = std::sqrt(y);
  return {r, 0.0, 0.0, 1.0 / r};
}
inline SL2 rotation(double psi) {
  const double c = std::cos(psi);
  const double s = std::sin(psi);
  return {c, s, -s, c};
}
inline SL2 geodesic_step(double t) {
  const double e = std::exp(0.5 * t);
  return {e, 0.0, 0.0, 1.0 / e};
}

// Modular generators.
inline constexpr SL2 modular_S() { return {0.0, -1.0, 1.0, 0.0}; }
inline constexpr SL2 modular_T() { return {1.0, 1.0, 0.0, 1.0}; }

inline double wrap_angle(double theta) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  theta = std::fmod(theta, two_pi);
  if (theta <= -std::numbers::pi) theta += two_pi;
  if (theta > std::numbers::pi) theta -= two_pi;
  return theta;
}

// Matrix whose geodesic starts at z with direction angle theta.
inline SL2 frame_matrix(cplx z, double theta) {
  const double psi = 0.5 * (theta - 0.5 * std::numbers::pi);
  return translation(z.real()) * dilation(z.imag()) * rotation(psi);
}

struct UnitTangent {
  cplx z;
  double theta;
};

// Point and direction at time t along the geodesic represented by g.
inline UnitTangent along(const SL2& g, double t) {
  const double e = std::exp(t);
  const cplx w{0.0, e};
  const cplx den = g.c * w + g.d;
  const cplx z = (g.a * w + g.b) / den;
  const double theta = wrap_angle(0.5 * std::numbers::pi - 2.0 * std::arg(den));
  return {z, theta};
}

// Stable hyperbolic distance 2 asinh(|z-w| / (2 sqrt(Im z Im w))).
inline double distance(cplx z, cplx w) {
  return 2.0 * std::asinh(std::abs(z - w) / (2.0 * std::sqrt(z.imag() * w.imag())));
}

// Argument of the derivative of the Moebius map g at z (rotation of tangent vectors).
inline double derivative_angle(const SL2& g, cplx z) { return -2.0 * std::arg(g.c * z + g.d); }

// Cayley map to the Poincare disk centered at i and its derivative angle.
inline cplx cayley(cplx w) { return (w - cplx{0.0, 1.0}) / (w + cplx{0.0, 1.0}); }
inline double cayley_derivative_angle(cplx w) {
  const cplx den = w + cplx{0.0, 1.0};
  return std::arg(cplx{0.0, 2.0} / (den * den));
}

// ---------------------------------------------------------------------------
// Modular fundamental domain.

enum class FdSide { None, Left, Right, Arc };

inline constexpr double kFdCornerTolerance = 1e-8;

inline bool in_fundamental_domain(cplx z, double tol = 1e-12) {
  return std::abs(z.real()) <= 0.5 + tol && std::norm(z) >= 1.0 - tol;
}

struct Reduction {
  cplx z;
  SL2 gamma;  // gamma(z_in) = z
};

// Repeated T^{+-1} / S until z lands in F.
inline Reduction reduce_to_fundamental_domain(cplx z, int max_steps = 10000) {
  SL2 gamma = identity();
  for (int i = 0; i < max_steps; ++i) {
    const double n = std::floor(z.real() + 0.5);
    if (n != 0.0) {
      z -= n;
      gamma = translation(-n) * gamma;
    }
    if (std::norm(z) < 1.0 - 1e-15) {
      z = -1.0 / z;
      gamma = modular_S() * gamma;
    } else {
      break;
    }
  }
  return {z, gamma};
}

struct FdExit {
  double t = std::numeric_limits<double>::infinity();
  FdSide side = FdSide::None;
  bool corner = false;
};

// First exit of the geodesic g(e^t i), t >= 0, through a side of F.  A
// geodesic meets each side (itself part of a geodesic) at most once, so per
// side the crossing parameter u = e^{2t} solves a linear equation:
//   Re z = x0 :  (ac - x0 c^2) u = x0 d^2 - bd
//   |z|^2 = 1 :  (a^2 - c^2) u = d^2 - b^2
// A crossing is an exit only if it leaves F, i.e. if the forward endpoint a/c
// lies beyond that side.  Crossings up to 1e-12 in the past are accepted so
// that a point sitting on a side and moving outwards exits immediately.
inline FdExit fundamental_domain_exit(const SL2& g, FdSide entered = FdSide::None) {
  FdExit best;
  const auto consider = [&](FdSide side, bool outward, double num, double den) {
    if (side == entered || !outward || den == 0.0) return;
    const double u = num / den;
    if (!(u >= 1.0 - 1e-12)) return;
    const double t = 0.5 * std::log(std::max(u, 1.0));
    if (t < best.t) {
      best.t = t;
      best.side = side;
    }
  };
  const double ac = g.a * g.c;
  const double c2 = g.c * g.c;
  const double d2 = g.d * g.d;
  const double bd = g.b * g.d;
  const double forward = g.c != 0.0 ? g.a / g.c : std::numeric_limits<double>::infinity();
  const bool finite = g.c != 0.0;
  consider(FdSide::Right, finite && forward > 0.5, 0.5 * d2 - bd, ac - 0.5 * c2);
  consider(FdSide::Left, finite && forward < -0.5, -0.5 * d2 - bd, ac + 0.5 * c2);
  consider(FdSide::Arc, finite && std::abs(forward) < 1.0, d2 - g.b * g.b, g.a * g.a - c2);
  if (best.side != FdSide::None) {
    const cplx z = along(g, best.t).z;
    const cplx corner_r{0.5, std::sqrt(3.0) / 2.0};
    const cplx corner_l{-0.5, std::sqrt(3.0) / 2.0};
    if (std::abs(z - corner_r) < kFdCornerTolerance || std::abs(z - corner_l) < kFdCornerTolerance) best.corner = true;
  }
  return best;
}

// Side pairing applied when leaving F through `side`, and the side of entry.
inline std::pair<SL2, FdSide> side_pairing(FdSide side) {
  switch (side) {
    case FdSide::Right:
      return {translation(-1.0), FdSide::Left};
    case FdSide::Left:
      return {translation(1.0), FdSide::Right};
    case FdSide::Arc:
      return {modular_S(), FdSide::Arc};
    case FdSide::None:
      break;
  }
  return {identity(), FdSide::None};
}

// Apply the pairing to an exit point and snap it onto the entry side.
inline UnitTangent cross_side(const UnitTangent& exit, FdSide side) {
  const auto [gamma, entry] = side_pairing(side);
  const cplx z = gamma.apply(exit.z);
  const double theta = wrap_angle(exit.theta + derivative_angle(gamma, exit.z));
  cplx snapped = z;
  if (entry == FdSide::Left) snapped = {-0.5, z.imag()};
  if (entry == FdSide::Right) snapped = {0.5, z.imag()};
  if (entry == FdSide::Arc) snapped = z / std::abs(z);
  return {snapped, theta};
}

// Endpoints of the oriented geodesic g(e^t i): backward g(0), forward g(inf),
// as projective pairs.
struct GeodesicEnds {
  std::pair<double, double> backward;
  std::pair<double, double> forward;
};

inline GeodesicEnds ends(const SL2& g) { return {{g.b, g.d}, {g.a, g.c}}; }

// Time t at which the geodesic g(e^t i) crosses the full geodesic with the
// given endpoints, if it does.  After moving g to the identity the trajectory
// is the imaginary axis and the crossing height is sqrt(-alpha beta).
inline std::optional<double> geodesic_crossing_time(const SL2& g, const GeodesicEnds& other) {
  const SL2 ginv = g.inverse();
  const auto [p1, q1] = ginv.apply_boundary(other.backward.first, other.backward.second);
  const auto [p2, q2] = ginv.apply_boundary(other.forward.first, other.forward.second);
  if (q1 == 0.0 || q2 == 0.0) return std::nullopt;
  const double prod = (p1 / q1) * (p2 / q2);
  if (!(prod < 0.0)) return std::nullopt;
  return 0.5 * std::log(-prod);
}

// Hyperbolic element geometry.
inline double translation_length(const SL2& m) {
  return 2.0 * std::acosh(std::abs(m.trace()) / 2.0);
}

// Matrix g with g(e^t i) tracing the axis of the hyperbolic element m from its
// repelling to its attracting fixed point, g(i) the point of the axis closest to
// the Euclidean top of the semicircle.
inline SL2 axis_frame(const SL2& m) {
  const double tr = m.trace();
  const double disc = std::sqrt(tr * tr - 4.0);
  // Fixed points (a - d +- sqrt(tr^2-4)) / (2c); with trace sign normalised to
  // positive the attracting one carries the + sign.
  const double sgn = tr >= 0.0 ? 1.0 : -1.0;
  const double a = sgn * m.a;
  const double d = sgn * m.d;
  const double c = sgn * m.c;
  const double attracting = (a - d + disc) / (2.0 * c);
  const double repelling = (a - d - disc) / (2.0 * c);
  // g = [[alpha k, r m], [k, m]] has g(inf) = alpha, g(0) = r, det = k m (alpha - r).
  const double k = 1.0 / std::sqrt(std::abs(attracting - repelling));
  const double m_ = attracting > repelling ? k : -k;
  return {attracting * k, repelling * m_, k, m_};
}

}  // namespace qerlab::hyp
