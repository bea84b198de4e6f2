#pragma once

// Ambient domains, hypersurfaces H with Fermi frames, and the fibre maps
// between S*_H M and the coball bundle B*H:
//
//   lift_xi      (s, sigma, side) -> sigma * tangent + side * sqrt(1 - sigma^2) * nu_+
//   project_piH  xi               -> <xi, tangent>
//   reflect_rH   xi               -> xi - 2 <xi, nu_+> nu_+
//
// Planar billiards use Euclidean coordinates.  Hyperbolic models use the
// upper half-plane; a direction is stored as a unit vector in the
// metric-orthonormal frame, i.e. its Euclidean angle.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "qerlab/errors.hpp"
#include "qerlab/hyperbolic.hpp"
#include "qerlab/vec2.hpp"

namespace qerlab {

enum class Model { Euclidean, Hyperbolic };

// Decides "foot on H".
inline constexpr double kOnCurveTolerance = 1e-9;

// ---------------------------------------------------------------------------
// Domains

struct StadiumBilliard {
  double half_length = 1.0;  // a
  double cap_radius = 1.0;   // r
};

struct UnitSquareBilliard {};

enum class FuchsianGroup { Modular, FreePlane };

struct HyperbolicQuotient {
  FuchsianGroup group = FuchsianGroup::Modular;
};

struct BoundingBox {
  double xmin, xmax, ymin, ymax;
};

class Domain {
 public:
  using Variant = std::variant<StadiumBilliard, UnitSquareBilliard, HyperbolicQuotient>;

  explicit Domain(Variant v) : v_(v) {
    if (const auto* st = std::get_if<StadiumBilliard>(&v_)) {
      if (!(st->half_length > 0.0 && st->cap_radius > 0.0))
        throw DomainError("stadium requires half_length > 0 and cap_radius > 0");
    }
  }

  static Domain stadium(double a, double r) { return Domain{StadiumBilliard{a, r}}; }
  static Domain unit_square() { return Domain{UnitSquareBilliard{}}; }
  static Domain modular_surface() { return Domain{HyperbolicQuotient{FuchsianGroup::Modular}}; }
  static Domain hyperbolic_plane() { return Domain{HyperbolicQuotient{FuchsianGroup::FreePlane}}; }

  const Variant& variant() const { return v_; }
  Model model() const { return std::holds_alternative<HyperbolicQuotient>(v_) ? Model::Hyperbolic : Model::Euclidean; }
  bool is_billiard() const { return model() == Model::Euclidean; }
  bool is_modular() const {
    const auto* h = std::get_if<HyperbolicQuotient>(&v_);
    return h != nullptr && h->group == FuchsianGroup::Modular;
  }
  bool is_free_plane() const {
    const auto* h = std::get_if<HyperbolicQuotient>(&v_);
    return h != nullptr && h->group == FuchsianGroup::FreePlane;
  }

  double area() const {
    if (const auto* st = std::get_if<StadiumBilliard>(&v_)) {
      return 4.0 * st->half_length * st->cap_radius + std::numbers::pi * st->cap_radius * st->cap_radius;
    }
    if (std::holds_alternative<UnitSquareBilliard>(v_)) return 1.0;
    if (is_modular()) return std::numbers::pi / 3.0;
    return std::numeric_limits<double>::infinity();
  }

  // vol(S*M) = 2 pi area in dimension 2.
  double liouville_volume() const { return 2.0 * std::numbers::pi * area(); }

  double perimeter() const {
    if (const auto* st = std::get_if<StadiumBilliard>(&v_)) {
      return 4.0 * st->half_length + 2.0 * std::numbers::pi * st->cap_radius;
    }
    if (std::holds_alternative<UnitSquareBilliard>(v_)) return 4.0;
    throw DomainError("perimeter is only defined for billiard domains");
  }

  // Length scale used to make phase-space distances dimensionless.
  double diameter() const {
    if (const auto* st = std::get_if<StadiumBilliard>(&v_)) return 2.0 * (st->half_length + st->cap_radius);
    if (std::holds_alternative<UnitSquareBilliard>(v_)) return std::sqrt(2.0);
    return 1.0;
  }

  // Smallest curvature radius of the boundary (sets bracketing and collar scales).
  double curvature_scale() const {
    if (const auto* st = std::get_if<StadiumBilliard>(&v_)) return st->cap_radius;
    return 1.0;
  }

  BoundingBox bounding_box() const {
    if (const auto* st = std::get_if<StadiumBilliard>(&v_)) {
      const double a = st->half_length;
      const double r = st->cap_radius;
      return {-(a + r), a + r, -r, r};
    }
    if (std::holds_alternative<UnitSquareBilliard>(v_)) return {0.0, 1.0, 0.0, 1.0};
    throw DomainError("bounding box is only defined for billiard domains");
  }

  // Signed distance to the billiard boundary, negative inside.
  double signed_distance(Vec2 p) const {
    if (const auto* st = std::get_if<StadiumBilliard>(&v_)) {
      const double a = st->half_length;
      const double r = st->cap_radius;
      const double qx = std::max(std::abs(p.x) - a, 0.0);
      return std::hypot(qx, p.y) - r;
    }
    if (std::holds_alternative<UnitSquareBilliard>(v_)) {
      const double dx = std::max(-p.x, p.x - 1.0);
      const double dy = std::max(-p.y, p.y - 1.0);
      if (dx <= 0.0 && dy <= 0.0) return std::max(dx, dy);
      return std::hypot(std::max(dx, 0.0), std::max(dy, 0.0));
    }
    throw DomainError("signed distance is only defined for billiard domains");
  }

  bool contains(Vec2 p) const {
    if (is_billiard()) return signed_distance(p) < 0.0;
    if (is_modular()) return p.y > 0.0 && hyp::in_fundamental_domain(p.as_complex(), 1e-9);
    return p.y > 0.0;
  }

  // Mirror symmetry x -> -x of the billiard about x = x_axis, if any.
  std::optional<double> mirror_axis_x() const {
    if (std::holds_alternative<StadiumBilliard>(v_)) return 0.0;
    if (std::holds_alternative<UnitSquareBilliard>(v_)) return 0.5;
    return std::nullopt;
  }

  std::string describe() const {
    std::ostringstream os;
    os.precision(17);
    if (const auto* st = std::get_if<StadiumBilliard>(&v_)) {
      os << "stadium(a=" << st->half_length << ",r=" << st->cap_radius << ")";
    } else if (std::holds_alternative<UnitSquareBilliard>(v_)) {
      os << "unit_square";
    } else if (is_modular()) {
      os << "modular_surface";
    } else {
      os << "hyperbolic_plane";
    }
    return os.str();
  }

  // FNV-1a of the description; stable across platforms.
  std::uint64_t hash() const {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char ch : describe()) {
      h ^= ch;
      h *= 1099511628211ULL;
    }
    return h;
  }

 private:
  Variant v_;
};

// ---------------------------------------------------------------------------
// Phase points and frames

// A phase point produced by the flow remembers the point it was flowed from
// and the elapsed time, so that flow(flow(p, t), u) re-traces the same orbit
// as flow(p, t + u).
struct OrbitAnchor {
  Vec2 x;
  Vec2 xi;
  double time = 0.0;
};

struct PhasePoint {
  Vec2 x;    // position (Euclidean coordinates or upper half-plane z)
  Vec2 xi;   // unit covector in the metric-orthonormal frame
  Model model = Model::Euclidean;
  std::optional<OrbitAnchor> anchor{};

  // reverse o G^t = G^{-t} o reverse
  PhasePoint reversed() const {
    PhasePoint r{x, -xi, model, std::nullopt};
    if (anchor) r.anchor = OrbitAnchor{anchor->x, -anchor->xi, -anchor->time};
    return r;
  }
  PhasePoint detached() const { return {x, xi, model, std::nullopt}; }
};

struct FermiFrame {
  double s = 0.0;
  Vec2 point;
  Vec2 tangent;
  Vec2 normal;  // nu_+ = right_normal(tangent)
};

enum class Side : int { Minus = -1, Plus = 1 };

inline Side opposite(Side s) { return s == Side::Plus ? Side::Minus : Side::Plus; }
inline double sign_of(Side s) { return static_cast<double>(static_cast<int>(s)); }

// Fermi coordinates of a phase point near H: foot arclength, signed normal
// distance, and the dual fibre coordinates (sigma, eta_n).
struct FermiCoordinates {
  double s;
  double y_n;
  double sigma;
  double eta_n;
};

// ---------------------------------------------------------------------------
// Hypersurfaces

struct Segment {
  Vec2 p0;
  Vec2 p1;
};

struct GeodesicCircle {
  hyp::cplx center;
  double radius;
  double injectivity_radius;
};

struct ClosedHorocycle {
  double height;
};

struct ClosedGeodesicCurve {
  hyp::SL2 element;  // hyperbolic element whose axis projects to H
};

// One passage of a closed geodesic through the fundamental domain: the
// matrix g (g(i) = entry point), the arclength at entry and the length.
struct GeodesicPiece {
  hyp::SL2 g;
  double s_begin;
  double length;
};

class Hypersurface {
 public:
  using Variant = std::variant<Segment, GeodesicCircle, ClosedHorocycle, ClosedGeodesicCurve>;

  static Hypersurface segment(Vec2 p0, Vec2 p1) {
    if ((p1 - p0).norm() <= 0.0) throw GeometryError("segment endpoints coincide");
    Hypersurface h(Segment{p0, p1});
    h.length_ = (p1 - p0).norm();
    return h;
  }

  // Geodesic circle; on the modular surface the closed disk must lie inside
  // the interior of the fundamental domain so that it has a single lift there.
  static Hypersurface geodesic_circle(const Domain& domain, hyp::cplx center, double radius,
                                      double injectivity_radius) {
    if (domain.model() != Model::Hyperbolic) throw GeometryError("geodesic circles live on hyperbolic domains");
    if (!(radius > 0.0)) throw GeometryError("circle radius must be positive");
    if (!(center.imag() > 0.0)) throw GeometryError("circle center must lie in the upper half-plane");
    if (!(radius < injectivity_radius))
      throw GeometryError("circle radius must be below the injectivity radius (embeddedness)");
    if (domain.is_modular()) {
      const double to_sides =
          std::min(std::asinh((0.5 - center.real()) / center.imag()), std::asinh((0.5 + center.real()) / center.imag()));
      // distance to the unit circle geodesic: |log| of the ratio along the orthogonal geodesic
      const double r2 = std::norm(center);
      const double to_arc = std::asinh((r2 - 1.0) / (2.0 * center.imag()));
      if (!(std::abs(center.real()) < 0.5 && r2 > 1.0 && std::min(to_sides, to_arc) > radius))
        throw GeometryError("circle must lie inside the modular fundamental domain");
    }
    Hypersurface h(GeodesicCircle{center, radius, injectivity_radius});
    h.length_ = 2.0 * std::numbers::pi * std::sinh(radius);
    return h;
  }

  static Hypersurface closed_horocycle(const Domain& domain, double height) {
    if (!domain.is_modular()) throw GeometryError("closed horocycles are defined on the modular surface");
    if (!(height > 1.0)) throw GeometryError("horocycle height must exceed 1 to be embedded in the cusp");
    Hypersurface h(ClosedHorocycle{height});
    h.length_ = 1.0 / height;
    return h;
  }

  static Hypersurface closed_geodesic(const Domain& domain, const hyp::SL2& element);

  const Variant& variant() const { return v_; }
  double length() const { return length_; }
  bool closed() const { return !std::holds_alternative<Segment>(v_); }
  const std::vector<GeodesicPiece>& pieces() const { return pieces_; }

  // Arclength margin that keeps section points away from segment endpoints.
  double endpoint_margin() const { return closed() ? 0.0 : 1e-6 * length_; }

  std::string describe() const {
    std::ostringstream os;
    os.precision(17);
    std::visit(
        [&](const auto& c) {
          using T = std::decay_t<decltype(c)>;
          if constexpr (std::is_same_v<T, Segment>) {
            os << "segment(" << c.p0.x << "," << c.p0.y << ")->(" << c.p1.x << "," << c.p1.y << ")";
          } else if constexpr (std::is_same_v<T, GeodesicCircle>) {
            os << "geodesic_circle(center=" << c.center.real() << "+" << c.center.imag() << "i,rho=" << c.radius
               << ")";
          } else if constexpr (std::is_same_v<T, ClosedHorocycle>) {
            os << "horocycle(c=" << c.height << ")";
          } else {
            os << "closed_geodesic(" << c.element.a << "," << c.element.b << "," << c.element.c << ","
               << c.element.d << ")";
          }
        },
        v_);
    return os.str();
  }

  // Base point and orthonormal (tangent, nu_+) at arclength s in [0, L).
  FermiFrame frame(double s) const {
    if (!(s >= 0.0 && s < length_) && !(!closed() && s == length_)) {
      throw RangeError("arclength outside [0, L)");
    }
    return std::visit([&](const auto& c) { return frame_impl(c, s); }, v_);
  }

  // Fermi coordinates of (x, xi) if x lies in the collar of the given half-width.
  std::optional<FermiCoordinates> fermi(Vec2 x, Vec2 xi, double collar) const {
    return std::visit([&](const auto& c) { return fermi_impl(c, x, xi, collar); }, v_);
  }

  // Arclength of the foot point if x lies on H within tol.
  std::optional<double> locate(Vec2 x, double tol = kOnCurveTolerance) const {
    const auto f = fermi(x, Vec2{1.0, 0.0}, std::max(tol, 1e-300));
    if (!f || std::abs(f->y_n) > tol) return std::nullopt;
    return f->s;
  }

  double wrap(double s) const {
    if (!closed()) return s;
    s = std::fmod(s, length_);
    if (s < 0.0) s += length_;
    if (s >= length_) s = 0.0;
    return s;
  }

  // Shortest arclength separation (periodic for closed curves).
  double arclength_gap(double s1, double s2) const {
    double d = std::abs(s1 - s2);
    if (closed()) d = std::min(d, length_ - d);
    return d;
  }

 private:
  explicit Hypersurface(Variant v) : v_(std::move(v)) {}

  FermiFrame frame_impl(const Segment& c, double s) const {
    const Vec2 t = (c.p1 - c.p0) * (1.0 / length_);
    return {s, c.p0 + t * s, t, right_normal(t)};
  }

  FermiFrame frame_impl(const GeodesicCircle& c, double s) const {
    // Outward radial geodesic from the center with initial angle phi = s / sinh(rho).
    const double phi = s / std::sinh(c.radius);
    const hyp::SL2 g0 = hyp::translation(c.center.real()) * hyp::dilation(c.center.imag());
    const hyp::SL2 g = g0 * hyp::rotation(0.5 * (phi - 0.5 * std::numbers::pi));
    const hyp::UnitTangent u = hyp::along(g, c.radius);
    const Vec2 normal = Vec2::polar(u.theta);
    return {s, Vec2::from_complex(u.z), left_normal(normal), normal};
  }

  FermiFrame frame_impl(const ClosedHorocycle& c, double s) const {
    const Vec2 t{1.0, 0.0};
    return {s, Vec2{-0.5 + c.height * s, c.height}, t, right_normal(t)};
  }

  FermiFrame frame_impl(const ClosedGeodesicCurve&, double s) const {
    const GeodesicPiece& p = piece_at(s);
    const hyp::UnitTangent u = hyp::along(p.g, s - p.s_begin);
    const Vec2 t = Vec2::polar(u.theta);
    return {s, Vec2::from_complex(u.z), t, right_normal(t)};
  }

  const GeodesicPiece& piece_at(double s) const {
    auto it = std::upper_bound(pieces_.begin(), pieces_.end(), s,
                               [](double v, const GeodesicPiece& p) { return v < p.s_begin; });
    if (it != pieces_.begin()) --it;
    return *it;
  }

  std::optional<FermiCoordinates> fermi_impl(const Segment& c, Vec2 x, Vec2 xi, double collar) const {
    const Vec2 t = (c.p1 - c.p0) * (1.0 / length_);
    const Vec2 n = right_normal(t);
    const double s = dot(x - c.p0, t);
    const double y = dot(x - c.p0, n);
    if (s < 0.0 || s > length_ || std::abs(y) > collar) return std::nullopt;
    return FermiCoordinates{s, y, dot(xi, t), dot(xi, n)};
  }

  std::optional<FermiCoordinates> fermi_impl(const GeodesicCircle& c, Vec2 x, Vec2 xi, double collar) const {
    const hyp::cplx z = x.as_complex();
    const double r = hyp::distance(z, c.center);
    const double y = r - c.radius;
    if (std::abs(y) > collar) return std::nullopt;
    const hyp::cplx w = (z - c.center.real()) / c.center.imag();
    const hyp::cplx zeta = hyp::cayley(w);
    double phi = std::arg(zeta) + 0.5 * std::numbers::pi;
    phi = std::fmod(phi + 2.0 * std::numbers::pi, 2.0 * std::numbers::pi);
    const double s = wrap(std::sinh(c.radius) * phi);
    // Outward radial direction at z: radial in the disk, pulled back through Cayley.
    const Vec2 radial = Vec2::polar(std::arg(zeta) - hyp::cayley_derivative_angle(w));
    const Vec2 tangential = left_normal(radial);
    const double jac = std::sinh(r) / std::sinh(c.radius);
    return FermiCoordinates{s, y, jac * dot(xi, tangential), dot(xi, radial)};
  }

  std::optional<FermiCoordinates> fermi_impl(const ClosedHorocycle& c, Vec2 x, Vec2 xi, double collar) const {
    const double y = -std::log(x.y / c.height);  // nu_+ points down
    if (std::abs(y) > collar || std::abs(x.x) > 0.5 + 1e-12) return std::nullopt;
    const double s = wrap((x.x + 0.5) / c.height);
    const double jac = c.height / x.y;
    return FermiCoordinates{s, y, jac * xi.x, -xi.y};
  }

  std::optional<FermiCoordinates> fermi_impl(const ClosedGeodesicCurve&, Vec2 x, Vec2 xi, double collar) const {
    std::optional<FermiCoordinates> best;
    const hyp::cplx z = x.as_complex();
    const double theta = xi.angle();
    for (const GeodesicPiece& p : pieces_) {
      const hyp::SL2 ginv = p.g.inverse();
      const hyp::cplx w = ginv.apply(z);
      const double y = std::asinh(w.real() / w.imag());
      const double foot = std::log(std::abs(w));
      if (foot < -1e-12 || foot > p.length + 1e-12 || std::abs(y) > collar) continue;
      if (best && std::abs(best->y_n) <= std::abs(y)) continue;
      const double alpha = std::arg(w);
      const double theta_w = theta + hyp::derivative_angle(ginv, z);
      const double tan_comp = std::cos(theta_w - alpha);
      const double normal_comp = -std::sin(theta_w - alpha);
      best = FermiCoordinates{wrap(p.s_begin + std::clamp(foot, 0.0, p.length)), y, std::cosh(y) * tan_comp,
                              normal_comp};
    }
    return best;
  }

  Variant v_;
  double length_ = 0.0;
  std::vector<GeodesicPiece> pieces_;
};

// Follows the axis of `element` through the modular fundamental domain for one
// period and records each passage as a piece.
inline Hypersurface Hypersurface::closed_geodesic(const Domain& domain, const hyp::SL2& element) {
  if (!domain.is_modular()) throw GeometryError("closed geodesics are built on the modular surface");
  if (std::abs(element.det() - 1.0) > 1e-12) throw GeometryError("closed geodesic element must have det 1");
  for (double e : {element.a, element.b, element.c, element.d}) {
    if (e != std::round(e)) throw GeometryError("closed geodesic element must be integral");
  }
  if (!(std::abs(element.trace()) > 2.0)) throw GeometryError("closed geodesic element must be hyperbolic");
  Hypersurface h(ClosedGeodesicCurve{element});
  const double period = hyp::translation_length(element);

  // Walk the axis once from its reduced starting point, then restart from
  // the middle of the longest piece so that s = 0 lies inside F.
  const auto walk = [&](hyp::UnitTangent start) {
    std::vector<GeodesicPiece> pieces;
    hyp::FdSide entered = hyp::FdSide::None;
    double s = 0.0;
    hyp::UnitTangent cur = start;
    for (int guard = 0; guard < 100000 && s < period - 1e-12; ++guard) {
      const hyp::SL2 g = hyp::frame_matrix(cur.z, cur.theta);
      const hyp::FdExit ex = hyp::fundamental_domain_exit(g, entered);
      if (ex.side == hyp::FdSide::None) throw GeometryError("closed geodesic escaped to the cusp");
      if (ex.corner) throw GeometryError("closed geodesic runs through a corner of the fundamental domain");
      const double len = std::min(ex.t, period - s);
      if (len > 0.0) pieces.push_back(GeodesicPiece{g, s, len});
      s += len;
      if (s >= period - 1e-12) break;
      cur = hyp::cross_side(hyp::along(g, ex.t), ex.side);
      entered = hyp::side_pairing(ex.side).second;
    }
    return pieces;
  };

  hyp::UnitTangent start = hyp::along(hyp::axis_frame(element), 0.0);
  const hyp::Reduction red = hyp::reduce_to_fundamental_domain(start.z);
  start = {red.z, hyp::wrap_angle(start.theta + hyp::derivative_angle(red.gamma, start.z))};
  const std::vector<GeodesicPiece> first = walk(start);
  const auto longest = std::max_element(first.begin(), first.end(), [](const GeodesicPiece& a, const GeodesicPiece& b) {
    return a.length < b.length;
  });
  h.pieces_ = walk(hyp::along(longest->g, 0.5 * longest->length));
  h.length_ = period;
  return h;
}

// ---------------------------------------------------------------------------
// Fibre maps on S*_H M

inline FermiFrame curve_frame(const Hypersurface& h, double s) { return h.frame(s); }

inline PhasePoint lift_xi(const Hypersurface& h, Model model, double s, double sigma, Side side) {
  if (!(std::abs(sigma) <= 1.0)) throw DomainError("lift requires |sigma| <= 1");
  const FermiFrame f = h.frame(s);
  const double eta = std::sqrt(std::max(0.0, 1.0 - sigma * sigma));
  return {f.point, f.tangent * sigma + f.normal * (sign_of(side) * eta), model, std::nullopt};
}

// Frame at the foot point of p; throws if p is not on H.
inline FermiFrame frame_at(const Hypersurface& h, const PhasePoint& p, double tol = kOnCurveTolerance) {
  const auto s = h.locate(p.x, tol);
  if (!s) throw GeometryError("foot point is not on H");
  FermiFrame f = h.frame(*s);
  // Use the local representative for directions (matters where H meets a side pairing).
  f.point = p.x;
  return f;
}

inline double project_piH(const Hypersurface& h, const PhasePoint& p, double tol = kOnCurveTolerance) {
  return dot(p.xi, frame_at(h, p, tol).tangent);
}

inline PhasePoint reflect_rH(const Hypersurface& h, const PhasePoint& p, double tol = kOnCurveTolerance) {
  const FermiFrame f = frame_at(h, p, tol);
  const double nc = dot(p.xi, f.normal);
  return {p.x, p.xi - f.normal * (2.0 * nc), p.model, std::nullopt};
}

inline Side side_of(const Vec2& xi, const FermiFrame& f) { return dot(xi, f.normal) >= 0.0 ? Side::Plus : Side::Minus; }

}  // namespace qerlab
