#pragma once

// Flows G^t, impacts on H, return maps and their Jacobians.
//
// Every orbit is traversed as a chain of legs on which the motion has a
// closed form: straight segments between wall hits for billiards, and
// geodesic arcs g(e^t i) between side crossings of the modular fundamental
// domain (a single infinite leg on the hyperbolic plane).  Crossings of H are
// solved exactly on each leg, so no time-stepping is involved anywhere.

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "qerlab/errors.hpp"
#include "qerlab/geometry.hpp"
#include "qerlab/hyperbolic.hpp"
#include "qerlab/vec2.hpp"

namespace qerlab {

struct DynamicsParams {
  double t_max = 50.0;
  double sigma_band = 1e-3;  // section points with |sigma| > 1 - sigma_band are censored
  double t_sep = 1e-6;       // impacts closer than this are the same impact
};

// Distance to a billiard wall-cap junction (or square corner), relative to
// the curvature scale, below which a trajectory is aborted.
inline constexpr double kCornerTolerance = 1e-8;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct CrossSectionPoint {
  double s = 0.0;
  double sigma = 0.0;
  Side side = Side::Plus;

  CrossSectionPoint reflected() const { return {s, sigma, opposite(side)}; }
};

inline PhasePoint lift(const Domain& domain, const Hypersurface& h, const CrossSectionPoint& q) {
  return lift_xi(h, domain.model(), q.s, q.sigma, q.side);
}

// ---------------------------------------------------------------------------
// Legs

struct Leg {
  double start = 0.0;
  double end = kInf;
  Vec2 p;        // billiard: position at start
  Vec2 d;        // billiard: unit direction
  hyp::SL2 g;    // hyperbolic: position g(e^{t - start} i)
  int wall = -1; // boundary piece / fundamental-domain side reached at `end`
};

class Tracer {
 public:
  Tracer(const Domain& domain, const PhasePoint& p) : domain_(&domain) {
    if (domain.is_billiard()) {
      if (domain.signed_distance(p.x) > 1e-9) throw GeometryError("phase point lies outside the billiard");
      leg_.p = p.x;
      leg_.d = p.xi.normalized();
      plan_billiard();
    } else {
      if (!(p.x.y > 0.0)) throw GeometryError("phase point lies outside the upper half-plane");
      hyp::cplx z = p.x.as_complex();
      double theta = p.xi.angle();
      if (domain.is_modular()) {
        const hyp::Reduction red = hyp::reduce_to_fundamental_domain(z);
        theta = hyp::wrap_angle(theta + hyp::derivative_angle(red.gamma, z));
        z = red.z;
      }
      leg_.g = hyp::frame_matrix(z, theta);
      plan_hyperbolic();
    }
  }

  const Leg& leg() const { return leg_; }
  Model model() const { return domain_->model(); }

  // Boundary pieces / sides met so far, in order.
  const std::vector<int>& itinerary() const { return itinerary_; }

  PhasePoint at(double t) const {
    const double tau = t - leg_.start;
    if (domain_->is_billiard()) return {leg_.p + leg_.d * tau, leg_.d, Model::Euclidean, std::nullopt};
    const hyp::UnitTangent u = hyp::along(leg_.g, tau);
    return {Vec2::from_complex(u.z), Vec2::polar(u.theta), Model::Hyperbolic, std::nullopt};
  }

  // Moves to the next leg.  Throws TrajectoryAbort at corners.
  void advance() {
    if (!std::isfinite(leg_.end)) throw NumericalError("advance past an infinite leg");
    if (corner_) throw TrajectoryAbort("trajectory hit a corner at t = " + std::to_string(leg_.end));
    itinerary_.push_back(leg_.wall);
    if (domain_->is_billiard()) {
      Vec2 d = leg_.d - hit_normal_ * (2.0 * dot(leg_.d, hit_normal_));
      leg_.p = hit_point_;
      leg_.d = d.normalized();
      leg_.start = leg_.end;
      plan_billiard();
    } else {
      const auto side = static_cast<hyp::FdSide>(leg_.wall);
      const hyp::UnitTangent exit = hyp::along(leg_.g, leg_.end - leg_.start);
      const hyp::UnitTangent entry = hyp::cross_side(exit, side);
      entered_ = hyp::side_pairing(side).second;
      leg_.g = hyp::frame_matrix(entry.z, entry.theta);
      leg_.start = leg_.end;
      plan_hyperbolic();
    }
  }

 private:
  struct Hit {
    double t = kInf;
    int wall = -1;
    Vec2 point;
    Vec2 normal;
  };

  static void offer(Hit& best, double t, int wall, Vec2 point, Vec2 normal) {
    if (t > 0.0 && t < best.t) best = {t, wall, point, normal};
  }

  void plan_billiard() {
    const Vec2 p = leg_.p;
    const Vec2 d = leg_.d;
    Hit best;
    std::vector<Vec2> corners;
    double scale = 1.0;
    if (const auto* st = std::get_if<StadiumBilliard>(&domain_->variant())) {
      const double a = st->half_length;
      const double r = st->cap_radius;
      scale = r;
      if (d.y > 0.0) {
        const double t = (r - p.y) / d.y;
        const double x = p.x + t * d.x;
        if (std::abs(x) <= a) offer(best, t, 0, {x, r}, {0.0, 1.0});
      }
      if (d.y < 0.0) {
        const double t = (-r - p.y) / d.y;
        const double x = p.x + t * d.x;
        if (std::abs(x) <= a) offer(best, t, 1, {x, -r}, {0.0, -1.0});
      }
      for (int k = 0; k < 2; ++k) {
        const Vec2 c{k == 0 ? a : -a, 0.0};
        const Vec2 rel = p - c;
        const double b = dot(rel, d);
        const double cc = dot(rel, rel) - r * r;
        const double disc = b * b - cc;
        if (disc < 0.0) continue;
        // Larger root: the exit from the disk (robust when starting on the circle).
        const double t = b < 0.0 ? -b + std::sqrt(disc) : -cc / (b + std::sqrt(disc));
        if (!(t > 0.0)) continue;
        const Vec2 hit = p + d * t;
        const bool on_cap = k == 0 ? hit.x >= a : hit.x <= -a;
        if (on_cap) {
          const Vec2 n = (hit - c).normalized();
          offer(best, t, 2 + k, c + n * r, n);
        }
      }
      corners = {{a, r}, {-a, r}, {a, -r}, {-a, -r}};
    } else {
      if (d.x < 0.0) {
        const double t = -p.x / d.x;
        const double y = p.y + t * d.y;
        if (y >= 0.0 && y <= 1.0) offer(best, t, 0, {0.0, y}, {-1.0, 0.0});
      }
      if (d.x > 0.0) {
        const double t = (1.0 - p.x) / d.x;
        const double y = p.y + t * d.y;
        if (y >= 0.0 && y <= 1.0) offer(best, t, 1, {1.0, y}, {1.0, 0.0});
      }
      if (d.y < 0.0) {
        const double t = -p.y / d.y;
        const double x = p.x + t * d.x;
        if (x >= 0.0 && x <= 1.0) offer(best, t, 2, {x, 0.0}, {0.0, -1.0});
      }
      if (d.y > 0.0) {
        const double t = (1.0 - p.y) / d.y;
        const double x = p.x + t * d.x;
        if (x >= 0.0 && x <= 1.0) offer(best, t, 3, {x, 1.0}, {0.0, 1.0});
      }
      corners = {{0.0, 0.0}, {1.0, 0.0}, {0.0, 1.0}, {1.0, 1.0}};
    }
    if (!std::isfinite(best.t)) throw TrajectoryAbort("ray left the billiard without a wall hit");
    corner_ = false;
    for (const Vec2& c : corners) {
      if ((best.point - c).norm() < kCornerTolerance * scale) corner_ = true;
    }
    leg_.end = leg_.start + best.t;
    leg_.wall = best.wall;
    hit_point_ = best.point;
    hit_normal_ = best.normal;
  }

  void plan_hyperbolic() {
    corner_ = false;
    if (!domain_->is_modular()) {
      leg_.end = kInf;
      leg_.wall = -1;
      return;
    }
    const hyp::FdExit ex = hyp::fundamental_domain_exit(leg_.g, entered_);
    leg_.end = leg_.start + ex.t;
    leg_.wall = static_cast<int>(ex.side);
    corner_ = ex.corner;
  }

  const Domain* domain_;
  Leg leg_;
  hyp::FdSide entered_ = hyp::FdSide::None;
  bool corner_ = false;
  Vec2 hit_point_;
  Vec2 hit_normal_;
  std::vector<int> itinerary_;
};

// ---------------------------------------------------------------------------
// Flow

// G^t(x, xi) for t >= 0 by walking legs; t < 0 via time reversal.
inline PhasePoint trace(const Domain& domain, const PhasePoint& p, double t) {
  if (!std::isfinite(t)) throw DomainError("flow time must be finite");
  if (t < 0.0) return trace(domain, p.reversed().detached(), -t).reversed();
  Tracer tr(domain, p.detached());
  while (tr.leg().end < t) tr.advance();
  PhasePoint out = tr.at(t);
  out.xi = out.xi.normalized();
  return out;
}

// G^t p.  The result is anchored at the orbit p was flowed from, so the flow
// is a one-parameter group up to rounding of the accumulated time.
inline PhasePoint flow(const Domain& domain, const PhasePoint& p, double t) {
  const OrbitAnchor a = p.anchor.value_or(OrbitAnchor{p.x, p.xi, 0.0});
  const double tau = a.time + t;
  PhasePoint out = trace(domain, PhasePoint{a.x, a.xi, p.model, std::nullopt}, tau);
  out.anchor = OrbitAnchor{a.x, a.xi, tau};
  return out;
}

// Scaled phase-space distance: position error / diameter + angle error / pi.
// Hyperbolic positions use the hyperbolic distance; on the modular surface the
// side identifications are taken into account.
inline double phase_distance(const Domain& domain, const PhasePoint& a, const PhasePoint& b) {
  if (domain.is_billiard()) {
    return (a.x - b.x).norm() / domain.diameter() + angle_between(a.xi.normalized(), b.xi.normalized()) / std::numbers::pi;
  }
  const auto one = [&](hyp::cplx zb, double thb) {
    return hyp::distance(a.x.as_complex(), zb) +
           angle_between(a.xi.normalized(), Vec2::polar(thb)) / std::numbers::pi;
  };
  const hyp::cplx zb = b.x.as_complex();
  const double thb = b.xi.angle();
  double best = one(zb, thb);
  if (domain.is_modular()) {
    for (const hyp::SL2& g : {hyp::translation(1.0), hyp::translation(-1.0), hyp::modular_S()}) {
      best = std::min(best, one(g.apply(zb), thb + hyp::derivative_angle(g, zb)));
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// Crossings of H on a leg

struct Crossing {
  double t;
  double s;
  double sigma;
  double eta;  // normal component of the direction along nu_+
  PhasePoint point;
};

namespace detail {

inline void push_crossing(std::vector<Crossing>& out, double t, double s, Vec2 tangent, const PhasePoint& p) {
  const Vec2 dir = p.xi.normalized();
  double sigma = dot(dir, tangent);
  double eta = dot(dir, right_normal(tangent));
  const double n = std::hypot(sigma, eta);
  out.push_back({t, s, sigma / n, eta / n, p});
}

inline void push_fermi(std::vector<Crossing>& out, const Hypersurface& h, double t, const PhasePoint& p) {
  const auto f = h.fermi(p.x, p.xi.normalized(), 1e-6);
  if (!f) return;
  const double n = std::hypot(f->sigma, f->eta_n);
  out.push_back({t, f->s, f->sigma / n, f->eta_n / n, p});
}

}  // namespace detail

// Crossings of H by the current leg with lo < t <= hi, sorted by time.
inline std::vector<Crossing> leg_crossings(const Tracer& tr, const Hypersurface& h, double lo, double hi) {
  const Leg& leg = tr.leg();
  std::vector<Crossing> out;
  hi = std::min(hi, leg.end);
  if (!(hi > lo)) return out;
  const auto in_window = [&](double t) { return t > lo && t <= hi; };

  std::visit(
      [&](const auto& c) {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, Segment>) {
          if (tr.model() != Model::Euclidean) throw GeometryError("segments are supported on billiard domains only");
          const Vec2 e = c.p1 - c.p0;
          const double den = cross(leg.d, e);
          if (den == 0.0) return;
          const Vec2 w = c.p0 - leg.p;
          const double tau = cross(w, e) / den;
          const double u = cross(w, leg.d) / den;
          const double len = h.length();
          const double s = u * len;
          const double margin = h.endpoint_margin();
          if (s < margin || s > len - margin) return;
          const double t = leg.start + tau;
          if (!in_window(t)) return;
          detail::push_crossing(out, t, s, e * (1.0 / len), tr.at(t));
        } else if constexpr (std::is_same_v<T, GeodesicCircle>) {
          const hyp::cplx cw = leg.g.inverse().apply(c.center);
          const double p = cw.real();
          const double q = cw.imag();
          const double ch = std::cosh(c.radius);
          const double disc = q * q * ch * ch - p * p - q * q;
          if (disc < 0.0) return;
          const double sq = std::sqrt(disc);
          const double w1 = (p * p + q * q) / (q * ch + sq);
          const double w2 = q * ch + sq;
          for (double w : {w1, w2}) {
            const double t = leg.start + std::log(w);
            if (in_window(t)) detail::push_fermi(out, h, t, tr.at(t));
          }
        } else if constexpr (std::is_same_v<T, ClosedHorocycle>) {
          const double C = c.height;
          const double cg = leg.g.c;
          const double dg = leg.g.d;
          std::array<double, 2> ws{-1.0, -1.0};
          if (cg == 0.0) {
            ws[0] = C * dg * dg;
          } else {
            const double disc = 1.0 - 4.0 * C * C * cg * cg * dg * dg;
            if (disc < 0.0) return;
            const double sq = std::sqrt(disc);
            ws[0] = (1.0 + sq) / (2.0 * C * cg * cg);
            ws[1] = 2.0 * C * dg * dg / (1.0 + sq);
          }
          for (double w : ws) {
            if (!(w > 0.0)) continue;
            const double t = leg.start + std::log(w);
            if (in_window(t)) detail::push_fermi(out, h, t, tr.at(t));
          }
        } else {
          for (const GeodesicPiece& piece : h.pieces()) {
            const auto tau = hyp::geodesic_crossing_time(leg.g, hyp::ends(piece.g));
            if (!tau) continue;
            const double t = leg.start + *tau;
            if (!in_window(t)) continue;
            const PhasePoint p = tr.at(t);
            const hyp::cplx w = piece.g.inverse().apply(p.x.as_complex());
            const double foot = std::log(std::abs(w));
            if (foot < -1e-12 || foot > piece.length + 1e-12) continue;
            const double fc = std::clamp(foot, 0.0, piece.length);
            const hyp::UnitTangent u = hyp::along(piece.g, fc);
            detail::push_crossing(out, t, h.wrap(piece.s_begin + fc), Vec2::polar(u.theta), p);
          }
        }
      },
      h.variant());
  std::sort(out.begin(), out.end(), [](const Crossing& a, const Crossing& b) { return a.t < b.t; });
  return out;
}

// ---------------------------------------------------------------------------
// Impacts

struct Impact {
  double t = 0.0;
  CrossSectionPoint q;
  bool band = false;  // |sigma| > 1 - sigma_band
  PhasePoint point;
  std::vector<int> itinerary;  // boundary pieces met before this impact
};

// Forward impacts of an orbit, in order, de-duplicated by t_sep.
class ImpactStream {
 public:
  ImpactStream(const Domain& domain, const Hypersurface& h, const PhasePoint& start, double t_min,
               const DynamicsParams& params)
      : h_(&h), params_(params), tracer_(domain, start.detached()), floor_(t_min) {}

  // Next impact with time <= t_max, or nothing.
  std::optional<Impact> next(double t_max) {
    while (true) {
      if (!pending_.empty()) {
        if (pending_.front().t > t_max) return std::nullopt;
        Impact imp = std::move(pending_.front());
        pending_.pop_front();
        return imp;
      }
      if (scanned_) {
        if (!(tracer_.leg().end < t_max)) return std::nullopt;
        tracer_.advance();
        scanned_ = false;
      }
      scan();
    }
  }

 private:
  void scan() {
    const Leg& leg = tracer_.leg();
    for (const Crossing& c : leg_crossings(tracer_, *h_, std::max(floor_, leg.start), leg.end)) {
      if (c.t <= floor_) continue;
      floor_ = c.t + params_.t_sep;
      Impact imp;
      imp.t = c.t;
      imp.q = {c.s, c.sigma, c.eta >= 0.0 ? Side::Plus : Side::Minus};
      imp.band = std::abs(c.sigma) > 1.0 - params_.sigma_band;
      imp.point = c.point;
      imp.itinerary = tracer_.itinerary();
      pending_.push_back(std::move(imp));
    }
    scanned_ = true;
  }

  const Hypersurface* h_;
  DynamicsParams params_;
  Tracer tracer_;
  double floor_;
  bool scanned_ = false;
  std::deque<Impact> pending_;
};

inline bool on_curve(const Hypersurface& h, const PhasePoint& p) { return h.locate(p.x).has_value(); }

enum class Status { Ok, Censored, BandGrazing, Aborted };

inline const char* to_string(Status s) {
  switch (s) {
    case Status::Ok:
      return "ok";
    case Status::Censored:
      return "censored";
    case Status::BandGrazing:
      return "band-grazing";
    case Status::Aborted:
      return "aborted";
  }
  return "?";
}

// Smallest impact time in (0, T_max]; starting points on H skip t <= t_sep.
inline std::optional<double> impact_time(const Domain& domain, const Hypersurface& h, const PhasePoint& p,
                                         const DynamicsParams& params) {
  if (!(params.t_max > 0.0)) throw DomainError("T_max must be positive");
  ImpactStream stream(domain, h, p, on_curve(h, p) ? params.t_sep : 0.0, params);
  const auto imp = stream.next(params.t_max);
  if (!imp) return std::nullopt;
  return imp->t;
}

struct ReturnResult {
  Status status = Status::Censored;
  CrossSectionPoint q;
  double time = kInf;
  PhasePoint point;
  std::vector<int> itinerary;

  bool ok() const { return status == Status::Ok; }
};

inline void require_off_band(const CrossSectionPoint& q, const DynamicsParams& params) {
  if (!(std::abs(q.sigma) < 1.0 - params.sigma_band)) throw DomainError("section point lies in the tangential band");
}

// First return map Phi on S*_H M.
inline ReturnResult return_map_Phi(const Domain& domain, const Hypersurface& h, const CrossSectionPoint& q,
                                   const DynamicsParams& params) {
  require_off_band(q, params);
  ReturnResult r;
  try {
    ImpactStream stream(domain, h, lift(domain, h, q), params.t_sep, params);
    auto imp = stream.next(params.t_max);
    if (!imp) return r;
    r.q = imp->q;
    r.time = imp->t;
    r.point = imp->point;
    r.itinerary = std::move(imp->itinerary);
    r.status = imp->band ? Status::BandGrazing : Status::Ok;
  } catch (const TrajectoryAbort&) {
    r.status = Status::Aborted;
  }
  return r;
}

struct ImpactRecord {
  std::vector<double> times;
  std::vector<CrossSectionPoint> points;
  std::vector<PhasePoint> phase_points;
  Status status = Status::Ok;
  int reached = 0;  // number of valid returns recorded

  bool finite() const { return status == Status::Ok; }
};

// Phi^1, ..., Phi^j of q with cumulative times T^(1) < ... < T^(j).
inline ImpactRecord jth_return(const Domain& domain, const Hypersurface& h, const CrossSectionPoint& q, int j,
                               const DynamicsParams& params) {
  if (j < 1) throw RangeError("return index must be >= 1");
  require_off_band(q, params);
  ImpactRecord rec;
  try {
    ImpactStream stream(domain, h, lift(domain, h, q), params.t_sep, params);
    for (int i = 0; i < j; ++i) {
      auto imp = stream.next(params.t_max);
      if (!imp) {
        rec.status = Status::Censored;
        return rec;
      }
      if (imp->band) {
        rec.status = Status::BandGrazing;
        return rec;
      }
      rec.times.push_back(imp->t);
      rec.points.push_back(imp->q);
      rec.phase_points.push_back(imp->point);
      rec.reached = i + 1;
    }
  } catch (const TrajectoryAbort&) {
    rec.status = Status::Aborted;
  }
  return rec;
}

struct OneSidedResult {
  Status status = Status::Censored;
  double s = 0.0;
  double sigma = 0.0;
  double time = kInf;
};

// P_{+-,j}(s, sigma) = pi_H Phi^j xi_{+-}(s, sigma).
inline OneSidedResult one_sided_return(const Domain& domain, const Hypersurface& h, double s, double sigma, Side side,
                                       int j, const DynamicsParams& params) {
  const ImpactRecord rec = jth_return(domain, h, {s, sigma, side}, j, params);
  OneSidedResult r;
  r.status = rec.status;
  if (rec.finite()) {
    r.s = rec.points.back().s;
    r.sigma = rec.points.back().sigma;
    r.time = rec.times.back();
  }
  return r;
}

// G^{-t} r_H G^{t} p for a time t at which G^t p lies on H.
inline PhasePoint reflect_at_time(const Domain& domain, const Hypersurface& h, const PhasePoint& p, double t) {
  const PhasePoint on_h = trace(domain, p.detached(), t);
  const PhasePoint r = reflect_rH(h, on_h, 1e-8);
  return trace(domain, r, -t);
}

struct ReflectionResult {
  Status status = Status::Censored;
  PhasePoint point;
  double time = kInf;  // t_j(p)
};

// H-reflection map R_j: reflect through T*H at the j-th forward impact of p.
inline ReflectionResult h_reflection_Rj(const Domain& domain, const Hypersurface& h, const PhasePoint& p, int j,
                                        const DynamicsParams& params) {
  if (j < 1) throw RangeError("impact index must be >= 1");
  ReflectionResult r;
  try {
    ImpactStream stream(domain, h, p, on_curve(h, p) ? params.t_sep : 0.0, params);
    std::optional<Impact> imp;
    for (int i = 0; i < j; ++i) {
      imp = stream.next(params.t_max);
      if (!imp) return r;
      if (imp->band) {
        r.status = Status::BandGrazing;
        return r;
      }
    }
    r.time = imp->t;
    r.point = reflect_at_time(domain, h, p, imp->t);
    r.status = Status::Ok;
  } catch (const TrajectoryAbort&) {
    r.status = Status::Aborted;
  }
  return r;
}

struct SectionJacobian {
  bool available = false;
  std::string reason;
  std::array<double, 4> m{};  // row-major d(s', sigma') / d(s, sigma)
  double det() const { return m[0] * m[3] - m[1] * m[2]; }
};

// Central finite-difference Jacobian of Phi in (s, sigma).  Unavailable when a
// neighbour is censored or reaches H by a different bounce itinerary.
inline SectionJacobian section_jacobian(const Domain& domain, const Hypersurface& h, const CrossSectionPoint& q,
                                        const DynamicsParams& params, double h_fd) {
  SectionJacobian out;
  const ReturnResult centre = return_map_Phi(domain, h, q, params);
  if (!centre.ok()) {
    out.reason = std::string("centre ") + to_string(centre.status);
    return out;
  }
  // Fourth-order central stencil: offsets +h, -h, +2h, -2h in s, then in sigma.
  constexpr std::array<double, 4> kOffset{1.0, -1.0, 2.0, -2.0};
  std::array<ReturnResult, 8> img;
  for (int i = 0; i < 8; ++i) {
    CrossSectionPoint n = q;
    (i < 4 ? n.s : n.sigma) += kOffset[i % 4] * h_fd;
    if (h.closed()) {
      n.s = h.wrap(n.s);
    } else if (n.s < h.endpoint_margin() || n.s > h.length() - h.endpoint_margin()) {
      out.reason = "neighbour outside the section";
      return out;
    }
    if (!(std::abs(n.sigma) < 1.0 - params.sigma_band)) {
      out.reason = "neighbour in the tangential band";
      return out;
    }
    img[i] = return_map_Phi(domain, h, n, params);
    if (!img[i].ok()) {
      out.reason = std::string("neighbour ") + to_string(img[i].status);
      return out;
    }
    if (img[i].itinerary != centre.itinerary || img[i].q.side != centre.q.side) {
      out.reason = "neighbour itinerary differs";
      return out;
    }
  }
  const auto ds = [&](double a, double b) {
    double d = a - b;
    if (h.closed()) d = std::remainder(d, h.length());
    return d;
  };
  const double inv = 1.0 / (12.0 * h_fd);
  const auto dsd = [&](int k) { return (8.0 * ds(img[k].q.s, img[k + 1].q.s) - ds(img[k + 2].q.s, img[k + 3].q.s)) * inv; };
  const auto dsig = [&](int k) {
    return (8.0 * (img[k].q.sigma - img[k + 1].q.sigma) - (img[k + 2].q.sigma - img[k + 3].q.sigma)) * inv;
  };
  out.m = {dsd(0), dsd(4), dsig(0), dsig(4)};
  out.available = true;
  return out;
}

// Impacts of the orbit through p with -t_back <= t <= t_fwd, t != 0, in time
// order.  Backward impacts come from the reversed orbit; their section data
// refer to the forward direction.
inline std::vector<Impact> impacts_in_window(const Domain& domain, const Hypersurface& h, const PhasePoint& p,
                                             double t_back, double t_fwd, const DynamicsParams& params) {
  std::vector<Impact> back;
  {
    ImpactStream stream(domain, h, p.reversed(), params.t_sep, params);
    while (auto imp = stream.next(t_back)) {
      imp->t = -imp->t;
      imp->q = {imp->q.s, -imp->q.sigma, opposite(imp->q.side)};
      imp->point = imp->point.reversed();
      back.push_back(std::move(*imp));
    }
  }
  std::vector<Impact> out(std::make_move_iterator(back.rbegin()), std::make_move_iterator(back.rend()));
  ImpactStream stream(domain, h, p, params.t_sep, params);
  while (auto imp = stream.next(t_fwd)) out.push_back(std::move(*imp));
  return out;
}

}  // namespace qerlab
