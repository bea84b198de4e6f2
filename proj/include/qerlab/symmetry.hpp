#pragma once

// Monte Carlo estimate of the measure of microlocal reflection symmetry.
//
// A section point q is symmetric when, for some return j of q and some
// return k of r_H q,
//
//     r_H Phi^j(q) = Phi^k(r_H q)   and   T^(j)(q) = T^(k)(r_H q),
//
// i.e. r_H G^{T^(j)} q = G^{T^(j)} r_H q with the right-hand side on H.
// Both orbits are recorded once and all index pairs are compared, so the
// indicator is invariant under exchanging q and r_H q.

#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "qerlab/dynamics.hpp"
#include "qerlab/parallel.hpp"
#include "qerlab/random.hpp"

namespace qerlab {

struct SymmetryParams {
  int j_max = 6;
  DynamicsParams dynamics{};
  double tol_match = 1e-6;
  std::vector<double> report_tolerances{1e-4, 1e-6, 1e-8};
  std::uint64_t seed = 1;
  unsigned threads = 1;
};

struct Witness {
  int j = 0;
  int k = 0;
  double distance = kInf;
};

struct IndicatorResult {
  Status status = Status::Ok;  // anything but Ok: indicator undefined (censored)
  bool symmetric = false;
  Witness witness;
  int returns_q = 0;
  int returns_rq = 0;
};

// Valid returns of q up to j_max and T_max.  A band-grazing or aborted
// return ends the record; only a missing first return censors it.
struct OrbitReturns {
  Status status = Status::Ok;
  std::vector<double> times;
  std::vector<CrossSectionPoint> points;
};

inline OrbitReturns record_returns(const Domain& domain, const Hypersurface& h, const CrossSectionPoint& q,
                                   int j_max, const DynamicsParams& params) {
  OrbitReturns rec;
  try {
    ImpactStream stream(domain, h, lift(domain, h, q), params.t_sep, params);
    while (static_cast<int>(rec.times.size()) < j_max) {
      const auto imp = stream.next(params.t_max);
      if (!imp) break;
      if (imp->band) {
        if (rec.times.empty()) rec.status = Status::BandGrazing;
        break;
      }
      rec.times.push_back(imp->t);
      rec.points.push_back(imp->q);
    }
  } catch (const TrajectoryAbort&) {
    if (rec.times.empty()) rec.status = Status::Aborted;
  }
  if (rec.status == Status::Ok && rec.times.empty()) rec.status = Status::Censored;
  return rec;
}

// Direction angle of the lift of (sigma, side) measured from the tangent.
inline double section_angle(const CrossSectionPoint& q) {
  return std::atan2(sign_of(q.side) * std::sqrt(std::max(0.0, 1.0 - q.sigma * q.sigma)), q.sigma);
}

// Scaled distance between two section points at two times:
// |ds| / scale + |d angle| / pi + |dt| / scale.
inline double section_distance(const Domain& domain, const Hypersurface& h, const CrossSectionPoint& a, double ta,
                               const CrossSectionPoint& b, double tb) {
  const double scale = domain.is_billiard() ? domain.diameter() : 1.0;
  const double dtheta = std::abs(std::remainder(section_angle(a) - section_angle(b), 2.0 * std::numbers::pi));
  return h.arclength_gap(a.s, b.s) / scale + dtheta / std::numbers::pi + std::abs(ta - tb) / scale;
}

// Closest (j, k) coincidence between r_H Phi^j(q) and Phi^k(r_H q).
inline Witness closest_coincidence(const Domain& domain, const Hypersurface& h, const OrbitReturns& q_orbit,
                                   const OrbitReturns& rq_orbit) {
  Witness best;
  for (std::size_t j = 0; j < q_orbit.times.size(); ++j) {
    const CrossSectionPoint reflected = q_orbit.points[j].reflected();
    for (std::size_t k = 0; k < rq_orbit.times.size(); ++k) {
      const double d = section_distance(domain, h, reflected, q_orbit.times[j], rq_orbit.points[k], rq_orbit.times[k]);
      if (d < best.distance) best = {static_cast<int>(j) + 1, static_cast<int>(k) + 1, d};
    }
  }
  return best;
}

inline IndicatorResult symmetry_indicator(const Domain& domain, const Hypersurface& h, const CrossSectionPoint& q,
                                          int j_max, const DynamicsParams& params, double tol_match) {
  if (j_max < 1) throw RangeError("j_max must be >= 1");
  IndicatorResult r;
  const OrbitReturns a = record_returns(domain, h, q, j_max, params);
  const OrbitReturns b = record_returns(domain, h, q.reflected(), j_max, params);
  r.returns_q = static_cast<int>(a.times.size());
  r.returns_rq = static_cast<int>(b.times.size());
  if (a.status != Status::Ok) {
    r.status = a.status;
    return r;
  }
  if (b.status != Status::Ok) {
    r.status = b.status;
    return r;
  }
  r.witness = closest_coincidence(domain, h, a, b);
  r.symmetric = r.witness.distance <= tol_match;
  return r;
}

// Uniform sample of mu_{L,H} restricted to |sigma| < 1 - sigma_band.
inline CrossSectionPoint sample_section(const Hypersurface& h, SampleRng& rng, double sigma_band) {
  const double margin = h.endpoint_margin();
  CrossSectionPoint q;
  q.s = h.closed() ? rng.uniform(0.0, h.length()) : rng.uniform(margin, h.length() - margin);
  const double smax = 1.0 - sigma_band;
  do {
    q.sigma = rng.uniform(-smax, smax);
  } while (!(std::abs(q.sigma) < smax));
  q.side = rng.coin() ? Side::Plus : Side::Minus;
  return q;
}

struct SampleOutcome {
  CrossSectionPoint q;
  IndicatorResult result;
};

struct SymmetryVerdict {
  double estimate = 0.0;
  double stderr_ = 0.0;
  std::size_t samples = 0;
  std::size_t valid = 0;
  std::size_t censored = 0;
  double censored_fraction = 0.0;
  bool low_confidence = false;
  std::map<std::pair<int, int>, std::size_t> histogram;  // (j, k) -> count
  std::vector<std::pair<double, double>> by_tolerance;  // (tol, estimate)
  SymmetryParams params;
  std::vector<SampleOutcome> outcomes;
};

inline SymmetryVerdict symmetry_measure(const Domain& domain, const Hypersurface& h, std::size_t n_samples,
                                        const SymmetryParams& params) {
  if (n_samples < 100) throw RangeError("symmetry_measure needs at least 100 samples");
  SymmetryVerdict v;
  v.params = params;
  v.samples = n_samples;
  v.outcomes = parallel_map<SampleOutcome>(n_samples, params.threads, [&](std::size_t i) {
    SampleRng rng(params.seed, i);
    SampleOutcome o;
    o.q = sample_section(h, rng, params.dynamics.sigma_band);
    o.result = symmetry_indicator(domain, h, o.q, params.j_max, params.dynamics, params.tol_match);
    return o;
  });
  std::size_t hits = 0;
  for (const SampleOutcome& o : v.outcomes) {
    if (o.result.status != Status::Ok) {
      ++v.censored;
      continue;
    }
    ++v.valid;
    if (o.result.symmetric) {
      ++hits;
      ++v.histogram[{o.result.witness.j, o.result.witness.k}];
    }
  }
  v.censored_fraction = static_cast<double>(v.censored) / static_cast<double>(n_samples);
  v.low_confidence = v.censored_fraction > 0.2;
  if (v.valid > 0) {
    const double n = static_cast<double>(v.valid);
    v.estimate = static_cast<double>(hits) / n;
    v.stderr_ = std::sqrt(v.estimate * (1.0 - v.estimate) / n);
    for (double tol : params.report_tolerances) {
      std::size_t c = 0;
      for (const SampleOutcome& o : v.outcomes) {
        if (o.result.status == Status::Ok && o.result.witness.distance <= tol) ++c;
      }
      v.by_tolerance.emplace_back(tol, static_cast<double>(c) / n);
    }
  }
  return v;
}

// ---------------------------------------------------------------------------
// Modular-surface case studies

enum class HyperbolicCase { Circle, Horocycle, ClosedGeodesic };

struct CaseParams {
  hyp::cplx circle_center{0.004, 1.6};
  double circle_radius = 0.3;
  double injectivity_radius = 0.35;
  double horocycle_height = 1.5;
  hyp::SL2 geodesic_element{4.0, 3.0, 1.0, 1.0};
  std::size_t samples = 10000;
  std::size_t table_rows = 20;
  SymmetryParams symmetry{};
};

struct ReturnComparisonRow {
  CrossSectionPoint q;
  int j = 0;
  int k = 0;
  OneSidedResult plus;   // P_{+,j}(s, sigma)
  OneSidedResult minus;  // P_{-,k}(s, sigma)
  double distance = kInf;
};

struct CaseStudy {
  Domain domain;
  Hypersurface curve;
  SymmetryVerdict verdict;
  std::vector<ReturnComparisonRow> table;
};

inline Hypersurface case_curve(const Domain& domain, HyperbolicCase c, const CaseParams& p) {
  switch (c) {
    case HyperbolicCase::Circle:
      return Hypersurface::geodesic_circle(domain, p.circle_center, p.circle_radius, p.injectivity_radius);
    case HyperbolicCase::Horocycle:
      return Hypersurface::closed_horocycle(domain, p.horocycle_height);
    case HyperbolicCase::ClosedGeodesic:
      return Hypersurface::closed_geodesic(domain, p.geodesic_element);
  }
  throw ConfigError("unknown case");
}

// For each tabulated sample, the pair (j, k) minimising the distance between
// the one-sided images P_{+,j} and P_{-,k}.
inline std::vector<ReturnComparisonRow> one_sided_table(const Domain& domain, const Hypersurface& h,
                                                         const std::vector<SampleOutcome>& outcomes,
                                                         std::size_t rows, const SymmetryParams& params) {
  std::vector<ReturnComparisonRow> table;
  for (const SampleOutcome& o : outcomes) {
    if (table.size() >= rows) break;
    ReturnComparisonRow row;
    row.q = o.q;
    for (int j = 1; j <= params.j_max; ++j) {
      const OneSidedResult p = one_sided_return(domain, h, o.q.s, o.q.sigma, Side::Plus, j, params.dynamics);
      if (p.status != Status::Ok) break;
      for (int k = 1; k <= params.j_max; ++k) {
        const OneSidedResult m = one_sided_return(domain, h, o.q.s, o.q.sigma, Side::Minus, k, params.dynamics);
        if (m.status != Status::Ok) break;
        const double d = section_distance(domain, h, {p.s, p.sigma, Side::Plus}, p.time, {m.s, m.sigma, Side::Plus},
                                          m.time);
        if (d < row.distance) {
          row.distance = d;
          row.j = j;
          row.k = k;
          row.plus = p;
          row.minus = m;
        }
      }
    }
    table.push_back(row);
  }
  return table;
}

inline CaseStudy hhp_case_study(HyperbolicCase c, const CaseParams& p) {
  Domain domain = Domain::modular_surface();
  Hypersurface curve = case_curve(domain, c, p);
  SymmetryVerdict verdict = symmetry_measure(domain, curve, p.samples, p.symmetry);
  auto table = one_sided_table(domain, curve, verdict.outcomes, p.table_rows, p.symmetry);
  return {std::move(domain), std::move(curve), std::move(verdict), std::move(table)};
}

}  // namespace qerlab
