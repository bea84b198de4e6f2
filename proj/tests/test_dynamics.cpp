#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "qerlab/dynamics.hpp"
#include "qerlab/random.hpp"
#include "qerlab/symmetry.hpp"

using namespace qerlab;
using std::numbers::pi;

namespace {

const Domain kStadium = Domain::stadium(1.0, 1.0);
const Domain kSquare = Domain::unit_square();
const Domain kModular = Domain::modular_surface();
const Domain kPlane = Domain::hyperbolic_plane();
const Hypersurface kAxis = Hypersurface::segment({0.0, -0.95}, {0.0, 0.95});
const Hypersurface kChord = Hypersurface::segment({0.2, -0.5}, {0.5, 0.7});
const Hypersurface kMidline = Hypersurface::segment({0.0, 0.5}, {1.0, 0.5});

PhasePoint at(Vec2 x, Vec2 xi, Model m = Model::Euclidean) { return {x, xi, m, std::nullopt}; }

// Mirror x -> -x of the stadium.
PhasePoint mirror(const PhasePoint& p) { return at({-p.x.x, p.x.y}, {-p.xi.x, p.xi.y}); }

}  // namespace

TEST(Flow, VerticalGeodesic) {
  const PhasePoint p = flow(kPlane, at({0.0, 1.0}, {0.0, 1.0}, Model::Hyperbolic), std::log(1.5));
  EXPECT_NEAR(p.x.x, 0.0, 1e-14);
  EXPECT_NEAR(p.x.y, 1.5, 1e-14);
  EXPECT_NEAR(p.xi.y, 1.0, 1e-14);
}

TEST(Flow, StadiumNormalIncidenceRetrace) {
  const PhasePoint p = flow(kStadium, at({0.0, 0.0}, {1.0, 0.0}), 4.0);
  EXPECT_NEAR(p.x.x, 0.0, 1e-14);
  EXPECT_NEAR(p.x.y, 0.0, 1e-14);
  EXPECT_NEAR(p.xi.x, -1.0, 1e-14);
}

TEST(Flow, UnitCovectorPreserved) {
  SampleRng rng(4, 0);
  for (const Domain* d : {&kStadium, &kModular}) {
    for (int i = 0; i < 200; ++i) {
      const PhasePoint p = sample_liouville(*d, rng);
      const PhasePoint q = flow(*d, p, rng.uniform(0.0, 20.0));
      ASSERT_NEAR(q.xi.norm(), 1.0, 1e-12);
      ASSERT_TRUE(d->contains(q.x) || d->signed_distance(q.x) < 1e-12);
    }
  }
}

TEST(Flow, GroupAndReversalLaws) {
  for (const Domain* d : {&kStadium, &kModular}) {
    SampleRng rng(8, 0);
    int checked = 0;
    for (int i = 0; i < 1000; ++i) {
      const PhasePoint p = sample_liouville(*d, rng);
      const double t = rng.uniform(0.0, 20.0);
      const double u = rng.uniform(-20.0, 20.0);
      try {
        const PhasePoint pt = flow(*d, p, t);
        ASSERT_LT(phase_distance(*d, flow(*d, pt, -t), p), 1e-10);
        ASSERT_LT(phase_distance(*d, flow(*d, pt, u), flow(*d, p, t + u)), 1e-9);
        ASSERT_LT(phase_distance(*d, flow(*d, pt.reversed(), t), p.reversed()), 1e-9);
        ++checked;
      } catch (const TrajectoryAbort&) {
      }
    }
    EXPECT_GE(checked, 990);
  }
}

// The same laws for the raw ray tracer, restarting from a detached point.
// Chaotic amplification of rounding limits the horizon.
TEST(Flow, RawTracerRestarts) {
  for (const Domain* d : {&kStadium, &kModular}) {
    SampleRng rng(9, 0);
    for (int i = 0; i < 1000; ++i) {
      const PhasePoint p = sample_liouville(*d, rng);
      const double t = rng.uniform(0.0, 4.0);
      const double u = rng.uniform(0.0, 4.0);
      try {
        const PhasePoint a = trace(*d, trace(*d, p, t), u);
        const PhasePoint b = trace(*d, p, t + u);
        ASSERT_LT(phase_distance(*d, a, b), 1e-9);
        ASSERT_LT(phase_distance(*d, trace(*d, trace(*d, p, t).reversed(), t), p.reversed()), 1e-9);
      } catch (const TrajectoryAbort&) {
      }
    }
  }
}

TEST(Flow, RejectsNonFiniteTime) {
  EXPECT_THROW(flow(kStadium, at({0.0, 0.0}, {1.0, 0.0}), std::nan("")), DomainError);
}

TEST(Flow, CornerHitAborts) {
  // Aim exactly at the wall-cap junction (1, 1) of the stadium.
  const Vec2 x{0.0, 0.0};
  const Vec2 d = Vec2{1.0, 1.0}.normalized();
  EXPECT_THROW(trace(kStadium, at(x, d), 3.0), TrajectoryAbort);
}

TEST(ImpactTime, Examples) {
  const DynamicsParams p;
  const Hypersurface centre = Hypersurface::segment({0.0, -0.5}, {0.0, 0.5});
  EXPECT_NEAR(*impact_time(kStadium, centre, at({0.0, 0.0}, {1.0, 0.0}), p), 4.0, 1e-10);

  const Hypersurface circle = Hypersurface::geodesic_circle(kPlane, {0.0, 1.0}, 0.5, 10.0);
  for (double s : {0.0, 0.7, 2.0}) {
    const FermiFrame f = circle.frame(s);
    EXPECT_NEAR(*impact_time(kPlane, circle, at(f.point, -f.normal, Model::Hyperbolic), p), 1.0, 1e-10);
  }

  const Hypersurface horo = Hypersurface::closed_horocycle(kModular, 1.5);
  EXPECT_NEAR(*impact_time(kModular, horo, at({0.0, 1.0}, {0.0, 1.0}, Model::Hyperbolic), p), std::log(1.5), 1e-10);
}

TEST(ImpactTime, CensoredAndInvalid) {
  DynamicsParams p;
  p.t_max = 1.0;
  const Hypersurface centre = Hypersurface::segment({0.0, -0.5}, {0.0, 0.5});
  EXPECT_FALSE(impact_time(kStadium, centre, at({0.0, 0.0}, {1.0, 0.0}), p).has_value());
  p.t_max = 0.0;
  EXPECT_THROW(impact_time(kStadium, centre, at({0.0, 0.0}, {1.0, 0.0}), p), DomainError);
}

// Impact times depend only on the direction of the covector.
TEST(ImpactTime, HomogeneityOfDegreeZero) {
  const DynamicsParams p;
  SampleRng rng(10, 0);
  for (int i = 0; i < 200; ++i) {
    PhasePoint q = sample_liouville(kStadium, rng);
    const auto t1 = impact_time(kStadium, kChord, q, p);
    q.xi = q.xi * 4.0;
    const auto t2 = impact_time(kStadium, kChord, q, p);
    ASSERT_EQ(t1.has_value(), t2.has_value());
    if (t1) {
      EXPECT_EQ(*t1, *t2);
    }
  }
}

TEST(ReturnMap, StadiumAxisRetrace) {
  const ReturnResult r = return_map_Phi(kStadium, kAxis, {0.95, 0.0, Side::Plus}, {});
  ASSERT_TRUE(r.ok());
  EXPECT_NEAR(r.q.s, 0.95, 1e-10);
  EXPECT_NEAR(r.q.sigma, 0.0, 1e-12);
  EXPECT_EQ(r.q.side, Side::Minus);
  EXPECT_NEAR(r.time, 4.0, 1e-10);
}

TEST(ReturnMap, SquareVerticalBounce) {
  const ReturnResult r = return_map_Phi(kSquare, kMidline, {0.3, 0.0, Side::Plus}, {});
  ASSERT_TRUE(r.ok());
  EXPECT_NEAR(r.q.s, 0.3, 1e-12);
  EXPECT_NEAR(r.q.sigma, 0.0, 1e-12);
  EXPECT_EQ(r.q.side, Side::Minus);
  EXPECT_NEAR(r.time, 1.0, 1e-10);
}

TEST(ReturnMap, BandIsRejected) {
  EXPECT_THROW(return_map_Phi(kSquare, kMidline, {0.3, 0.9995, Side::Plus}, {}), DomainError);
}

TEST(ReturnMap, StadiumChordAlmostAlwaysReturns) {
  SampleRng rng(12, 0);
  int ok = 0;
  for (int i = 0; i < 1000; ++i) {
    if (return_map_Phi(kStadium, kChord, sample_section(kChord, rng, 1e-3), {}).ok()) ++ok;
  }
  EXPECT_GE(ok, 990);
}

TEST(JthReturn, Examples) {
  const ImpactRecord a = jth_return(kStadium, kAxis, {0.95, 0.0, Side::Plus}, 2, {});
  ASSERT_TRUE(a.finite());
  EXPECT_NEAR(a.times.back(), 8.0, 1e-10);
  const ImpactRecord b = jth_return(kSquare, kMidline, {0.3, 0.0, Side::Plus}, 3, {});
  ASSERT_TRUE(b.finite());
  EXPECT_NEAR(b.times.back(), 3.0, 1e-10);
  EXPECT_EQ(b.reached, 3);
  EXPECT_THROW(jth_return(kSquare, kMidline, {0.3, 0.0, Side::Plus}, 0, {}), RangeError);
}

TEST(JthReturn, TimesStrictlySeparated) {
  const DynamicsParams p;
  SampleRng rng(13, 0);
  for (int i = 0; i < 300; ++i) {
    const ImpactRecord r = jth_return(kStadium, kChord, sample_section(kChord, rng, 1e-3), 8, p);
    for (std::size_t k = 1; k < r.times.size(); ++k) ASSERT_GE(r.times[k] - r.times[k - 1], p.t_sep);
    for (const PhasePoint& q : r.phase_points) ASSERT_TRUE(kChord.locate(q.x).has_value());
  }
}

TEST(JthReturn, CensoringReportsIndexReached) {
  DynamicsParams p;
  p.t_max = 2.5;
  const ImpactRecord r = jth_return(kSquare, kMidline, {0.3, 0.0, Side::Plus}, 5, p);
  EXPECT_EQ(r.status, Status::Censored);
  EXPECT_EQ(r.reached, 2);
}

TEST(OneSided, SquareAndAxisExamples) {
  const OneSidedResult sq = one_sided_return(kSquare, kMidline, 0.3, 0.0, Side::Plus, 1, {});
  EXPECT_NEAR(sq.s, 0.3, 1e-12);
  EXPECT_NEAR(sq.sigma, 0.0, 1e-12);
  EXPECT_NEAR(sq.time, 1.0, 1e-10);
  const OneSidedResult plus = one_sided_return(kStadium, kAxis, 0.95, 0.0, Side::Plus, 1, {});
  const OneSidedResult minus = one_sided_return(kStadium, kAxis, 0.95, 0.0, Side::Minus, 1, {});
  EXPECT_NEAR(plus.s, minus.s, 1e-12);
  EXPECT_NEAR(plus.sigma, minus.sigma, 1e-12);
  EXPECT_NEAR(plus.time, minus.time, 1e-12);
}

// Exhaustive pair search: P_{+,1}(q) against P_{-,k}(q), k <= 6.
TEST(OneSided, TiltedChordSidesDisagree) {
  const DynamicsParams p;
  SampleRng rng(14, 0);
  int valid = 0, distinct = 0;
  for (int i = 0; i < 10000; ++i) {
    const CrossSectionPoint q = sample_section(kChord, rng, p.sigma_band);
    const OneSidedResult plus = one_sided_return(kStadium, kChord, q.s, q.sigma, Side::Plus, 1, p);
    const OrbitReturns minus = record_returns(kStadium, kChord, {q.s, q.sigma, Side::Minus}, 6, p);
    if (plus.status != Status::Ok || minus.status != Status::Ok) continue;
    ++valid;
    bool match = false;
    for (const CrossSectionPoint& m : minus.points) {
      match = match || (std::abs(m.s - plus.s) + std::abs(m.sigma - plus.sigma) <= 1e-6);
    }
    if (!match) ++distinct;
  }
  ASSERT_GT(valid, 9500);
  EXPECT_GE(static_cast<double>(distinct) / valid, 0.98);
}

TEST(HReflection, NormalImpactIsInvolutive) {
  const PhasePoint p = at({-0.5, 0.3}, {1.0, 0.0});
  const ReflectionResult r1 = h_reflection_Rj(kStadium, kAxis, p, 1, {});
  ASSERT_EQ(r1.status, Status::Ok);
  EXPECT_NEAR(r1.time, 0.5, 1e-10);
  const ReflectionResult r2 = h_reflection_Rj(kStadium, kAxis, r1.point, 1, {});
  ASSERT_EQ(r2.status, Status::Ok);
  EXPECT_LT(phase_distance(kStadium, r2.point, p), 1e-9);
}

TEST(HReflection, AxisReflectionIsTheAmbientMirror) {
  SampleRng rng(15, 0);
  int checked = 0;
  for (int i = 0; i < 300; ++i) {
    const PhasePoint p = sample_liouville(kStadium, rng);
    for (int j = 1; j <= 3; ++j) {
      const ReflectionResult r = h_reflection_Rj(kStadium, kAxis, p, j, {});
      if (r.status != Status::Ok) continue;
      ASSERT_LT(phase_distance(kStadium, r.point, mirror(p)), 1e-8) << "j=" << j;
      ++checked;
    }
  }
  EXPECT_GT(checked, 800);
}

TEST(HReflection, GenericChordMapsDiffer) {
  SampleRng rng(16, 0);
  int valid = 0, differ = 0;
  for (int i = 0; i < 500; ++i) {
    const PhasePoint p = sample_liouville(kStadium, rng);
    const ReflectionResult r1 = h_reflection_Rj(kStadium, kChord, p, 1, {});
    const ReflectionResult r2 = h_reflection_Rj(kStadium, kChord, p, 2, {});
    if (r1.status != Status::Ok || r2.status != Status::Ok) continue;
    ++valid;
    if (phase_distance(kStadium, r1.point, r2.point) > 1e-6) ++differ;
  }
  ASSERT_GT(valid, 450);
  EXPECT_GE(static_cast<double>(differ) / valid, 0.98);
}

TEST(HReflection, InsufficientImpactsCensored) {
  DynamicsParams p;
  p.t_max = 0.1;
  EXPECT_EQ(h_reflection_Rj(kStadium, kAxis, at({-0.5, 0.3}, {1.0, 0.0}), 1, p).status, Status::Censored);
}

// Square midline: s' = s + sigma / sqrt(1 - sigma^2) (unfolded straight line),
// sigma' = sigma, so D Phi = [[1, (1 - sigma^2)^{-3/2}], [0, 1]].
TEST(SectionJacobian, SquareShearOracle) {
  for (double sigma : {0.0, 0.2, -0.15}) {
    const CrossSectionPoint q{0.5, sigma, Side::Plus};
    const SectionJacobian j = section_jacobian(kSquare, kMidline, q, {}, 1e-5);
    ASSERT_TRUE(j.available) << j.reason;
    EXPECT_NEAR(j.m[0], 1.0, 1e-8);
    EXPECT_NEAR(j.m[1], std::pow(1.0 - sigma * sigma, -1.5), 1e-6);
    EXPECT_NEAR(j.m[2], 0.0, 1e-8);
    EXPECT_NEAR(j.m[3], 1.0, 1e-8);
    EXPECT_NEAR(j.det(), 1.0, 1e-6);
  }
}

TEST(SectionJacobian, StadiumAreaPreserving) {
  SampleRng rng(18, 0);
  int available = 0;
  int outside = 0;
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const SectionJacobian j = section_jacobian(kStadium, kChord, sample_section(kChord, rng, 1e-3), {}, 1e-5);
    if (!j.available) continue;
    ++available;
    const double dev = std::abs(std::abs(j.det()) - 1.0);
    worst = std::max(worst, dev);
    if (dev >= 1e-4) ++outside;
  }
  EXPECT_GT(available, 900);
  EXPECT_LT(worst, 1e-4) << outside << " of " << available << " samples outside tolerance";
}

TEST(SectionJacobian, HyperbolicCircleAreaPreserving) {
  const Hypersurface circle = Hypersurface::geodesic_circle(kPlane, {0.0, 1.0}, 0.5, 10.0);
  SampleRng rng(19, 0);
  int available = 0;
  for (int i = 0; i < 200; ++i) {
    CrossSectionPoint q = sample_section(circle, rng, 1e-3);
    q.side = Side::Minus;  // inward sheet; the outward sheet never returns in the plane
    const SectionJacobian j = section_jacobian(kPlane, circle, q, {}, 1e-5);
    if (!j.available) continue;
    ++available;
    EXPECT_NEAR(std::abs(j.det()), 1.0, 1e-5);
  }
  EXPECT_GT(available, 190);
}

TEST(SectionJacobian, CensoredNeighbourUnavailable) {
  DynamicsParams p;
  p.t_max = 0.5;
  EXPECT_FALSE(section_jacobian(kSquare, kMidline, {0.5, 0.0, Side::Plus}, p, 1e-5).available);
}

// Kac identity on the suspension: mean return time over mu_{L,H} times the
// section mass 4L (two sheets, sigma in [-1, 1]) equals vol(S*M).
TEST(ReturnTime, KacIdentity) {
  DynamicsParams p;
  p.t_max = 2000.0;
  p.sigma_band = 1e-9;
  SampleRng rng(20, 0);
  double s1 = 0.0, s2 = 0.0;
  int n = 0;
  for (int i = 0; i < 20000; ++i) {
    const ReturnResult r = return_map_Phi(kStadium, kChord, sample_section(kChord, rng, p.sigma_band), p);
    if (r.status == Status::Aborted) continue;
    ASSERT_TRUE(r.ok()) << to_string(r.status);
    s1 += r.time;
    s2 += r.time * r.time;
    ++n;
  }
  const double mean = s1 / n;
  const double se = std::sqrt((s2 / n - mean * mean) / (n - 1));
  const double mass = 4.0 * kChord.length();
  EXPECT_NEAR(mean * mass, kStadium.liouville_volume(), 3.0 * se * mass);
}
