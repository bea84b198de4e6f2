#include <gtest/gtest.h>

#include <cmath>

#include "qerlab/qer.hpp"
#include "qerlab/random.hpp"

using namespace qerlab;

namespace {

const Domain kStadium = Domain::stadium(1.0, 1.0);
const Domain kSquare = Domain::unit_square();
const Hypersurface kAxis = Hypersurface::segment({0.0, -0.9}, {0.0, 0.9});
const Hypersurface kChord = Hypersurface::segment({0.2, -0.5}, {0.5, 0.7});
const Hypersurface kMidline = Hypersurface::segment({0.0, 0.5}, {1.0, 0.5});

const std::vector<double> kKnots{0.0, 0.25, 0.5, 0.75, 1.0};
const std::vector<double> kValues{1.0, 1.5, 0.5, 1.2, 0.8};

ArcProfile profile(double L, double scale = 1.0) {
  std::vector<double> s;
  std::vector<double> v;
  for (std::size_t i = 0; i < kKnots.size(); ++i) {
    s.push_back(kKnots[i] * L);
    v.push_back(scale * kValues[i]);
  }
  return ArcProfile::spline(s, v, false);
}

EigenParams modes(int m) {
  EigenParams p;
  p.m = m;
  return p;
}

const SpectralBatch& stadium_batch() {
  static const SpectralBatch b = compute_spectrum(kStadium, 1.0 / 32, modes(60));
  return b;
}

std::vector<MatrixElementRecord> synthetic(const std::vector<double>& values) {
  std::vector<MatrixElementRecord> r;
  for (std::size_t j = 0; j < values.size(); ++j) {
    MatrixElementRecord m;
    m.j = static_cast<int>(j);
    m.lambda = 2.0 + 0.5 * static_cast<double>(j);
    m.value = values[j];
    m.norm2 = values[j];
    r.push_back(m);
  }
  return r;
}

}  // namespace

TEST(Cesaro, ConstantRecords) {
  const auto recs = synthetic(std::vector<double>(40, 0.7));
  for (const LadderPoint& p : cesaro_and_variance(recs, 0.4, {10, 20, 40})) {
    EXPECT_DOUBLE_EQ(p.mean, 0.7);
    EXPECT_NEAR(p.variance, 0.09, 1e-15);
  }
}

TEST(Cesaro, MatchesIndependentRecompute) {
  const Symbol a = Symbol::multiplication("V", profile(kChord.length()));
  const auto recs = matrix_elements(a, stadium_batch(), kChord);
  const double w = omega(a, kStadium, kChord, 0.0);
  const std::vector<int> ladder{15, 30, 60};
  const auto pts = cesaro_and_variance(recs, w, ladder);
  ASSERT_EQ(pts.size(), ladder.size());
  for (std::size_t i = 0; i < ladder.size(); ++i) {
    long double sum = 0.0L;
    long double sq = 0.0L;
    for (int j = 0; j < ladder[i]; ++j) {
      sum += recs[static_cast<std::size_t>(j)].value;
      sq += (recs[static_cast<std::size_t>(j)].value - w) * (recs[static_cast<std::size_t>(j)].value - w);
    }
    EXPECT_NEAR(pts[i].mean, static_cast<double>(sum / ladder[i]), 1e-12);
    EXPECT_NEAR(pts[i].variance, static_cast<double>(sq / ladder[i]), 1e-12);
    EXPECT_EQ(pts[i].n, ladder[i]);
    EXPECT_EQ(pts[i].lambda, recs[static_cast<std::size_t>(ladder[i]) - 1].lambda);
  }
}

TEST(Cesaro, LadderValidation) {
  auto recs = synthetic({1, 2, 3, 4, 5, 6, 7, 8});
  EXPECT_THROW(cesaro_and_variance(recs, 1.0, {4, 4}), RangeError);
  EXPECT_THROW(cesaro_and_variance(recs, 1.0, {0}), RangeError);
  EXPECT_THROW(cesaro_and_variance(recs, 1.0, {9}), RangeError);
  std::swap(recs[2].lambda, recs[5].lambda);
  EXPECT_THROW(cesaro_and_variance(recs, 1.0, {4}), RangeError);
  EXPECT_EQ(default_ladder(300), (std::vector<int>{75, 150, 300}));
  EXPECT_EQ(default_ladder(2), (std::vector<int>{1, 2}));
}

TEST(Exceptional, AllOmegaRecordsGiveEmptySet) {
  const ExceptionalSet e = extract_density_one(synthetic(std::vector<double>(50, 1.25)), 1.25, 0.01);
  EXPECT_TRUE(e.indices.empty());
  EXPECT_EQ(e.fraction, 0.0);
  EXPECT_THROW(extract_density_one(synthetic({1.0}), 1.0, 0.0), RangeError);
}

TEST(Exceptional, MonotoneInThresholdAndWindowed) {
  SampleRng rng(3, 0);
  std::vector<double> v(500);
  for (double& x : v) x = rng.uniform(0.0, 2.0);
  const auto recs = synthetic(v);
  double prev = 1.0;
  for (double theta : {0.01, 0.1, 0.25, 0.5, 0.75, 1.0, 1.5}) {
    const ExceptionalSet e = extract_density_one(recs, 1.0, theta);
    EXPECT_LE(e.fraction, prev);
    EXPECT_GE(e.fraction, 0.0);
    EXPECT_LE(e.fraction, 1.0);
    prev = e.fraction;
    int modes = 0;
    int flagged = 0;
    for (const WindowFraction& w : e.windows) {
      EXPECT_EQ(w.lambda_hi, 2.0 * w.lambda_lo);
      EXPECT_EQ(std::exp2(std::round(std::log2(w.lambda_lo))), w.lambda_lo);
      modes += w.modes;
      flagged += w.flagged;
    }
    EXPECT_EQ(modes, 500);
    EXPECT_EQ(flagged, static_cast<int>(e.indices.size()));
  }
}

TEST(Histogram, CountsEveryRecord) {
  const auto h = value_histogram(synthetic({-0.1, 0.0, 0.5, 1.0, 2.99, 3.0, 10.0}), 1.0);
  int total = 0;
  for (const HistogramBin& b : h) total += b.count;
  EXPECT_EQ(total, 7);
  EXPECT_EQ(h.front().count, 2);
  EXPECT_EQ(h.back().count, 2);
}

TEST(Report, ScalingEquivariance) {
  const double L = kChord.length();
  const Symbol a = Symbol::separable("a", profile(L), SigmaProfile::polynomial({1.0, 0.5}));
  const QerReport base =
      qer_report(a, kStadium, kChord, matrix_elements(a, stadium_batch(), kChord), stadium_batch().parity);
  for (double c : {-2.5, 3.0}) {
    const Symbol ca = Symbol::separable("ca", profile(L, c), SigmaProfile::polynomial({1.0, 0.5}));
    const QerReport r =
        qer_report(ca, kStadium, kChord, matrix_elements(ca, stadium_batch(), kChord), stadium_batch().parity);
    EXPECT_NEAR(r.omega, c * base.omega, 1e-12 * std::abs(c * base.omega));
    ASSERT_EQ(r.ladder.size(), base.ladder.size());
    for (std::size_t i = 0; i < r.ladder.size(); ++i) {
      const double d0 = base.ladder[i].mean - base.omega;
      EXPECT_NEAR(r.ladder[i].mean - r.omega, c * d0, 1e-12 * std::abs(c) * std::max(1.0, std::abs(d0)));
      EXPECT_NEAR(std::sqrt(r.ladder[i].variance), std::abs(c) * std::sqrt(base.ladder[i].variance),
                  1e-12 * std::abs(c) * std::sqrt(base.ladder[i].variance));
    }
  }
}

TEST(Report, Invariants) {
  const Symbol a = Symbol::one();
  const QerReport r =
      qer_report(a, kStadium, kChord, matrix_elements(a, stadium_batch(), kChord), stadium_batch().parity);
  EXPECT_NEAR(r.omega, kChord.length() / kStadium.area(), 1e-12);
  for (std::size_t i = 0; i < r.ladder.size(); ++i) {
    EXPECT_GE(r.ladder[i].variance, 0.0);
    if (i > 0) {
      EXPECT_GT(r.ladder[i].n, r.ladder[i - 1].n);
    }
  }
  ASSERT_EQ(r.exceptional.size(), 3u);
  for (std::size_t i = 0; i < r.exceptional.size(); ++i) {
    EXPECT_GE(r.exceptional[i].fraction, 0.0);
    EXPECT_LE(r.exceptional[i].fraction, 1.0);
    if (i > 0) {
      EXPECT_LE(r.exceptional[i].fraction, r.exceptional[i - 1].fraction);
    }
  }
  int counted = 0;
  for (const ClassStats& c : r.classes) counted += c.count;
  EXPECT_EQ(counted, stadium_batch().size());
}

// Odd modes vanish identically on the mirror axis; even modes carry the mass.
TEST(Dichotomy, AxisNearZeroModesAreTheOddClass) {
  const Symbol a = Symbol::one();
  const QerReport r = qer_report(a, kStadium, kAxis, matrix_elements(a, stadium_batch(), kAxis), stadium_batch().parity);
  int odd = 0;
  for (std::size_t j = 0; j < r.records.size(); ++j) {
    if (stadium_batch().parity[j] < 0) {
      ++odd;
      EXPECT_LT(r.records[j].norm2, 1e-10) << j;
    }
  }
  EXPECT_GE(r.near_zero_odd_agreement, 0.95);
  EXPECT_GE(r.near_zero_fraction, static_cast<double>(odd) / r.records.size());
  const ExceptionalSet& half = r.exceptional[1];
  EXPECT_GE(half.fraction, static_cast<double>(odd) / r.records.size());
}

TEST(Dichotomy, SquareControlVarianceDoesNotDecay) {
  const SpectralBatch b = compute_spectrum(kSquare, 1.0 / 64, modes(40));
  const Symbol a = Symbol::one();
  QerParams p;
  p.ladder = {10, 20, 40};
  const QerReport r = qer_report(a, kSquare, kMidline, matrix_elements(a, b, kMidline), b.parity, p);
  EXPECT_DOUBLE_EQ(r.omega, 1.0);
  for (const LadderPoint& l : r.ladder) EXPECT_GT(l.variance, 0.5) << l.n;
}

TEST(Dichotomy, IdenticalCurvesGiveIdenticalReports) {
  DichotomyParams p;
  p.symmetry_samples = 200;
  p.qer.ladder = {15, 30, 60};
  const Symbol a = Symbol::multiplication("V", profile(kChord.length()));
  const DichotomyReport d = dichotomy_report(kStadium, kChord, kChord, a, stadium_batch(), p);
  ASSERT_EQ(d.symmetric.records.size(), d.generic.records.size());
  for (std::size_t j = 0; j < d.symmetric.records.size(); ++j) {
    EXPECT_EQ(d.symmetric.records[j].value, d.generic.records[j].value);
  }
  for (std::size_t i = 0; i < d.symmetric.ladder.size(); ++i) {
    EXPECT_EQ(d.symmetric.ladder[i].mean, d.generic.ladder[i].mean);
    EXPECT_EQ(d.symmetric.ladder[i].variance, d.generic.ladder[i].variance);
  }
  EXPECT_EQ(d.symmetric_verdict.estimate, d.generic_verdict.estimate);
  EXPECT_EQ(d.symmetric_verdict.censored, d.generic_verdict.censored);
}
