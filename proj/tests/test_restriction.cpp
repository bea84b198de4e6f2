#include <gtest/gtest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <numbers>

#include "qerlab/random.hpp"
#include "qerlab/restriction.hpp"

using namespace qerlab;

namespace {

constexpr double kPi = std::numbers::pi;

const Domain kSquare = Domain::unit_square();
const Domain kStadium = Domain::stadium(1.0, 1.0);
const Hypersurface kMidline = Hypersurface::segment({0.0, 0.5}, {1.0, 0.5});
const Hypersurface kChord = Hypersurface::segment({0.2, -0.5}, {0.5, 0.7});

EigenParams modes(int m) {
  EigenParams p;
  p.m = m;
  return p;
}

const SpectralBatch& square_batch() {
  static const SpectralBatch b = compute_spectrum(kSquare, 1.0 / 128, modes(20));
  return b;
}

const SpectralBatch& stadium_batch() {
  static const SpectralBatch b = compute_spectrum(kStadium, 1.0 / 32, modes(60));
  return b;
}

// Exact eigenspace of a computed square mode: the pairs (m, n) whose discrete
// eigenvalue matches, with coefficients <phi_j, 2 sin(m pi x) sin(n pi y)>.
struct Component {
  int m;
  int n;
  double c;
};

std::vector<Component> square_components(const SpectralBatch& b, int j) {
  const double h = b.grid.h();
  std::vector<Component> out;
  for (int m = 1; m < 40; ++m) {
    for (int n = 1; n < 40; ++n) {
      const double sm = std::sin(m * kPi * h / 2.0);
      const double sn = std::sin(n * kPi * h / 2.0);
      const double lam2 = 4.0 / (h * h) * (sm * sm + sn * sn);
      if (std::abs(lam2 - b.eigenvalues[j]) > 1e-7 * lam2) continue;
      double c = 0.0;
      for (int k = 0; k < b.grid.size(); ++k) {
        const auto [i, jj] = b.grid.node(k);
        const Vec2 x = b.grid.position(i, jj);
        c += b.phi(k, j) * 2.0 * std::sin(m * kPi * x.x) * std::sin(n * kPi * x.y) * h * h;
      }
      out.push_back({m, n, c});
    }
  }
  return out;
}

// Exact midline trace of the computed mode.
double midline_exact(const std::vector<Component>& comp, double x) {
  double v = 0.0;
  for (const Component& c : comp) v += c.c * 2.0 * std::sin(c.m * kPi * x) * std::sin(c.n * kPi / 2.0);
  return v;
}

ArcProfile bumpy(double L) {
  return ArcProfile::spline({0.0, 0.25 * L, 0.5 * L, 0.75 * L, L}, {1.0, 1.5, 0.5, 1.2, 0.8}, false);
}

CurveTrace closed_trace(int n, double length, double lambda, const std::function<cplx(double)>& f) {
  CurveTrace t;
  t.lambda = lambda;
  t.length = length;
  t.closed = true;
  t.s = curve_nodes(length, true, n);
  for (double s : t.s) t.u.push_back(f(s));
  return t;
}

}  // namespace

TEST(Trace, SquareMidlineClosedForm) {
  const SpectralBatch& b = square_batch();
  for (int j = 0; j < b.size(); ++j) {
    const auto comp = square_components(b, j);
    double mass = 0.0;
    for (const Component& c : comp) mass += c.c * c.c;
    ASSERT_NEAR(mass, 1.0, 1e-8) << "mode " << j << " is not inside its exact eigenspace";
    const CurveTrace t = trace_on_curve(b, kMidline, j);
    double worst = 0.0;
    for (int k = 0; k < t.size(); ++k) worst = std::max(worst, std::abs(t.u[k].real() - midline_exact(comp, t.s[k])));
    EXPECT_LT(worst, 1e-3) << "mode " << j;
  }
}

TEST(Trace, EvenVerticalIndexVanishes) {
  const SpectralBatch& b = square_batch();
  int checked = 0;
  for (int j = 0; j < b.size(); ++j) {
    const auto comp = square_components(b, j);
    if (!std::all_of(comp.begin(), comp.end(), [](const Component& c) { return c.n % 2 == 0; })) continue;
    ++checked;
    EXPECT_LE(l2_on_curve(trace_on_curve(b, kMidline, j)), 1e-5) << j;
  }
  EXPECT_GE(checked, 2);
}

TEST(Trace, ConstantsReproduced) {
  SpectralBatch b = stadium_batch();
  b.phi.setConstant(0.75);
  const CurveTrace t = trace_on_curve(b, kChord, 0);
  for (const cplx& u : t.u) EXPECT_NEAR(u.real(), 0.75, 1e-14);
}

TEST(Trace, NodeCountResolvesWavelength) {
  const SpectralBatch& b = stadium_batch();
  for (int j : {0, 30, 59}) {
    const CurveTrace t = trace_on_curve(b, kChord, j);
    EXPECT_GE(t.size(), 8.0 * t.lambda * t.length / (2.0 * kPi));
    for (int k = 1; k < t.size(); ++k) EXPECT_NEAR(t.s[k] - t.s[k - 1], t.length / (t.size() - 1), 1e-14);
  }
}

TEST(Trace, ClearanceEnforced) {
  const SpectralBatch& b = stadium_batch();
  EXPECT_THROW(trace_on_curve(b, Hypersurface::segment({-0.5, 0.99}, {0.5, 0.99}), 0), GeometryError);
  EXPECT_THROW(trace_on_curve(b, Hypersurface::segment({0.0, 0.0}, {0.0, 1.5}), 0), GeometryError);
  EXPECT_THROW(trace_on_curve(b, kChord, b.size()), RangeError);
}

TEST(L2, SquareMidlineNorm) {
  const SpectralBatch& b = square_batch();
  int checked = 0;
  for (int j = 0; j < b.size(); ++j) {
    const auto comp = square_components(b, j);
    if (!std::all_of(comp.begin(), comp.end(), [](const Component& c) { return c.n % 2 == 1; })) continue;
    ++checked;
    EXPECT_NEAR(l2_on_curve(trace_on_curve(b, kMidline, j)), 2.0, 1e-3) << j;
  }
  EXPECT_GE(checked, 4);
}

TEST(L2, ZeroWeight) {
  const CurveTrace t = trace_on_curve(stadium_batch(), kChord, 7);
  EXPECT_EQ(l2_on_curve(t, [](double) { return 0.0; }), 0.0);
}

TEST(Quantize, IdentitySymbolIsTaperSquared) {
  const CurveTrace t = trace_on_curve(stadium_batch(), kChord, 11);
  const QuantizedTrace q = quantize_on_curve(Symbol::one(), t);
  for (int k = 0; k < t.size(); ++k) {
    const double tau = smooth::taper(t.s[k], t.length, 0.05);
    EXPECT_NEAR(std::abs(q.out.u[k] - tau * tau * t.u[k]), 0.0, 1e-15);
  }
  const CurveTrace c = closed_trace(64, 3.0, 5.0, [](double s) { return cplx(std::cos(s), 0.3 * std::sin(2 * s)); });
  const QuantizedTrace qc = quantize_on_curve(Symbol::one(), c);
  for (int k = 0; k < c.size(); ++k) EXPECT_EQ(qc.out.u[k], c.u[k]);
}

TEST(Quantize, MultiplicationIsPointwise) {
  const CurveTrace t = trace_on_curve(stadium_batch(), kChord, 5);
  const ArcProfile V = bumpy(t.length);
  const QuantizedTrace q = quantize_on_curve(Symbol::multiplication("V", V), t);
  for (int k = 0; k < t.size(); ++k) {
    const double tau = smooth::taper(t.s[k], t.length, 0.05);
    EXPECT_NEAR(std::abs(q.out.u[k] - V(t.s[k]) * tau * tau * t.u[k]), 0.0, 1e-14);
  }
}

TEST(Quantize, PlaneWaveMultiplier) {
  const double L = 2.0;
  const double lambda = 40.0;
  const Symbol g = Symbol::separable("g", ArcProfile::constant(1.0), SigmaProfile::polynomial({0.5, 1.0, -0.7}));
  for (int k : {-9, -3, 0, 4, 11}) {
    const double xi = 2.0 * kPi * k / L;
    const double sigma0 = xi / lambda;
    const CurveTrace t = closed_trace(128, L, lambda, [&](double s) { return std::polar(1.0, xi * s); });
    const QuantizedTrace q = quantize_on_curve(g, t);
    const double expect = 0.5 + sigma0 - 0.7 * sigma0 * sigma0;
    for (int m = 0; m < t.size(); ++m) EXPECT_NEAR(std::abs(q.out.u[m] - expect * t.u[m]), 0.0, 1e-8) << k;
    EXPECT_FALSE(q.aliasing);
  }
}

TEST(Quantize, ParsevalOnClosedCurves) {
  SampleRng rng(1, 0);
  std::vector<cplx> v(96);
  for (auto& x : v) x = {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
  const double L = 2.7;
  CurveTrace t = closed_trace(96, L, 10.0, [](double) { return cplx(0.0); });
  t.u = v;
  const FourierData f = fourier_series(t.u, L);
  double freq = 0.0;
  for (const cplx& c : f.coeff) freq += std::norm(c);
  EXPECT_NEAR(l2_on_curve(t), L * freq, 1e-10 * l2_on_curve(t));
}

TEST(Quantize, LinearInTheSymbol) {
  const CurveTrace t = trace_on_curve(stadium_batch(), kChord, 23);
  const ArcProfile V = bumpy(t.length);
  const Symbol a = Symbol::separable("a", V, SigmaProfile::polynomial({1.0, 0.0, 1.0}));
  const Symbol b = Symbol::separable("b", V, SigmaProfile::polynomial({0.0, 1.0}));
  const Symbol combo = Symbol::separable("c", V, SigmaProfile::polynomial({2.0, -3.0, 2.0}));
  const QuantizedTrace qa = quantize_on_curve(a, t);
  const QuantizedTrace qb = quantize_on_curve(b, t);
  const QuantizedTrace qc = quantize_on_curve(combo, t);
  for (int k = 0; k < t.size(); ++k) {
    EXPECT_NEAR(std::abs(qc.out.u[k] - (2.0 * qa.out.u[k] - 3.0 * qb.out.u[k])), 0.0, 1e-12);
  }
}

TEST(Quantize, AliasingFlagged) {
  const double L = 2.0;
  const double lambda = 20.0;
  const double xi = 2.0 * kPi * 10 / L;  // sigma = 1.57, beyond the cap
  const CurveTrace t = closed_trace(128, L, lambda, [&](double s) { return std::polar(1.0, xi * s); });
  const QuantizedTrace q = quantize_on_curve(Symbol::separable("g", ArcProfile::constant(1.0),
                                                               SigmaProfile::polynomial({1.0, 1.0})),
                                             t);
  EXPECT_TRUE(q.aliasing);
  EXPECT_GT(q.mass_above_cap, 0.99);
}

// Taper-adjusted closed form: value = \int V tau^2 |u_exact|^2 ds.
TEST(MatrixElement, SquareMidlineMultiplicationOracle) {
  const SpectralBatch& b = square_batch();
  const ArcProfile V = bumpy(1.0);
  const Symbol a = Symbol::multiplication("V", V);
  for (int j = 0; j < b.size(); ++j) {
    const auto comp = square_components(b, j);
    const MatrixElementRecord r = matrix_element(a, b, kMidline, j);
    double oracle = 0.0;
    const std::vector<double> cuts{0.0, 0.05, 0.25, 0.5, 0.75, 0.95, 1.0};
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
      oracle += boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
          [&](double x) {
            const double tau = smooth::taper(x, 1.0, 0.05);
            const double u = midline_exact(comp, x);
            return V(x) * tau * tau * u * u;
          },
          cuts[i], cuts[i + 1], 15, 1e-13);
    }
    EXPECT_NEAR(r.value, oracle, 1e-3) << j;
    EXPECT_LE(std::abs(r.imag), 1e-10);
  }
}

TEST(MatrixElement, IdentityWithoutTaperIsTheNorm) {
  RestrictParams p;
  p.taper_fraction = 0.0;
  for (int j : {0, 17, 42}) {
    const MatrixElementRecord r = matrix_element(Symbol::one(), stadium_batch(), kChord, j, p);
    EXPECT_NEAR(r.value, r.norm2, 1e-12 * r.norm2);
  }
}

TEST(MatrixElement, PositivityUpToDeskTolerance) {
  const ArcProfile V = bumpy(kChord.length());
  const Symbol a = Symbol::separable("a", V, SigmaProfile::polynomial({1.0, 0.0, 1.0}));
  const double bound = 0.05 * a.sup_norm();
  for (const MatrixElementRecord& r : matrix_elements(a, stadium_batch(), kChord)) EXPECT_GE(r.value, -bound) << r.j;
}

TEST(MatrixElement, ResolutionDoublingConverged) {
  const ArcProfile V = bumpy(kChord.length());
  const Symbol a = Symbol::separable("a", V, SigmaProfile::polynomial({1.0, 0.5, 1.0}));
  const SpectralBatch& b = stadium_batch();
  for (int j = 0; j < b.size(); j += 3) {
    const int n = default_node_count(b.frequencies[j], kChord.length());
    RestrictParams p1;
    p1.n_s = n;
    RestrictParams p2;
    p2.n_s = 2 * n - 1;
    const double v1 = matrix_element(a, b, kChord, j, p1).value;
    const double v2 = matrix_element(a, b, kChord, j, p2).value;
    EXPECT_LT(std::abs(v1 - v2), 1e-3 * std::abs(v2)) << j;
  }
}

TEST(MatrixElement, RecordsCarryIdentifiers) {
  const auto recs = matrix_elements(Symbol::one(), stadium_batch(), kChord, {}, 2);
  ASSERT_EQ(static_cast<int>(recs.size()), stadium_batch().size());
  for (int j = 0; j < static_cast<int>(recs.size()); ++j) {
    EXPECT_EQ(recs[j].j, j);
    EXPECT_EQ(recs[j].symbol, "one");
    EXPECT_EQ(recs[j].taper, "c2-smoothstep-0.05");
    EXPECT_EQ(recs[j].lambda, stadium_batch().frequencies[j]);
  }
}

TEST(MatrixElement, OddSymbolAveragesToZero) {
  const Symbol a = Symbol::separable("sigma", ArcProfile::constant(1.0), SigmaProfile::polynomial({0.0, 1.0}));
  const auto recs = matrix_elements(a, stadium_batch(), kChord);
  double sum = 0.0;
  double sq = 0.0;
  for (const MatrixElementRecord& r : recs) {
    sum += r.value;
    sq += r.value * r.value;
  }
  const double n = static_cast<double>(recs.size());
  const double mean = sum / n;
  const double se = std::sqrt((sq / n - mean * mean) / (n - 1.0));
  EXPECT_LE(std::abs(mean), 3.0 * se) << mean << " +- " << se;
}
