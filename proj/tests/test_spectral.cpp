#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numbers>

#include "qerlab/spectral.hpp"
#include "qerlab/spectral_io.hpp"

using namespace qerlab;

namespace {

constexpr double kPi2 = std::numbers::pi * std::numbers::pi;

const Domain kSquare = Domain::unit_square();
const Domain kStadium = Domain::stadium(1.0, 1.0);

EigenParams modes(int m) {
  EigenParams p;
  p.m = m;
  return p;
}

// Exact spectrum of the 5-point Dirichlet Laplacian on the unit square with
// spacing 1/N: (4/h^2)(sin^2(p pi h/2) + sin^2(q pi h/2)), 1 <= p, q < N.
std::vector<double> discrete_square_spectrum(int N, int count) {
  const double h = 1.0 / N;
  std::vector<double> v;
  for (int p = 1; p < N; ++p) {
    for (int q = 1; q < N; ++q) {
      const double sp = std::sin(p * std::numbers::pi * h / 2.0);
      const double sq = std::sin(q * std::numbers::pi * h / 2.0);
      v.push_back(4.0 / (h * h) * (sp * sp + sq * sq));
    }
  }
  std::sort(v.begin(), v.end());
  v.resize(static_cast<std::size_t>(count));
  return v;
}

std::vector<double> continuum_square_spectrum(int count) {
  std::vector<double> v;
  for (int p = 1; p <= count; ++p) {
    for (int q = 1; q <= count; ++q) v.push_back(kPi2 * (p * p + q * q));
  }
  std::sort(v.begin(), v.end());
  v.resize(static_cast<std::size_t>(count));
  return v;
}

const SpectralBatch& square_batch() {
  static const SpectralBatch b = compute_spectrum(kSquare, 1.0 / 64, modes(40));
  return b;
}

const SpectralBatch& small_stadium_batch() {
  static const SpectralBatch b = compute_spectrum(kStadium, 1.0 / 32, modes(60));
  return b;
}

}  // namespace

TEST(Grid, StadiumNodeCountMatchesArea) {
  const double h = 1.0 / 64;
  const Grid g = Grid::build(kStadium, h);
  EXPECT_NEAR(g.size() * h * h, kStadium.area(), 0.02 * kStadium.area());
}

TEST(Grid, MaskConsistentWithSignedDistance) {
  for (Stencil st : {Stencil::Plain, Stencil::Corrected}) {
    const double h = 1.0 / 32;
    const Grid g = Grid::build(kStadium, h, st);
    const double keep = st == Stencil::Plain ? -0.5 * h : -0.01 * h;
    int interior = 0;
    for (int j = 0; j < g.ny(); ++j) {
      for (int i = 0; i < g.nx(); ++i) {
        const bool inside = kStadium.signed_distance(g.position(i, j)) < keep;
        EXPECT_EQ(g.index(i, j) >= 0, inside) << i << "," << j;
        if (g.index(i, j) < 0) continue;
        ++interior;
        // Stencil neighbours stay inside the box.
        EXPECT_GT(i, 0);
        EXPECT_GT(j, 0);
        EXPECT_LT(i, g.nx() - 1);
        EXPECT_LT(j, g.ny() - 1);
      }
    }
    EXPECT_EQ(interior, g.size());
  }
}

// The shipped domains are convex and centred on grid lines, so a disconnected
// mask cannot arise; the degenerate empty mask is the reachable guard.
TEST(Grid, DegenerateMaskRejected) {
  EXPECT_THROW(Grid::build(Domain::stadium(0.1, 0.05), 0.2), GeometryError);
  EXPECT_THROW(Grid::build(kSquare, 0.0), RangeError);
  EXPECT_THROW(Grid::build(Domain::modular_surface(), 0.1), DomainError);
}

TEST(Laplacian, StructurallySymmetric) {
  for (Stencil st : {Stencil::Plain, Stencil::Corrected}) {
    EXPECT_EQ(max_asymmetry(assemble_laplacian(Grid::build(kSquare, 1.0 / 32, st))), 0.0);
    EXPECT_EQ(max_asymmetry(assemble_laplacian(Grid::build(kStadium, 1.0 / 32, st))), 0.0);
  }
}

TEST(Eigensolve, SquareFirstEigenvalue) {
  EXPECT_NEAR(square_batch().eigenvalues[0], 2.0 * kPi2, 0.002 * 2.0 * kPi2);
}

TEST(Eigensolve, SquareMultiplicityPattern) {
  const std::vector<double> pattern{2, 5, 5, 8, 10, 10, 13, 13, 17, 17};
  for (std::size_t j = 0; j < pattern.size(); ++j) {
    EXPECT_NEAR(square_batch().eigenvalues[j], pattern[j] * kPi2, 0.005 * pattern[j] * kPi2) << j;
  }
}

TEST(Eigensolve, MatchesDiscreteSquareSpectrum) {
  const auto exact = discrete_square_spectrum(64, 40);
  for (std::size_t j = 0; j < exact.size(); ++j) {
    EXPECT_NEAR(square_batch().eigenvalues[j], exact[j], 1e-9 * exact[j]) << j;
  }
}

TEST(Eigensolve, ResidualAndOrthonormalityContract) {
  for (const SpectralBatch* b : {&square_batch(), &small_stadium_batch()}) {
    const double h = b->grid.h();
    const Eigen::MatrixXd gram = b->phi.transpose() * b->phi * (h * h);
    const double dev = (gram - Eigen::MatrixXd::Identity(b->size(), b->size())).cwiseAbs().maxCoeff();
    EXPECT_LE(dev, 1e-8);
    const SparseMatrix a = assemble_laplacian(b->grid);
    for (int j = 0; j < b->size(); ++j) {
      const Eigen::VectorXd y = b->phi.col(j);
      const double res = (a * y - b->eigenvalues[j] * y).norm() / (b->eigenvalues[j] * y.norm());
      EXPECT_LE(res, 1e-8) << j;
      EXPECT_LE(b->residuals[j], 1e-8) << j;
      if (j > 0) {
        EXPECT_GE(b->eigenvalues[j], b->eigenvalues[j - 1]);
      }
    }
  }
}

// |lambda_h - lambda| / lambda = C lambda h^2 + O(h^4): the fitted C agrees across h.
TEST(Eigensolve, RichardsonConsistentConvergence) {
  const auto exact = continuum_square_spectrum(6);
  std::vector<double> fitted;
  for (int N : {32, 64, 128}) {
    const double h = 1.0 / N;
    const SpectralBatch b = compute_spectrum(kSquare, h, modes(6));
    double c = 0.0;
    for (std::size_t j = 0; j < exact.size(); ++j) {
      c = std::max(c, std::abs(b.eigenvalues[j] - exact[j]) / (exact[j] * exact[j] * h * h));
    }
    fitted.push_back(c);
  }
  EXPECT_NEAR(fitted[1] / fitted[0], 1.0, 0.02);
  EXPECT_NEAR(fitted[2] / fitted[1], 1.0, 0.01);
  EXPECT_LT(fitted[2], 1.0 / 12.0);
}

TEST(Eigensolve, ModeBudget) {
  const SparseMatrix a = assemble_laplacian(Grid::build(kSquare, 1.0 / 16));
  EXPECT_THROW(eigensolve(a, modes(0), 1.0, 4.0), RangeError);
  EXPECT_THROW(eigensolve(a, modes(601), 1.0, 4.0), RangeError);
  EXPECT_THROW(eigensolve(a, modes(200), 1.0, 4.0), RangeError);
}

TEST(Eigensolve, DeterministicAcrossRunsAndThreads) {
  EigenParams p = modes(30);
  const SpectralBatch a = compute_spectrum(kStadium, 1.0 / 24, p);
  p.threads = 3;
  const SpectralBatch b = compute_spectrum(kStadium, 1.0 / 24, p);
  EXPECT_EQ(a.eigenvalues, b.eigenvalues);
  EXPECT_EQ((a.phi - b.phi).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Parity, StadiumModesAreEvenOrOdd) {
  const SpectralBatch& b = small_stadium_batch();
  const auto mirror = b.grid.mirror();
  ASSERT_TRUE(mirror.has_value());
  int odd = 0;
  for (int j = 0; j < b.size(); ++j) {
    EXPECT_NE(b.parity[j], 0) << j;
    EXPECT_GT(b.parity_ratio[j], 1e3) << j;
    // Independent classification from the mirrored grid values.
    double even_part = 0.0, odd_part = 0.0;
    for (int k = 0; k < b.grid.size(); ++k) {
      const double u = b.phi(k, j);
      const double v = b.phi((*mirror)[static_cast<std::size_t>(k)], j);
      even_part += 0.25 * (u + v) * (u + v);
      odd_part += 0.25 * (u - v) * (u - v);
    }
    EXPECT_EQ(b.parity[j], even_part > odd_part ? 1 : -1) << j;
    if (b.parity[j] < 0) ++odd;
  }
  EXPECT_GT(odd, 0);
  EXPECT_LT(odd, b.size());
}

TEST(Weyl, CountingFunctionAgainstLatticeCount) {
  for (double lam2 = 30.0; lam2 <= 500.0; lam2 += 7.0) {
    const double lam = std::sqrt(lam2);
    int lattice = 0;
    for (int p = 1; p * p * kPi2 <= lam2; ++p) {
      for (int q = 1; kPi2 * (p * p + q * q) <= lam2; ++q) ++lattice;
    }
    EXPECT_LE(std::abs(lattice - weyl_count(1.0, 4.0, lam)), 2.0 * std::pow(lam, 2.0 / 3.0)) << lam2;
  }
}

TEST(Weyl, SquareBatchCountsTheDiscreteLattice) {
  const WeylReport r = weyl_check(square_batch(), kSquare);
  const auto exact = discrete_square_spectrum(64, 40);
  for (std::size_t i = 0; i < r.lambda.size(); ++i) {
    const double lam2 = r.lambda[i] * r.lambda[i];
    const auto n = std::upper_bound(exact.begin(), exact.end(), lam2) - exact.begin();
    const bool on_eigenvalue = std::any_of(exact.begin(), exact.end(),
                                           [&](double e) { return std::abs(e - lam2) < 1e-9 * e; });
    if (!on_eigenvalue) {
      EXPECT_EQ(r.count[i], n) << r.lambda[i];
    }
    EXPECT_NEAR(r.weyl[i], weyl_count(1.0, 4.0, r.lambda[i]), 1e-12);
  }
  EXPECT_DOUBLE_EQ(r.window_lo, 0.5 * (square_batch().frequencies.front() + square_batch().frequencies.back()));
  EXPECT_EQ(r.shift_checks.size(), 2u);
}

TEST(Weyl, InsufficientSpectrum) {
  const SpectralBatch b = compute_spectrum(kSquare, 1.0 / 32, modes(10));
  try {
    weyl_check(b, kSquare);
    FAIL() << "expected a refusal";
  } catch (const RangeError& e) {
    EXPECT_NE(std::string(e.what()).find("insufficient spectrum"), std::string::npos);
  }
}

TEST(Weyl, SkippedEigenvalueDetected) {
  SpectralBatch b = square_batch();
  b.eigenvalues.erase(b.eigenvalues.begin() + 5);
  b.frequencies.erase(b.frequencies.begin() + 5);
  EXPECT_THROW(weyl_check(b, kSquare), SolverError);
}

TEST(BatchIo, RoundTrip) {
  const SpectralBatch& b = small_stadium_batch();
  const auto path = std::filesystem::temp_directory_path() / "qerlab_test_batch.bin";
  save_batch(b, path.string());
  const SpectralBatch c = load_batch(path.string());
  std::filesystem::remove(path);
  EXPECT_EQ(c.eigenvalues, b.eigenvalues);
  EXPECT_EQ(c.parity, b.parity);
  EXPECT_EQ(c.grid.size(), b.grid.size());
  EXPECT_EQ((c.phi - b.phi).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_THROW(load_batch((std::filesystem::temp_directory_path() / "qerlab_missing.bin").string()), DependencyError);
}
