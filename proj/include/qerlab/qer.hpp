#pragma once

// Cesaro means, variance sums and windowed exceptional fractions of
// restricted matrix elements.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qerlab/errors.hpp"
#include "qerlab/restriction.hpp"
#include "qerlab/symmetry.hpp"

namespace qerlab {

struct LadderPoint {
  int n = 0;
  double lambda = 0.0;   // lambda_N
  double mean = 0.0;     // E(N)
  double variance = 0.0; // S(N)
};

inline void require_sorted(const std::vector<MatrixElementRecord>& records) {
  for (std::size_t i = 1; i < records.size(); ++i) {
    if (records[i].lambda < records[i - 1].lambda) throw RangeError("records must be sorted by lambda");
  }
}

inline std::vector<int> default_ladder(int n) {
  std::vector<int> ladder;
  for (int d : {4, 2, 1}) {
    if (n / d > 0 && (ladder.empty() || n / d > ladder.back())) ladder.push_back(n / d);
  }
  return ladder;
}

// E(N) = mean of the first N values, S(N) = mean of (value - omega)^2.
inline std::vector<LadderPoint> cesaro_and_variance(const std::vector<MatrixElementRecord>& records, double omega,
                                                    const std::vector<int>& ladder) {
  require_sorted(records);
  std::vector<LadderPoint> out;
  int prev = 0;
  for (int n : ladder) {
    if (n <= prev || n > static_cast<int>(records.size())) throw RangeError("ladder must increase within the record count");
    prev = n;
    double sum = 0.0;
    double sq = 0.0;
    for (int j = 0; j < n; ++j) {
      const double v = records[static_cast<std::size_t>(j)].value;
      sum += v;
      sq += (v - omega) * (v - omega);
    }
    out.push_back({n, records[static_cast<std::size_t>(n) - 1].lambda, sum / n, sq / n});
  }
  return out;
}

struct WindowFraction {
  double lambda_lo = 0.0;
  double lambda_hi = 0.0;
  int modes = 0;
  int flagged = 0;
  double fraction = 0.0;
};

struct ExceptionalSet {
  double theta = 0.0;
  std::vector<int> indices;  // record positions with |value - omega| > theta
  double fraction = 0.0;
  std::vector<WindowFraction> windows;  // dyadic lambda windows [2^k, 2^{k+1})
};

inline ExceptionalSet extract_density_one(const std::vector<MatrixElementRecord>& records, double omega, double theta) {
  if (!(theta > 0.0)) throw RangeError("threshold must be positive");
  ExceptionalSet e;
  e.theta = theta;
  for (std::size_t j = 0; j < records.size(); ++j) {
    if (std::abs(records[j].value - omega) > theta) e.indices.push_back(static_cast<int>(j));
  }
  if (records.empty()) return e;
  e.fraction = static_cast<double>(e.indices.size()) / static_cast<double>(records.size());
  for (const MatrixElementRecord& r : records) {
    const double lo = std::exp2(std::floor(std::log2(r.lambda)));
    auto it = std::find_if(e.windows.begin(), e.windows.end(), [&](const auto& w) { return w.lambda_lo == lo; });
    if (it == e.windows.end()) {
      e.windows.push_back({lo, 2.0 * lo, 0, 0, 0.0});
      it = e.windows.end() - 1;
    }
    ++it->modes;
    if (std::abs(r.value - omega) > theta) ++it->flagged;
  }
  std::sort(e.windows.begin(), e.windows.end(), [](const auto& a, const auto& b) { return a.lambda_lo < b.lambda_lo; });
  for (WindowFraction& w : e.windows) w.fraction = static_cast<double>(w.flagged) / w.modes;
  return e;
}

struct ClassStats {
  int parity = 0;
  int count = 0;
  double mean = 0.0;
  double variance = 0.0;  // about omega
};

struct HistogramBin {
  double lo = 0.0;
  double hi = 0.0;
  int count = 0;
};

// Histogram of value / omega over [0, 3) plus an overflow bin.
inline std::vector<HistogramBin> value_histogram(const std::vector<MatrixElementRecord>& records, double omega,
                                                 int bins = 30) {
  std::vector<HistogramBin> h;
  const double width = 3.0 / bins;
  for (int b = 0; b < bins; ++b) h.push_back({b * width, (b + 1) * width, 0});
  h.push_back({3.0, std::numeric_limits<double>::infinity(), 0});
  for (const MatrixElementRecord& r : records) {
    const double x = omega != 0.0 ? r.value / omega : r.value;
    const int b = x < 0.0 ? 0 : std::min(bins, static_cast<int>(x / width));
    ++h[static_cast<std::size_t>(b)].count;
  }
  return h;
}

struct QerParams {
  std::vector<int> ladder;                          // empty: {n/4, n/2, n}
  std::vector<double> theta_factors{0.25, 0.5, 1.0};  // thresholds as multiples of |omega|
  double cutoff_eps = 0.1;                          // also reported: omega((1 - chi_eps) a)
  double near_zero = 0.1;                           // value < near_zero * omega counts as vanishing
};

struct QerReport {
  std::string symbol;
  std::string curve;
  double omega = 0.0;
  double omega_cutoff = 0.0;
  std::vector<LadderPoint> ladder;
  std::vector<ExceptionalSet> exceptional;
  std::vector<ClassStats> classes;
  std::vector<HistogramBin> histogram;
  double near_zero_fraction = 0.0;
  double near_zero_odd_agreement = 0.0;  // share of near-zero modes in the odd class
  int aliasing = 0;
  std::vector<MatrixElementRecord> records;
};

inline QerReport qer_report(const Symbol& a, const Domain& domain, const Hypersurface& h,
                            const std::vector<MatrixElementRecord>& records, const std::vector<int>& parity,
                            const QerParams& p = {}) {
  QerReport r;
  r.symbol = a.id();
  r.curve = h.describe();
  r.omega = omega(a, domain, h, 0.0);
  r.omega_cutoff = omega(a, domain, h, p.cutoff_eps);
  r.records = records;
  const int n = static_cast<int>(records.size());
  r.ladder = cesaro_and_variance(records, r.omega, p.ladder.empty() ? default_ladder(n) : p.ladder);
  for (double f : p.theta_factors) r.exceptional.push_back(extract_density_one(records, r.omega, f * std::abs(r.omega)));
  r.histogram = value_histogram(records, r.omega);
  int near = 0;
  int near_odd = 0;
  for (int j = 0; j < n; ++j) {
    const auto u = static_cast<std::size_t>(j);
    if (records[u].aliasing) ++r.aliasing;
    if (records[u].value < p.near_zero * r.omega) {
      ++near;
      if (u < parity.size() && parity[u] < 0) ++near_odd;
    }
  }
  r.near_zero_fraction = n > 0 ? static_cast<double>(near) / n : 0.0;
  r.near_zero_odd_agreement = near > 0 ? static_cast<double>(near_odd) / near : 0.0;
  if (!parity.empty()) {
    for (int cls : {1, -1, 0}) {
      ClassStats c;
      c.parity = cls;
      double sum = 0.0;
      double sq = 0.0;
      for (int j = 0; j < n && j < static_cast<int>(parity.size()); ++j) {
        const auto u = static_cast<std::size_t>(j);
        if (parity[u] != cls) continue;
        ++c.count;
        sum += records[u].value;
        sq += (records[u].value - r.omega) * (records[u].value - r.omega);
      }
      if (c.count > 0) {
        c.mean = sum / c.count;
        c.variance = sq / c.count;
        r.classes.push_back(c);
      }
    }
  }
  return r;
}

struct DichotomyParams {
  RestrictParams restrict{};
  QerParams qer{};
  std::size_t symmetry_samples = 10000;
  SymmetryParams symmetry{};
  unsigned threads = 1;
};

struct DichotomyReport {
  QerReport symmetric;
  QerReport generic;
  SymmetryVerdict symmetric_verdict;
  SymmetryVerdict generic_verdict;
};

inline DichotomyReport dichotomy_report(const Domain& domain, const Hypersurface& h_sym, const Hypersurface& h_gen,
                                        const Symbol& a, const SpectralBatch& batch, const DichotomyParams& p = {}) {
  DichotomyReport d;
  const auto run = [&](const Hypersurface& h) {
    return qer_report(a, domain, h, matrix_elements(a, batch, h, p.restrict, p.threads), batch.parity, p.qer);
  };
  d.symmetric = run(h_sym);
  d.generic = run(h_gen);
  SymmetryParams sp = p.symmetry;
  sp.threads = p.threads;
  d.symmetric_verdict = symmetry_measure(domain, h_sym, p.symmetry_samples, sp);
  d.generic_verdict = symmetry_measure(domain, h_gen, p.symmetry_samples, sp);
  return d;
}

}  // namespace qerlab
