#pragma once

// Smooth cutoff profiles and Gauss-Legendre quadrature shared by the
// symbol, restriction and dynamics code.
//
// All bumps are built from the quintic smoothstep
//     S(u) = 10u^3 - 15u^4 + 6u^5,   u in [0,1],
// which is C^2 at both ends and satisfies S(u) + S(1-u) = 1.  The latter
// makes every plateau/shoulder profile below integrate exactly to the
// length of its plateau plus one shoulder width.

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <utility>
#include <vector>

namespace qerlab::smooth {

inline double smoothstep(double u) {
  if (u <= 0.0) return 0.0;
  if (u >= 1.0) return 1.0;
  return u * u * u * (10.0 + u * (-15.0 + 6.0 * u));
}

// \int_0^u S.
inline double smoothstep_integral(double u) {
  if (u <= 0.0) return 0.0;
  const double uc = std::min(u, 1.0);
  const double base = uc * uc * uc * uc * (2.5 + uc * (-3.0 + uc));
  return base + std::max(u - 1.0, 0.0);
}

// 1 on |t| <= inner, 0 on |t| >= outer, quintic shoulders in between.
inline double plateau(double t, double inner, double outer) {
  const double a = std::abs(t);
  if (a <= inner) return 1.0;
  if (a >= outer) return 0.0;
  return 1.0 - smoothstep((a - inner) / (outer - inner));
}

// psi_eps: 1 on [-eps/2, eps/2], 0 outside [-eps, eps].
inline double psi(double x, double eps) {
  if (eps <= 0.0) return 0.0;
  return plateau(x, 0.5 * eps, eps);
}

// Time window chi(t) = plateau(t; 1-delta, 1+delta) / 2, normalised so that
// \int chi = 1.
class TimeWindow {
 public:
  explicit TimeWindow(double delta = 0.1) : delta_(delta) {
    if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("time window delta must lie in (0,1)");
  }

  double delta() const { return delta_; }
  double support() const { return 1.0 + delta_; }

  double operator()(double t) const { return 0.5 * plateau(t, 1.0 - delta_, 1.0 + delta_); }

  // X(t) = \int_{-inf}^t chi.
  double antiderivative(double t) const {
    if (t < 0.0) return 1.0 - antiderivative(-t);
    const double inner = 1.0 - delta_;
    const double width = 2.0 * delta_;
    double g = 1.0 + std::min(t, inner);  // twice the integral, left half is 1
    if (t > inner) {
      const double u = (t - inner) / width;
      g += (std::min(t, 1.0 + delta_) - inner) - width * smoothstep_integral(std::min(u, 1.0));
    }
    return 0.5 * g;
  }

  // Points where chi changes its polynomial piece; quadrature panels split here.
  std::vector<double> breakpoints() const {
    return {-1.0 - delta_, -1.0 + delta_, 1.0 - delta_, 1.0 + delta_};
  }

 private:
  double delta_;
};

// Open-curve taper: 0 at both ends, 1 away from them, C^2 ramps of width
// fraction*L on each side.
inline double taper(double s, double length, double fraction) {
  const double w = fraction * length;
  if (w <= 0.0) return 1.0;
  return smoothstep(s / w) * smoothstep((length - s) / w);
}

// Frequency cap on B*H: 1 for |sigma| <= 1, 0 beyond 1 + eps0.
inline double frequency_cap(double sigma, double eps0) {
  return plateau(sigma, 1.0, 1.0 + eps0);
}

// Gauss-Legendre rule on [-1, 1].
struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

inline GaussRule make_gauss_rule(int n) {
  GaussRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0;
      double p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    double p0 = 1.0;
    double p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = n * (x * p1 - p0) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[i] = -x;
    rule.nodes[n - 1 - i] = x;
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  return rule;
}

inline const GaussRule& gauss_rule(int n) {
  static std::mutex mutex;
  static std::map<int, GaussRule> cache;
  std::lock_guard lock(mutex);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, make_gauss_rule(n)).first;
  return it->second;
}

template <class F>
double gauss_legendre(F&& f, double a, double b, int n) {
  const GaussRule& rule = gauss_rule(n);
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  double sum = 0.0;
  for (int i = 0; i < n; ++i) sum += rule.weights[i] * f(mid + half * rule.nodes[i]);
  return half * sum;
}

// Composite Gauss-Legendre over panels [cuts[i], cuts[i+1]].
template <class F>
double gauss_legendre_panels(F&& f, const std::vector<double>& cuts, int n) {
  double sum = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    if (cuts[i + 1] > cuts[i]) sum += gauss_legendre(f, cuts[i], cuts[i + 1], n);
  }
  return sum;
}

// Sorted, de-duplicated cut list restricted to [a, b] including both ends.
inline std::vector<double> panel_cuts(double a, double b, std::vector<double> extra) {
  std::vector<double> cuts{a, b};
  for (double c : extra) {
    if (c > a && c < b) cuts.push_back(c);
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end(),
                         [](double u, double v) { return std::abs(u - v) < 1e-15; }),
             cuts.end());
  return cuts;
}

}  // namespace qerlab::smooth
