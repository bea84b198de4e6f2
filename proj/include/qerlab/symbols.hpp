#pragma once

// Symbols a(s, sigma) on B*H, the fold weight gamma, the cutoffs chi_eps,
// the limit functional
//
//     omega(a) = 2 / vol(S*M) * \int_{B*H} a(s, sigma) gamma^{-1}(sigma) ds dsigma,
//
// and the dynamically averaged symbols a_{T,eps}, a_{T,R,eps}.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "qerlab/dynamics.hpp"
#include "qerlab/errors.hpp"
#include "qerlab/interpolation.hpp"
#include "qerlab/parallel.hpp"
#include "qerlab/random.hpp"
#include "qerlab/smooth.hpp"

namespace qerlab {

// ---------------------------------------------------------------------------
// Symbols

// Function of sigma: a polynomial sum c_k sigma^k, or gamma(sigma) itself.
class SigmaProfile {
 public:
  static SigmaProfile constant(double c) { return SigmaProfile({c}); }
  static SigmaProfile polynomial(std::vector<double> coeffs) { return SigmaProfile(std::move(coeffs)); }
  static SigmaProfile gamma_weight() {
    SigmaProfile p({});
    p.gamma_ = true;
    return p;
  }

  double operator()(double sigma) const {
    if (gamma_) return std::sqrt(std::max(0.0, 1.0 - sigma * sigma));
    double v = 0.0;
    for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) v = v * sigma + *it;
    return v;
  }

  bool is_constant() const { return !gamma_ && coeffs_.size() <= 1; }
  double constant_value() const { return coeffs_.empty() ? 0.0 : coeffs_[0]; }

  // sup over |sigma| <= 1 + eps0 (polynomials are evaluated past the fold by
  // the frequency cap).
  double sup_norm(double reach = 1.0) const {
    if (gamma_) return 1.0;
    double m = 0.0;
    for (int k = -200; k <= 200; ++k) m = std::max(m, std::abs((*this)(reach * k / 200.0)));
    return m;
  }

  std::string describe() const {
    if (gamma_) return "gamma";
    std::ostringstream os;
    os.precision(17);
    os << "poly(";
    for (std::size_t i = 0; i < coeffs_.size(); ++i) os << (i ? "," : "") << coeffs_[i];
    os << ")";
    return os.str();
  }

 private:
  explicit SigmaProfile(std::vector<double> c) : coeffs_(std::move(c)) {}
  std::vector<double> coeffs_;
  bool gamma_ = false;
};

// Function of arclength: a constant or a cubic spline through a knot table.
class ArcProfile {
 public:
  static ArcProfile constant(double c) {
    ArcProfile p;
    p.constant_ = c;
    return p;
  }
  static ArcProfile spline(std::vector<double> s, std::vector<double> v, bool periodic) {
    ArcProfile p;
    p.spline_ = CubicSpline(std::move(s), std::move(v), periodic);
    p.is_spline_ = true;
    return p;
  }

  double operator()(double s) const { return is_spline_ ? spline_(s) : constant_; }
  bool is_constant() const { return !is_spline_; }

  ArcProfile scaled(double c) const {
    if (!is_spline_) return constant(c * constant_);
    std::vector<double> v = spline_.values();
    for (double& x : v) x *= c;
    return spline(spline_.knots(), v, spline_.periodic());
  }
  double sup_norm() const { return is_spline_ ? spline_.sup_norm() : std::abs(constant_); }
  std::vector<double> breakpoints() const { return is_spline_ ? spline_.knots() : std::vector<double>{}; }

  std::string describe() const {
    if (!is_spline_) {
      std::ostringstream os;
      os.precision(17);
      os << "const(" << constant_ << ")";
      return os.str();
    }
    std::ostringstream os;
    os.precision(17);
    os << (spline_.periodic() ? "pspline(" : "spline(");
    for (std::size_t i = 0; i < spline_.knots().size(); ++i) {
      os << (i ? "," : "") << spline_.knots()[i] << ":" << spline_.values()[i];
    }
    os << ")";
    return os.str();
  }

 private:
  double constant_ = 0.0;
  CubicSpline spline_;
  bool is_spline_ = false;
};

// Tabulated symbol on a regular (s, sigma) grid, Keys bicubic in between.
struct SymbolTable {
  double s0 = 0.0, ds = 1.0;
  double sigma0 = -1.0, dsigma = 1.0;
  int ns = 0, nsigma = 0;
  std::vector<double> values;  // row-major in s

  double at(int i, int j) const {
    i = std::clamp(i, 0, ns - 1);
    j = std::clamp(j, 0, nsigma - 1);
    return values[static_cast<std::size_t>(i) * nsigma + j];
  }

  double operator()(double s, double sigma) const {
    // Clamped extension: indices outside the grid reuse the edge samples.
    const double fx = (s - s0) / ds;
    const double fy = (sigma - sigma0) / dsigma;
    const int ix = static_cast<int>(std::floor(fx));
    const int iy = static_cast<int>(std::floor(fy));
    const auto wx = keys_weights(fx - ix);
    const auto wy = keys_weights(fy - iy);
    double sum = 0.0;
    for (int b = 0; b < 4; ++b) {
      double row = 0.0;
      for (int a = 0; a < 4; ++a) row += wx[a] * at(ix - 1 + a, iy - 1 + b);
      sum += wy[b] * row;
    }
    return sum;
  }

  // Reads "s,sigma,value" rows (header optional) covering a full regular grid.
  static SymbolTable from_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open symbol table " + path);
    std::map<std::pair<double, double>, double> cells;
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty() || line[0] == '#') continue;
      std::replace(line.begin(), line.end(), ',', ' ');
      std::istringstream ls(line);
      double s, sg, v;
      if (!(ls >> s >> sg >> v)) continue;  // header
      cells[{s, sg}] = v;
    }
    std::vector<double> ss, sgs;
    for (const auto& [key, v] : cells) {
      ss.push_back(key.first);
      sgs.push_back(key.second);
    }
    std::sort(ss.begin(), ss.end());
    ss.erase(std::unique(ss.begin(), ss.end()), ss.end());
    std::sort(sgs.begin(), sgs.end());
    sgs.erase(std::unique(sgs.begin(), sgs.end()), sgs.end());
    if (ss.size() < 2 || sgs.size() < 2 || cells.size() != ss.size() * sgs.size())
      throw ConfigError("symbol table " + path + " is not a full regular grid");
    SymbolTable t;
    t.ns = static_cast<int>(ss.size());
    t.nsigma = static_cast<int>(sgs.size());
    t.s0 = ss.front();
    t.ds = (ss.back() - ss.front()) / (t.ns - 1);
    t.sigma0 = sgs.front();
    t.dsigma = (sgs.back() - sgs.front()) / (t.nsigma - 1);
    for (double s : ss) {
      for (double sg : sgs) t.values.push_back(cells.at({s, sg}));
    }
    return t;
  }
};

struct MultiplicationSymbol {
  ArcProfile V;
};
struct SeparableSymbol {
  ArcProfile V;
  SigmaProfile g;
};
struct TabulatedSymbol {
  SymbolTable table;
};

class Symbol {
 public:
  using Variant = std::variant<MultiplicationSymbol, SeparableSymbol, TabulatedSymbol>;

  Symbol(std::string id, Variant v) : id_(std::move(id)), v_(std::move(v)) {}

  static Symbol one() { return Symbol("one", MultiplicationSymbol{ArcProfile::constant(1.0)}); }
  static Symbol multiplication(std::string id, ArcProfile V) { return Symbol(std::move(id), MultiplicationSymbol{std::move(V)}); }
  static Symbol separable(std::string id, ArcProfile V, SigmaProfile g) {
    return Symbol(std::move(id), SeparableSymbol{std::move(V), std::move(g)});
  }

  const std::string& id() const { return id_; }
  const Variant& variant() const { return v_; }

  double operator()(double s, double sigma) const {
    return std::visit(
        [&](const auto& a) -> double {
          using T = std::decay_t<decltype(a)>;
          if constexpr (std::is_same_v<T, MultiplicationSymbol>) return a.V(s);
          else if constexpr (std::is_same_v<T, SeparableSymbol>) return a.V(s) * a.g(sigma);
          else return a.table(s, sigma);
        },
        v_);
  }

  // True when a does not depend on sigma (pure multiplication operator).
  bool is_multiplication() const {
    if (std::holds_alternative<MultiplicationSymbol>(v_)) return true;
    if (const auto* sep = std::get_if<SeparableSymbol>(&v_)) return sep->g.is_constant();
    return false;
  }

  // Bound on |a| over |sigma| <= reach.
  double sup_norm(double reach = 1.0) const {
    return std::visit(
        [&](const auto& a) -> double {
          using T = std::decay_t<decltype(a)>;
          if constexpr (std::is_same_v<T, MultiplicationSymbol>) return a.V.sup_norm();
          else if constexpr (std::is_same_v<T, SeparableSymbol>) return a.V.sup_norm() * a.g.sup_norm(reach);
          else {
            double m = 0.0;
            for (double v : a.table.values) m = std::max(m, std::abs(v));
            return m * 1.25;  // Keys overshoot bound
          }
        },
        v_);
  }

  // Arclength points where a is only piecewise smooth.
  std::vector<double> s_breakpoints() const {
    return std::visit(
        [&](const auto& a) -> std::vector<double> {
          using T = std::decay_t<decltype(a)>;
          if constexpr (std::is_same_v<T, TabulatedSymbol>) {
            std::vector<double> b;
            for (int i = 0; i < a.table.ns; ++i) b.push_back(a.table.s0 + i * a.table.ds);
            return b;
          } else {
            return a.V.breakpoints();
          }
        },
        v_);
  }

  std::vector<double> sigma_breakpoints() const {
    if (const auto* t = std::get_if<TabulatedSymbol>(&v_)) {
      std::vector<double> b;
      for (int j = 0; j < t->table.nsigma; ++j) b.push_back(t->table.sigma0 + j * t->table.dsigma);
      return b;
    }
    return {};
  }

  std::string describe() const {
    return std::visit(
        [&](const auto& a) -> std::string {
          using T = std::decay_t<decltype(a)>;
          if constexpr (std::is_same_v<T, MultiplicationSymbol>) return "V=" + a.V.describe();
          else if constexpr (std::is_same_v<T, SeparableSymbol>) return "V=" + a.V.describe() + ";g=" + a.g.describe();
          else return "table(" + std::to_string(a.table.ns) + "x" + std::to_string(a.table.nsigma) + ")";
        },
        v_);
  }

 private:
  std::string id_;
  Variant v_;
};

// c * a.
inline Symbol scaled(const Symbol& a, double c) {
  return std::visit(
      [&](const auto& v) -> Symbol {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, TabulatedSymbol>) {
          TabulatedSymbol t = v;
          for (double& x : t.table.values) x *= c;
          return Symbol(a.id(), t);
        } else if constexpr (std::is_same_v<T, MultiplicationSymbol>) {
          return Symbol(a.id(), MultiplicationSymbol{v.V.scaled(c)});
        } else {
          return Symbol(a.id(), SeparableSymbol{v.V.scaled(c), v.g});
        }
      },
      a.variant());
}

// ---------------------------------------------------------------------------
// Weights and cutoffs

// gamma_{B*H}(sigma) = sqrt(1 - sigma^2); 0 at the fold.
inline double gamma(double sigma) {
  if (!(std::abs(sigma) <= 1.0)) throw DomainError("gamma requires |sigma| <= 1");
  return std::sqrt(std::max(0.0, 1.0 - sigma * sigma));
}

// gamma(s, xi) = |eta_n| / sqrt(sigma^2 + eta_n^2) on T*_H M.
inline double gamma_full(double sigma, double eta) {
  const double n = std::hypot(sigma, eta);
  if (n == 0.0) throw DomainError("gamma is undefined at the zero covector");
  return std::abs(eta) / n;
}

struct CutoffParams {
  double eps = 0.1;

  void validate() const {
    if (!(eps > 0.0 && eps < 0.5)) throw DomainError("cutoff aperture must satisfy 0 < eps < 1/2");
  }
};

// Collar half-width around H in which the cutoffs live.
inline double collar_width(const Domain& domain, const Hypersurface& h) {
  return std::min(0.5 * domain.curvature_scale(), 0.2 * h.length());
}

// chi_eps^(tan) = psi_eps(eta^2 / (sigma^2 + eta^2)) psi_eps(y_n).
inline double cutoff_tan(const Domain& domain, const Hypersurface& h, const PhasePoint& p, double eps) {
  const auto f = h.fermi(p.x, p.xi.normalized(), collar_width(domain, h));
  if (!f) return 0.0;
  const double n2 = f->sigma * f->sigma + f->eta_n * f->eta_n;
  return smooth::psi(f->eta_n * f->eta_n / n2, eps) * smooth::psi(f->y_n, eps);
}

// chi_eps^(n) = psi_eps(sigma^2 / (sigma^2 + eta^2)) psi_eps(y_n).
inline double cutoff_norm(const Domain& domain, const Hypersurface& h, const PhasePoint& p, double eps) {
  const auto f = h.fermi(p.x, p.xi.normalized(), collar_width(domain, h));
  if (!f) return 0.0;
  const double n2 = f->sigma * f->sigma + f->eta_n * f->eta_n;
  return smooth::psi(f->sigma * f->sigma / n2, eps) * smooth::psi(f->y_n, eps);
}

// chi_eps = chi^(tan) + chi^(n) restricted to S*_H M (y_n = 0, |xi| = 1).
inline double cutoff_on_section(double sigma, double eps) {
  if (eps <= 0.0) return 0.0;
  const double s2 = sigma * sigma;
  return smooth::psi(1.0 - s2, eps) + smooth::psi(s2, eps);
}

// sup of gamma^{-1} on the support of 1 - chi_eps.
inline double gamma_inv_bound(double eps) { return std::sqrt(2.0 / eps); }

// ---------------------------------------------------------------------------
// omega

struct QuadratureParams {
  double rel_tol = 1e-10;
  int n_start = 8;
  int n_max = 512;
};

// omega((1 - chi_eps) a); eps = 0 gives omega(a).  Integration in
// theta = asin(sigma) removes the gamma^{-1} endpoint singularity.
inline double omega(const Symbol& a, const Domain& domain, const Hypersurface& h, double eps,
                    const QuadratureParams& q = {}) {
  if (eps != 0.0) CutoffParams{eps}.validate();
  const double L = h.length();
  std::vector<double> s_extra = a.s_breakpoints();
  const std::vector<double> s_cuts = smooth::panel_cuts(0.0, L, s_extra);

  std::vector<double> th_extra{0.0};
  if (eps > 0.0) {
    for (double v : {0.5 * eps, eps}) {
      for (double s2 : {v, 1.0 - v}) {
        const double th = std::asin(std::sqrt(s2));
        th_extra.push_back(th);
        th_extra.push_back(-th);
      }
    }
  }
  for (double sg : a.sigma_breakpoints()) {
    if (std::abs(sg) < 1.0) th_extra.push_back(std::asin(sg));
  }
  const double half_pi = 0.5 * std::numbers::pi;
  const std::vector<double> th_cuts = smooth::panel_cuts(-half_pi, half_pi, th_extra);

  // Returns (integral, integral of the absolute value); the latter sets the
  // scale for the convergence test when the integral itself vanishes.
  const auto integrate = [&](int n) {
    double abs_sum = 0.0;
    const double v = smooth::gauss_legendre_panels(
        [&](double s) {
          return smooth::gauss_legendre_panels(
              [&](double th) {
                const double sigma = std::sin(th);
                const double f = (1.0 - cutoff_on_section(sigma, eps)) * a(s, sigma);
                abs_sum += std::abs(f);
                return f;
              },
              th_cuts, n);
        },
        s_cuts, n);
    return std::pair{v, abs_sum};
  };
  double prev = integrate(q.n_start).first;
  for (int n = 2 * q.n_start; n <= q.n_max; n *= 2) {
    const auto [cur, abs_sum] = integrate(n);
    const double count = static_cast<double>(n) * n * (s_cuts.size() - 1) * (th_cuts.size() - 1);
    const double scale = std::max(std::abs(cur), abs_sum / count * std::numbers::pi * L);
    if (std::abs(cur - prev) <= q.rel_tol * scale) return 2.0 * cur / domain.liouville_volume();
    prev = cur;
  }
  throw NumericalError("omega quadrature did not converge to the requested tolerance");
}

// ---------------------------------------------------------------------------
// Averaged symbols

struct AverageParams {
  double T = 20.0;
  double R = 0.0;
  double eps = 0.1;
  double delta = 0.1;  // time window half-shoulder
  DynamicsParams dynamics{};
};

struct AverageValue {
  double value = 0.0;
  int impacts = 0;        // impacts inside the window support
  bool aborted = false;   // orbit hit a corner inside the window
};

namespace detail {

// Section weight (1 - chi_eps) gamma^{-1} a at an impact.
inline double impact_weight(const Symbol& a, const Impact& imp, double eps) {
  const double cut = 1.0 - cutoff_on_section(imp.q.sigma, eps);
  if (cut == 0.0) return 0.0;
  return cut / std::sqrt(1.0 - imp.q.sigma * imp.q.sigma) * a(imp.q.s, imp.q.sigma);
}

}  // namespace detail

// a_{T,R,eps}(p) = 1/(2R) \int_{-R}^{R} a_{T,eps}(G^r p) dr.  Since
// a_{T,eps}(G^r p) = (1/T) sum_j w_j chi((t_j - r)/T), the r-integral is exact
// through the antiderivative X of chi; R = 0 is a_{T,eps}(p) itself.
inline AverageValue double_avg_symbol(const Symbol& a, const Domain& domain, const Hypersurface& h,
                                      const PhasePoint& p, const AverageParams& ap) {
  CutoffParams{ap.eps}.validate();
  if (!(ap.T > 0.0) || !(ap.R >= 0.0)) throw DomainError("averaging needs T > 0 and R >= 0");
  const smooth::TimeWindow chi(ap.delta);
  const double reach = chi.support() * ap.T + ap.R;
  DynamicsParams dyn = ap.dynamics;
  dyn.t_max = reach;
  AverageValue out;
  std::vector<Impact> impacts;
  try {
    impacts = impacts_in_window(domain, h, p, reach, reach, dyn);
  } catch (const TrajectoryAbort&) {
    out.aborted = true;
    return out;
  }
  double sum = 0.0;
  for (const Impact& imp : impacts) {
    double k;
    if (ap.R == 0.0) {
      k = chi(imp.t / ap.T) / ap.T;
    } else {
      k = (chi.antiderivative((imp.t + ap.R) / ap.T) - chi.antiderivative((imp.t - ap.R) / ap.T)) / (2.0 * ap.R);
    }
    if (k == 0.0) continue;
    ++out.impacts;
    sum += k * detail::impact_weight(a, imp, ap.eps);
  }
  out.value = sum;
  return out;
}

// a_{T,eps}(p) = (1/T) sum_j (1 - chi_eps) gamma^{-1} a(s_j, sigma_j) chi(t_j / T).
inline AverageValue time_avg_symbol(const Symbol& a, const Domain& domain, const Hypersurface& h,
                                    const PhasePoint& p, const AverageParams& ap) {
  AverageParams r0 = ap;
  r0.R = 0.0;
  return double_avg_symbol(a, domain, h, p, r0);
}

// chi_bar_T(q) = (1/T) sum over consecutive impact times of the orbit through
// the section point q of \int chi(t/T) dt, each interval integrated by
// Gauss-Legendre split at the kinks of chi.
struct ChiBar {
  double value = 0.0;
  bool covered = false;  // impacts bracket the window support on both sides
};

inline ChiBar chi_bar(const Domain& domain, const Hypersurface& h, const CrossSectionPoint& q, double T,
                      double delta, const DynamicsParams& params) {
  const smooth::TimeWindow chi(delta);
  const double edge = chi.support() * T;
  DynamicsParams dyn = params;
  dyn.t_max = edge + 100.0 * T;
  const PhasePoint p = lift(domain, h, q);
  std::vector<double> times{0.0};
  ChiBar out;
  bool fwd = false, bwd = false;
  {
    ImpactStream s(domain, h, p, params.t_sep, dyn);
    while (auto imp = s.next(dyn.t_max)) {
      times.push_back(imp->t);
      if (imp->t >= edge) {
        fwd = true;
        break;
      }
    }
  }
  {
    ImpactStream s(domain, h, p.reversed(), params.t_sep, dyn);
    while (auto imp = s.next(dyn.t_max)) {
      times.push_back(-imp->t);
      if (imp->t >= edge) {
        bwd = true;
        break;
      }
    }
  }
  std::sort(times.begin(), times.end());
  std::vector<double> kinks;
  for (double b : chi.breakpoints()) kinks.push_back(b * T);
  double sum = 0.0;
  for (std::size_t i = 0; i + 1 < times.size(); ++i) {
    const double lo = std::max(times[i], -edge);
    const double hi = std::min(times[i + 1], edge);
    if (!(hi > lo)) continue;
    sum += smooth::gauss_legendre_panels([&](double t) { return chi(t / T); }, smooth::panel_cuts(lo, hi, kinks), 16);
  }
  out.value = sum / T;
  out.covered = fwd && bwd;
  return out;
}

// ---------------------------------------------------------------------------
// Monte Carlo over mu_L

struct LiouvilleAverage {
  double mean = 0.0;
  double stderr_ = 0.0;
  double variance = 0.0;         // mean of (value - reference)^2
  double variance_stderr = 0.0;
  double reference = 0.0;        // omega((1 - chi_eps) a)
  std::size_t samples = 0;
  std::size_t aborted = 0;
  std::vector<double> values;
};

// Samples a_{T,R,eps} over mu_L; reports its mean and its mean squared
// deviation from omega((1 - chi_eps) a).
inline LiouvilleAverage liouville_average(const Symbol& a, const Domain& domain, const Hypersurface& h,
                                          const AverageParams& ap, std::size_t n_samples, std::uint64_t seed,
                                          unsigned threads) {
  LiouvilleAverage out;
  out.reference = omega(a, domain, h, ap.eps);
  const auto vals = parallel_map<AverageValue>(n_samples, threads, [&](std::size_t i) {
    SampleRng rng(seed, i);
    const PhasePoint p = sample_liouville(domain, rng);
    return double_avg_symbol(a, domain, h, p, ap);
  });
  double s1 = 0.0, s2 = 0.0, d1 = 0.0, d2 = 0.0;
  for (const AverageValue& v : vals) {
    if (v.aborted) {
      ++out.aborted;
      continue;
    }
    out.values.push_back(v.value);
    s1 += v.value;
    s2 += v.value * v.value;
    const double dev = (v.value - out.reference) * (v.value - out.reference);
    d1 += dev;
    d2 += dev * dev;
  }
  const double n = static_cast<double>(out.values.size());
  out.samples = out.values.size();
  if (n > 1) {
    out.mean = s1 / n;
    out.stderr_ = std::sqrt(std::max(0.0, (s2 / n - out.mean * out.mean) / (n - 1.0)));
    out.variance = d1 / n;
    out.variance_stderr = std::sqrt(std::max(0.0, (d2 / n - out.variance * out.variance) / (n - 1.0)));
  }
  return out;
}

inline LiouvilleAverage variance_over_SstarM(const Symbol& a, const Domain& domain, const Hypersurface& h,
                                             const AverageParams& ap, std::size_t n_samples, std::uint64_t seed,
                                             unsigned threads) {
  return liouville_average(a, domain, h, ap, n_samples, seed, threads);
}

}  // namespace qerlab
