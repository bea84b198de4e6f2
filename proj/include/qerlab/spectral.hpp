#pragma once

// Dirichlet Laplacian eigenpairs on billiard domains.
//
// Five-point finite differences on a square grid with nodes at integer
// multiples of h.  The lowest m eigenpairs are found by spectrum slicing:
// LDL^T inertia counts split [0, lambda^2_top] into slices of a few dozen
// eigenvalues each, shift-invert Lanczos with full reorthogonalisation and
// deflated restarts finds every eigenvalue of a slice, and a final global
// Rayleigh-Ritz step restores orthonormality across slices.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <optional>
#include <queue>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <boost/math/tools/toms748_solve.hpp>

#include "qerlab/errors.hpp"
#include "qerlab/geometry.hpp"
#include "qerlab/parallel.hpp"
#include "qerlab/random.hpp"

namespace qerlab {

using SparseMatrix = Eigen::SparseMatrix<double>;

// Plain: Dirichlet mask, nodes closer than h/2 to the wall are dropped.
// Corrected: nodes down to 0.01 h from the wall are kept and the missing arm
// of the stencil sees the wall at its true distance theta h, which keeps the
// operator symmetric (Gibou-Fedkiw-Cheng-Kang weighting).
enum class Stencil { Plain, Corrected };

inline std::string to_string(Stencil s) { return s == Stencil::Plain ? "plain" : "corrected"; }

class Grid {
 public:
  static Grid build(const Domain& domain, double h, Stencil stencil = Stencil::Plain) {
    if (!domain.is_billiard()) throw DomainError("spectral grids need a billiard domain");
    if (!(h > 0.0)) throw RangeError("grid spacing must be positive");
    const BoundingBox box = domain.bounding_box();
    Grid g(domain);
    g.h_ = h;
    g.stencil_ = stencil;
    g.i0_ = static_cast<long>(std::floor(box.xmin / h)) - 1;
    g.j0_ = static_cast<long>(std::floor(box.ymin / h)) - 1;
    g.nx_ = static_cast<int>(static_cast<long>(std::ceil(box.xmax / h)) + 1 - g.i0_ + 1);
    g.ny_ = static_cast<int>(static_cast<long>(std::ceil(box.ymax / h)) + 1 - g.j0_ + 1);
    if (static_cast<long>(g.nx_) * g.ny_ > 1100L * 600L) throw RangeError("grid exceeds the supported size");
    const double keep = stencil == Stencil::Plain ? -0.5 * h : -0.01 * h;
    g.index_.assign(static_cast<std::size_t>(g.nx_) * g.ny_, -1);
    for (int j = 0; j < g.ny_; ++j) {
      for (int i = 0; i < g.nx_; ++i) {
        if (domain.signed_distance(g.position(i, j)) < keep) {
          g.index_[g.flat(i, j)] = static_cast<int>(g.nodes_.size());
          g.nodes_.push_back(g.flat(i, j));
        }
      }
    }
    if (g.nodes_.empty()) throw GeometryError("grid has no interior nodes");
    g.check_connected();
    return g;
  }

  const Domain& domain() const { return domain_; }
  double h() const { return h_; }
  Stencil stencil() const { return stencil_; }
  int nx() const { return nx_; }
  int ny() const { return ny_; }
  double x0() const { return static_cast<double>(i0_) * h_; }
  double y0() const { return static_cast<double>(j0_) * h_; }
  int size() const { return static_cast<int>(nodes_.size()); }

  std::size_t flat(int i, int j) const { return static_cast<std::size_t>(j) * nx_ + i; }
  Vec2 position(int i, int j) const {
    return {static_cast<double>(i0_ + i) * h_, static_cast<double>(j0_ + j) * h_};
  }
  // Interior index of grid node (i, j), or -1.
  int index(int i, int j) const {
    if (i < 0 || j < 0 || i >= nx_ || j >= ny_) return -1;
    return index_[flat(i, j)];
  }
  std::pair<int, int> node(int k) const {
    const std::size_t f = nodes_[static_cast<std::size_t>(k)];
    return {static_cast<int>(f % nx_), static_cast<int>(f / nx_)};
  }
  const std::vector<std::size_t>& nodes() const { return nodes_; }

  // Interior index permutation for the mirror x -> 2 x_axis - x, if the
  // mask is mirror symmetric.
  std::optional<std::vector<int>> mirror() const {
    const auto axis = domain_.mirror_axis_x();
    if (!axis) return std::nullopt;
    const double twice = 2.0 * *axis / h_;
    const long k2 = std::lround(twice);
    if (std::abs(twice - static_cast<double>(k2)) > 1e-9) return std::nullopt;
    std::vector<int> perm(nodes_.size());
    for (int k = 0; k < size(); ++k) {
      const auto [i, j] = node(k);
      const long im = k2 - (i0_ + i) - i0_;
      const int m = index(static_cast<int>(im), j);
      if (m < 0) return std::nullopt;
      perm[static_cast<std::size_t>(k)] = m;
    }
    return perm;
  }

  // Fraction theta in (0, 1] of the arm from interior node k towards
  // direction (di, dj) at which the wall is crossed.
  double wall_fraction(int k, int di, int dj) const {
    const auto [i, j] = node(k);
    const Vec2 p = position(i, j);
    const Vec2 e{static_cast<double>(di) * h_, static_cast<double>(dj) * h_};
    const auto f = [&](double t) { return domain_.signed_distance(p + e * t); };
    if (f(1.0) < 0.0) return 1.0;  // dropped node still inside: wall taken at the node
    boost::uintmax_t iters = 100;
    const auto r = boost::math::tools::toms748_solve(f, 0.0, 1.0, boost::math::tools::eps_tolerance<double>(50),
                                                     iters);
    return std::clamp(0.5 * (r.first + r.second), 1e-3, 1.0);
  }

 private:
  explicit Grid(Domain d) : domain_(std::move(d)) {}

  void check_connected() const {
    std::vector<char> seen(nodes_.size(), 0);
    std::queue<int> q;
    q.push(0);
    seen[0] = 1;
    std::size_t reached = 1;
    while (!q.empty()) {
      const int k = q.front();
      q.pop();
      const auto [i, j] = node(k);
      for (const auto& [di, dj] : {std::pair{1, 0}, {-1, 0}, {0, 1}, {0, -1}}) {
        const int m = index(i + di, j + dj);
        if (m >= 0 && !seen[static_cast<std::size_t>(m)]) {
          seen[static_cast<std::size_t>(m)] = 1;
          ++reached;
          q.push(m);
        }
      }
    }
    if (reached != nodes_.size()) throw GeometryError("grid interior is disconnected; refine h");
  }

  Domain domain_;
  double h_ = 0.0;
  Stencil stencil_ = Stencil::Plain;
  long i0_ = 0;
  long j0_ = 0;
  int nx_ = 0;
  int ny_ = 0;
  std::vector<int> index_;
  std::vector<std::size_t> nodes_;
};

// -Delta_h with Dirichlet elimination; symmetric positive definite.
inline SparseMatrix assemble_laplacian(const Grid& grid) {
  const double h2 = grid.h() * grid.h();
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(grid.size()) * 5);
  for (int k = 0; k < grid.size(); ++k) {
    const auto [i, j] = grid.node(k);
    double diag = 0.0;
    for (const auto& [di, dj] : {std::pair{1, 0}, {-1, 0}, {0, 1}, {0, -1}}) {
      const int m = grid.index(i + di, j + dj);
      if (m >= 0) {
        trip.emplace_back(k, m, -1.0 / h2);
        diag += 1.0 / h2;
      } else if (grid.stencil() == Stencil::Plain) {
        diag += 1.0 / h2;
      } else {
        diag += 1.0 / (grid.wall_fraction(k, di, dj) * h2);
      }
    }
    trip.emplace_back(k, k, diag);
  }
  SparseMatrix a(grid.size(), grid.size());
  a.setFromTriplets(trip.begin(), trip.end());
  a.makeCompressed();
  return a;
}

inline double max_asymmetry(const SparseMatrix& a) {
  const SparseMatrix d = a - SparseMatrix(a.transpose());
  double m = 0.0;
  for (int k = 0; k < d.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(d, k); it; ++it) m = std::max(m, std::abs(it.value()));
  }
  return m;
}

// ---------------------------------------------------------------------------
// Shifted factorisations

class ShiftedSolver {
 public:
  ShiftedSolver(const SparseMatrix& a, double shift) : shift_(shift) {
    SparseMatrix k = a;
    for (int i = 0; i < k.rows(); ++i) k.coeffRef(i, i) -= shift;
    ldlt_.compute(k);
    if (ldlt_.info() != Eigen::Success) throw SolverError("LDL^T factorisation failed at shift " + std::to_string(shift));
  }

  double shift() const { return shift_; }

  // Number of eigenvalues below the shift (Sylvester inertia of D).
  int count_below() const {
    const Eigen::VectorXd d = ldlt_.vectorD();
    int neg = 0;
    for (int i = 0; i < d.size(); ++i) {
      if (d[i] < 0.0) ++neg;
      if (d[i] == 0.0) throw SolverError("singular pivot: shift coincides with an eigenvalue");
    }
    return neg;
  }

  Eigen::VectorXd solve(const Eigen::VectorXd& b) const { return ldlt_.solve(b); }

 private:
  double shift_;
  Eigen::SimplicialLDLT<SparseMatrix, Eigen::Lower, Eigen::AMDOrdering<int>> ldlt_;
};

inline int count_below(const SparseMatrix& a, double shift) { return ShiftedSolver(a, shift).count_below(); }

// ---------------------------------------------------------------------------
// Eigensolver

struct EigenParams {
  int m = 10;
  double tol = 1e-10;         // relative residual ||A x - lambda x|| / (lambda ||x||)
  int slice_size = 40;        // target eigenvalues per slice
  int max_restarts = 8;       // deflated restarts per slice
  double cluster_width = 1e-6;
  std::uint64_t seed = 1;
  unsigned threads = 1;
};

struct EigenPair {
  double value;
  Eigen::VectorXd vector;  // unit 2-norm
};

namespace detail {

struct Slice {
  double lo;
  double hi;
  int count;
};

// Every eigenpair of A with eigenvalue in (lo, hi), `count` of them.
inline std::vector<EigenPair> solve_slice(const SparseMatrix& a, const Slice& sl, const EigenParams& p,
                                          std::uint64_t stream) {
  const int n = static_cast<int>(a.rows());
  const ShiftedSolver op(a, 0.5 * (sl.lo + sl.hi));
  const double sigma = op.shift();
  double norm_k = 0.0;  // Gershgorin bound on ||A - sigma||
  for (int k = 0; k < a.outerSize(); ++k) {
    double row = 0.0;
    for (SparseMatrix::InnerIterator it(a, k); it; ++it) row += std::abs(it.value());
    norm_k = std::max(norm_k, row);
  }
  norm_k += std::abs(sigma);
  std::vector<EigenPair> found;
  Eigen::MatrixXd locked(n, 0);
  SampleRng rng(p.seed, stream);

  const auto orthogonalise = [&](Eigen::VectorXd& w, const Eigen::MatrixXd& basis, int cols) {
    for (int pass = 0; pass < 2; ++pass) {
      if (cols > 0) w -= basis.leftCols(cols) * (basis.leftCols(cols).transpose() * w);
      if (locked.cols() > 0) w -= locked * (locked.transpose() * w);
    }
  };

  int attempts = 0;
  while (static_cast<int>(found.size()) < sl.count) {
    if (attempts++ > p.max_restarts) {
      throw SolverError("slice [" + std::to_string(sl.lo) + ", " + std::to_string(sl.hi) + "] found " +
                        std::to_string(found.size()) + " of " + std::to_string(sl.count) + " eigenvalues");
    }
    const int need = sl.count - static_cast<int>(found.size());
    const int kmax = std::min(n - static_cast<int>(locked.cols()), 8 * need + 80);
    Eigen::MatrixXd v(n, kmax);
    std::vector<double> alpha;
    std::vector<double> beta;
    Eigen::VectorXd w(n);
    for (int i = 0; i < n; ++i) w[i] = rng.uniform(-1.0, 1.0);
    orthogonalise(w, v, 0);
    v.col(0) = w / w.norm();

    std::vector<EigenPair> batch;
    for (int j = 0; j < kmax; ++j) {
      w = op.solve(v.col(j));
      alpha.push_back(v.col(j).dot(w));
      orthogonalise(w, v, j + 1);
      const double b = w.norm();
      const int dim = j + 1;
      const bool last = dim == kmax || b <= 1e-14 * std::abs(alpha.back());
      if (last || (dim >= need && dim % 5 == 0)) {
        Eigen::MatrixXd t = Eigen::MatrixXd::Zero(dim, dim);
        for (int i = 0; i < dim; ++i) {
          t(i, i) = alpha[static_cast<std::size_t>(i)];
          if (i + 1 < dim) t(i, i + 1) = t(i + 1, i) = beta[static_cast<std::size_t>(i)];
        }
        const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t);
        std::vector<int> inside;
        int converged = 0;
        for (int i = 0; i < dim; ++i) {
          const double mu = es.eigenvalues()[i];
          if (mu == 0.0) continue;
          const double lam = sigma + 1.0 / mu;
          if (!(lam > sl.lo && lam < sl.hi)) continue;
          inside.push_back(i);
          // ||A y - lam y|| <= ||A - sigma|| |beta s_last| / |mu|.
          const double est = norm_k * b * std::abs(es.eigenvectors()(dim - 1, i)) / std::abs(mu * lam);
          if (est <= 0.1 * p.tol) ++converged;
        }
        if (last || (converged == static_cast<int>(inside.size()) && converged >= 1 &&
                     (converged >= need || dim >= 2 * need + 40))) {
          batch.clear();
          for (int i : inside) {
            Eigen::VectorXd y = v.leftCols(dim) * es.eigenvectors().col(i);
            y.normalize();
            const double lam = y.dot(a * y);
            const double res = (a * y - lam * y).norm() / std::abs(lam);
            if (res <= p.tol) batch.push_back({lam, std::move(y)});
          }
          if (!batch.empty() || last) break;
        }
      }
      if (last) break;
      beta.push_back(b);
      v.col(j + 1) = w / b;
    }
    // Lock the new pairs; Ritz vectors of distinct Ritz values are orthogonal
    // already, the projection guards against near-duplicates.
    for (EigenPair& e : batch) {
      if (static_cast<int>(found.size()) >= sl.count) break;
      Eigen::VectorXd y = e.vector;
      if (locked.cols() > 0) y -= locked * (locked.transpose() * y);
      const double keep = y.norm();
      if (keep < 0.5) continue;
      y /= keep;
      locked.conservativeResize(Eigen::NoChange, locked.cols() + 1);
      locked.col(locked.cols() - 1) = y;
      found.push_back({y.dot(a * y), y});
    }
  }
  return found;
}

inline double weyl_lambda2(double area, double perimeter, double count) {
  // Positive root of area/(4 pi) x^2 - perimeter/(4 pi) x = count, in lambda^2.
  const double aa = area / (4.0 * std::numbers::pi);
  const double bb = perimeter / (4.0 * std::numbers::pi);
  const double x = (bb + std::sqrt(bb * bb + 4.0 * aa * count)) / (2.0 * aa);
  return x * x;
}

}  // namespace detail

struct Eigensystem {
  std::vector<double> values;  // ascending
  Eigen::MatrixXd vectors;     // columns, unit 2-norm, mutually orthonormal
  std::vector<double> residuals;
  std::vector<int> parity;     // +1 even, -1 odd, 0 unclassified (x mirror)
  std::vector<double> parity_ratio;
  int slices = 0;
};

// Lowest m eigenpairs of A.  `mirror`, when given, is the permutation of a
// symmetry commuting with A; clustered eigenvectors are rotated into its
// eigenbasis and each mode is classified by its even/odd energy ratio.
inline Eigensystem eigensolve(const SparseMatrix& a, const EigenParams& p, double area, double perimeter,
                              const std::optional<std::vector<int>>& mirror = std::nullopt) {
  const int n = static_cast<int>(a.rows());
  if (p.m < 1 || p.m > 600) throw RangeError("mode count must be in [1, 600]");
  if (p.m > n / 2) throw RangeError("mode count too large for the grid");

  // Top shift with at least m eigenvalues below it.
  double top = detail::weyl_lambda2(area, perimeter, p.m + 0.5);
  int top_count = count_below(a, top);
  for (int it = 0; top_count < p.m; ++it) {
    if (it > 60) throw SolverError("could not bracket the requested spectrum");
    top *= 1.15;
    top_count = count_below(a, top);
  }
  std::vector<detail::Slice> slices;
  {
    const int pieces = std::max(1, (top_count + p.slice_size - 1) / p.slice_size);
    std::vector<std::pair<double, int>> cuts{{0.0, 0}};
    for (int i = 1; i < pieces; ++i) {
      const double s = top * static_cast<double>(i) / pieces;
      cuts.emplace_back(s, count_below(a, s));
    }
    cuts.emplace_back(top, top_count);
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
      std::vector<detail::Slice> stack{{cuts[i].first, cuts[i + 1].first, cuts[i + 1].second - cuts[i].second}};
      while (!stack.empty()) {
        const detail::Slice s = stack.back();
        stack.pop_back();
        if (s.count == 0) continue;
        if (s.count > 2 * p.slice_size) {
          const double mid = 0.5 * (s.lo + s.hi);
          const int below = count_below(a, mid) - count_below(a, s.lo);
          stack.push_back({mid, s.hi, s.count - below});
          stack.push_back({s.lo, mid, below});
        } else {
          slices.push_back(s);
        }
      }
    }
  }
  std::sort(slices.begin(), slices.end(), [](const auto& x, const auto& y) { return x.lo < y.lo; });

  const auto parts = parallel_map<std::vector<EigenPair>>(slices.size(), p.threads, [&](std::size_t i) {
    return detail::solve_slice(a, slices[i], p, i);
  });
  std::vector<EigenPair> all;
  for (const auto& part : parts) all.insert(all.end(), part.begin(), part.end());
  if (static_cast<int>(all.size()) != top_count) throw SolverError("slice solves disagree with the inertia count");
  std::stable_sort(all.begin(), all.end(), [](const auto& x, const auto& y) { return x.value < y.value; });

  // Global Rayleigh-Ritz on the first m vectors (plus the next one when it
  // sits in the same cluster, which is then dropped after the rotation).
  int keep = p.m;
  while (keep < static_cast<int>(all.size()) &&
         all[static_cast<std::size_t>(keep)].value - all[static_cast<std::size_t>(keep) - 1].value <=
             p.cluster_width * all[static_cast<std::size_t>(keep)].value) {
    ++keep;
  }
  Eigen::MatrixXd basis(n, keep);
  for (int j = 0; j < keep; ++j) basis.col(j) = all[static_cast<std::size_t>(j)].vector;
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(basis);
  const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n, keep);
  const Eigen::MatrixXd aq = a * q;
  Eigen::MatrixXd proj = q.transpose() * aq;
  proj = 0.5 * (proj + proj.transpose()).eval();
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> rr(proj);
  Eigen::MatrixXd x = q * rr.eigenvectors();
  Eigen::VectorXd vals = rr.eigenvalues();

  // Symmetry-adapted basis inside clusters.
  Eigensystem out;
  out.slices = static_cast<int>(slices.size());
  const auto apply_mirror = [&](const Eigen::VectorXd& y) {
    Eigen::VectorXd r(y.size());
    for (int k = 0; k < y.size(); ++k) r[(*mirror)[static_cast<std::size_t>(k)]] = y[k];
    return r;
  };
  if (mirror) {
    for (int start = 0; start < keep;) {
      int end = start + 1;
      while (end < keep && vals[end] - vals[end - 1] <= p.cluster_width * vals[end]) ++end;
      const int c = end - start;
      if (c > 1) {
        Eigen::MatrixXd px(n, c);
        for (int j = 0; j < c; ++j) px.col(j) = apply_mirror(x.col(start + j));
        Eigen::MatrixXd mm = x.middleCols(start, c).transpose() * px;
        mm = 0.5 * (mm + mm.transpose()).eval();
        const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ms(mm);
        // Descending mirror eigenvalue: even members first.
        Eigen::MatrixXd rot = ms.eigenvectors().rowwise().reverse();
        x.middleCols(start, c) = (x.middleCols(start, c) * rot).eval();
        for (int j = 0; j < c; ++j) {
          const Eigen::VectorXd y = x.col(start + j);
          vals[start + j] = y.dot(a * y);
        }
        // Rayleigh quotients of the rotated members may differ in the last
        // bits; keep the batch sorted.
        std::vector<int> order(static_cast<std::size_t>(c));
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](int u, int v) { return vals[start + u] < vals[start + v]; });
        const Eigen::MatrixXd cols = x.middleCols(start, c);
        const Eigen::VectorXd cv = vals.segment(start, c);
        for (int j = 0; j < c; ++j) {
          x.col(start + j) = cols.col(order[static_cast<std::size_t>(j)]);
          vals[start + j] = cv[order[static_cast<std::size_t>(j)]];
        }
      }
      start = end;
    }
  }

  for (int j = 0; j < p.m; ++j) {
    Eigen::VectorXd y = x.col(j);
    Eigen::Index imax = 0;
    y.cwiseAbs().maxCoeff(&imax);
    if (y[imax] < 0.0) y = -y;
    x.col(j) = y;
  }
  out.vectors = x.leftCols(p.m);
  out.values.assign(vals.data(), vals.data() + p.m);
  for (int j = 0; j < p.m; ++j) {
    const Eigen::VectorXd y = out.vectors.col(j);
    out.residuals.push_back((a * y - out.values[static_cast<std::size_t>(j)] * y).norm() /
                            std::abs(out.values[static_cast<std::size_t>(j)]));
    if (mirror) {
      const Eigen::VectorXd py = apply_mirror(y);
      const double even = (0.5 * (y + py)).squaredNorm();
      const double odd = (0.5 * (y - py)).squaredNorm();
      const double ratio = std::max(even, odd) / std::max(std::min(even, odd), 1e-300);
      out.parity_ratio.push_back(ratio);
      out.parity.push_back(ratio > 1e3 ? (even > odd ? 1 : -1) : 0);
    } else {
      out.parity_ratio.push_back(0.0);
      out.parity.push_back(0);
    }
  }
  for (int j = 0; j < p.m; ++j) {
    if (out.residuals[static_cast<std::size_t>(j)] > std::max(p.tol, 1e-8)) {
      throw SolverError("mode " + std::to_string(j) + " residual " +
                        std::to_string(out.residuals[static_cast<std::size_t>(j)]) + " above tolerance");
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Batches

struct SpectralBatch {
  Grid grid;
  std::vector<double> eigenvalues;  // lambda_j^2, ascending
  std::vector<double> frequencies;  // lambda_j
  Eigen::MatrixXd phi;              // columns: values at interior nodes, sum phi^2 h^2 = 1
  std::vector<double> residuals;
  std::vector<int> parity;
  std::vector<double> parity_ratio;

  int size() const { return static_cast<int>(eigenvalues.size()); }

  // Grid value of mode j at node (i, jj), 0 off the mask.
  double value(int j, int i, int jj) const {
    const int k = grid.index(i, jj);
    return k < 0 ? 0.0 : phi(k, j);
  }
};

inline SpectralBatch compute_spectrum(const Domain& domain, double h, const EigenParams& p,
                                      Stencil stencil = Stencil::Plain) {
  Grid grid = Grid::build(domain, h, stencil);
  const SparseMatrix a = assemble_laplacian(grid);
  const Eigensystem es = eigensolve(a, p, domain.area(), domain.perimeter(), grid.mirror());
  SpectralBatch b{std::move(grid), es.values, {}, es.vectors / h, es.residuals, es.parity, es.parity_ratio};
  for (double v : b.eigenvalues) b.frequencies.push_back(std::sqrt(v));
  return b;
}

// ---------------------------------------------------------------------------
// Weyl law

struct WeylReport {
  std::vector<double> lambda;  // evaluation grid
  std::vector<int> count;      // N(lambda) from the batch
  std::vector<double> weyl;    // two-term Weyl count
  double window_lo = 0.0;      // upper half of the computed lambda window
  double window_hi = 0.0;
  double max_rel_deviation = 0.0;  // over the upper half
  std::vector<std::pair<double, int>> shift_checks;  // (shift, inertia count)
};

inline double weyl_count(double area, double perimeter, double lambda) {
  return (area * lambda * lambda - perimeter * lambda) / (4.0 * std::numbers::pi);
}

inline WeylReport weyl_check(const SpectralBatch& batch, const Domain& domain, int points = 200) {
  const int m = batch.size();
  if (m < 20) throw RangeError("insufficient spectrum: weyl_check needs at least 20 modes");
  const SparseMatrix a = assemble_laplacian(batch.grid);
  WeylReport r;
  // Completeness: inertia counts at gaps in the middle and at the top.
  for (int idx : {m / 2, m - 1}) {
    const double shift = 0.5 * (batch.eigenvalues[static_cast<std::size_t>(idx) - 1] +
                                batch.eigenvalues[static_cast<std::size_t>(idx)]);
    const int c = count_below(a, shift);
    r.shift_checks.emplace_back(shift, c);
    if (c != idx) {
      throw SolverError("skipped eigenvalues: inertia count " + std::to_string(c) + " below shift " +
                        std::to_string(shift) + " but the batch has " + std::to_string(idx) +
                        "; re-solve with a smaller slice size");
    }
  }
  const double lmin = batch.frequencies.front();
  const double lmax = batch.frequencies.back();
  r.window_lo = 0.5 * (lmin + lmax);
  r.window_hi = lmax;
  for (int i = 0; i < points; ++i) {
    const double lam = lmin + (lmax - lmin) * static_cast<double>(i) / (points - 1);
    const int n = static_cast<int>(std::upper_bound(batch.frequencies.begin(), batch.frequencies.end(), lam) -
                                   batch.frequencies.begin());
    const double w = weyl_count(domain.area(), domain.perimeter(), lam);
    r.lambda.push_back(lam);
    r.count.push_back(n);
    r.weyl.push_back(w);
    if (lam >= r.window_lo && w > 0.0) r.max_rel_deviation = std::max(r.max_rel_deviation, std::abs(n - w) / w);
  }
  return r;
}

}  // namespace qerlab
