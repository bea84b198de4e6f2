#pragma once

// Keys cubic convolution (a = -1/2) and natural / periodic cubic splines.

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace qerlab {

// Weights for the samples at offsets -1, 0, 1, 2 around a point at fraction
// t in [0, 1) past sample 0.  Reproduces quadratics exactly.
inline std::array<double, 4> keys_weights(double t) {
  constexpr double a = -0.5;
  const auto near = [](double x) { return ((a + 2.0) * x - (a + 3.0)) * x * x + 1.0; };         // |x| <= 1
  const auto far = [](double x) { return ((a * x - 5.0 * a) * x + 8.0 * a) * x - 4.0 * a; };     // 1 < |x| < 2
  return {far(1.0 + t), near(t), near(1.0 - t), far(2.0 - t)};
}

// Bicubic Keys interpolation of a function sampled on a regular grid
// x = x0 + i hx (i < nx), y = y0 + j hy (j < ny).  `value(i, j)` is called for
// indices inside the grid; outside samples count as `outside`.
template <class F>
double keys_bicubic(F&& value, int nx, int ny, double x0, double y0, double hx, double hy, double x, double y,
                    double outside = 0.0) {
  const double fx = (x - x0) / hx;
  const double fy = (y - y0) / hy;
  const int ix = static_cast<int>(std::floor(fx));
  const int iy = static_cast<int>(std::floor(fy));
  const auto wx = keys_weights(fx - ix);
  const auto wy = keys_weights(fy - iy);
  double sum = 0.0;
  for (int b = 0; b < 4; ++b) {
    const int j = iy - 1 + b;
    double row = 0.0;
    for (int a = 0; a < 4; ++a) {
      const int i = ix - 1 + a;
      const double v = (i >= 0 && i < nx && j >= 0 && j < ny) ? value(i, j) : outside;
      row += wx[a] * v;
    }
    sum += wy[b] * row;
  }
  return sum;
}

// Cubic spline through (x_i, v_i).  Natural end conditions, or periodic with
// period x_n - x_0 (then v_n must equal v_0).
class CubicSpline {
 public:
  CubicSpline() = default;
  CubicSpline(std::vector<double> x, std::vector<double> v, bool periodic = false)
      : x_(std::move(x)), v_(std::move(v)), periodic_(periodic) {
    const int n = static_cast<int>(x_.size());
    if (n < 2 || v_.size() != x_.size()) throw std::invalid_argument("spline needs >= 2 matching knots");
    for (int i = 1; i < n; ++i) {
      if (!(x_[i] > x_[i - 1])) throw std::invalid_argument("spline knots must increase");
    }
    if (periodic_ && std::abs(v_.front() - v_.back()) > 1e-12 * (1.0 + std::abs(v_.front())))
      throw std::invalid_argument("periodic spline needs equal end values");
    m_.assign(n, 0.0);
    if (n == 2) return;
    // Second derivatives m_i from the standard tridiagonal system.
    const int unknowns = periodic_ ? n - 1 : n;
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(unknowns, unknowns);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(unknowns);
    const auto h = [&](int i) { return x_[i + 1] - x_[i]; };
    if (periodic_) {
      const int m = n - 1;
      for (int i = 0; i < m; ++i) {
        const int ip = (i + 1) % m;
        const int im = (i - 1 + m) % m;
        const double hl = i == 0 ? h(m - 1) : h(i - 1);
        const double hr = h(i);
        A(i, im) += hl / 6.0;
        A(i, i) += (hl + hr) / 3.0;
        A(i, ip) += hr / 6.0;
        const double vl = i == 0 ? v_[m - 1] : v_[i - 1];
        rhs(i) = (v_[i + 1] - v_[i]) / hr - (v_[i] - vl) / hl;
      }
    } else {
      A(0, 0) = 1.0;
      A(n - 1, n - 1) = 1.0;
      for (int i = 1; i < n - 1; ++i) {
        A(i, i - 1) = h(i - 1) / 6.0;
        A(i, i) = (h(i - 1) + h(i)) / 3.0;
        A(i, i + 1) = h(i) / 6.0;
        rhs(i) = (v_[i + 1] - v_[i]) / h(i) - (v_[i] - v_[i - 1]) / h(i - 1);
      }
    }
    const Eigen::VectorXd sol = A.partialPivLu().solve(rhs);
    for (int i = 0; i < unknowns; ++i) m_[i] = sol(i);
    if (periodic_) m_[n - 1] = m_[0];
  }

  double operator()(double x) const {
    const int n = static_cast<int>(x_.size());
    if (periodic_) {
      const double period = x_.back() - x_.front();
      x = x_.front() + std::fmod(x - x_.front(), period);
      if (x < x_.front()) x += period;
    } else {
      x = std::clamp(x, x_.front(), x_.back());
    }
    int i = static_cast<int>(std::upper_bound(x_.begin(), x_.end(), x) - x_.begin()) - 1;
    i = std::clamp(i, 0, n - 2);
    const double h = x_[i + 1] - x_[i];
    const double a = (x_[i + 1] - x) / h;
    const double b = (x - x_[i]) / h;
    return a * v_[i] + b * v_[i + 1] + ((a * a * a - a) * m_[i] + (b * b * b - b) * m_[i + 1]) * h * h / 6.0;
  }

  const std::vector<double>& knots() const { return x_; }
  const std::vector<double>& values() const { return v_; }
  bool periodic() const { return periodic_; }

  // Bound on |spline|: max over a fine sampling of each interval.
  double sup_norm() const {
    double m = 0.0;
    for (std::size_t i = 0; i + 1 < x_.size(); ++i) {
      for (int k = 0; k <= 32; ++k) m = std::max(m, std::abs((*this)(x_[i] + (x_[i + 1] - x_[i]) * k / 32.0)));
    }
    return m;
  }

 private:
  std::vector<double> x_;
  std::vector<double> v_;
  std::vector<double> m_;
  bool periodic_ = false;
};

}  // namespace qerlab
