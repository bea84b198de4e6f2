#pragma once

#include <cmath>
#include <complex>

namespace qerlab {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  constexpr Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  constexpr Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  constexpr Vec2 operator-() const { return {-x, -y}; }
  constexpr Vec2 operator*(double k) const { return {k * x, k * y}; }
  constexpr Vec2& operator+=(Vec2 o) {
    x += o.x;
    y += o.y;
    return *this;
  }
  constexpr bool operator==(const Vec2&) const = default;

  double norm() const { return std::hypot(x, y); }
  Vec2 normalized() const {
    const double n = norm();
    return {x / n, y / n};
  }
  std::complex<double> as_complex() const { return {x, y}; }
  static Vec2 from_complex(std::complex<double> z) { return {z.real(), z.imag()}; }
  static Vec2 polar(double angle) { return {std::cos(angle), std::sin(angle)}; }
  double angle() const { return std::atan2(y, x); }
};

constexpr Vec2 operator*(double k, Vec2 v) { return v * k; }
constexpr double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
constexpr double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }

// Quarter turns.  right_normal(t) is the clockwise rotation of t.
constexpr Vec2 right_normal(Vec2 t) { return {t.y, -t.x}; }
constexpr Vec2 left_normal(Vec2 t) { return {-t.y, t.x}; }

// Unsigned angle between two unit vectors, robust near 0 and pi.
inline double angle_between(Vec2 a, Vec2 b) {
  return std::atan2(std::abs(cross(a, b)), dot(a, b));
}

}  // namespace qerlab
