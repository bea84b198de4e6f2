#pragma once

// Deterministic per-sample random streams.  Sample i of a run seeded with
// `seed` always draws from the same stream, independent of thread count.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

#include "qerlab/geometry.hpp"

namespace qerlab {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

class SampleRng {
 public:
  SampleRng(std::uint64_t seed, std::uint64_t index) : engine_(splitmix64(splitmix64(seed) ^ index)) {}

  // Uniform on [0, 1) with 53 random bits (std distributions are not portable).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double a, double b) { return a + (b - a) * uniform(); }
  bool coin() { return (engine_() >> 63) != 0; }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

// Liouville-distributed point of S*M: uniform in area, uniform direction.
inline PhasePoint sample_liouville(const Domain& domain, SampleRng& rng) {
  const Vec2 dir = Vec2::polar(rng.uniform(-std::numbers::pi, std::numbers::pi));
  if (domain.is_billiard()) {
    const BoundingBox b = domain.bounding_box();
    while (true) {
      const Vec2 x{rng.uniform(b.xmin, b.xmax), rng.uniform(b.ymin, b.ymax)};
      if (domain.contains(x)) return {x, dir, Model::Euclidean, std::nullopt};
    }
  }
  if (!domain.is_modular()) throw DomainError("the hyperbolic plane has infinite Liouville measure");
  // dx dy / y^2 on F: x = sin(phi) with phi uniform makes the x-marginal
  // proportional to 1/sqrt(1 - x^2); then y = sqrt(1 - x^2) / U.
  const double x = std::sin(rng.uniform(-std::numbers::pi / 6.0, std::numbers::pi / 6.0));
  const double u = 1.0 - rng.uniform();  // (0, 1]
  return {Vec2{x, std::sqrt(1.0 - x * x) / u}, dir, Model::Hyperbolic, std::nullopt};
}

}  // namespace qerlab
