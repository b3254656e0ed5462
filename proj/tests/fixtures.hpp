#pragma once

// Deterministic datasets shared across test binaries.

#include <cstdint>

#include <nltsa/systems.hpp>
#include <nltsa/types.hpp>

namespace nltsa::fixtures {

/// Doubling dynamics on the lattice {0/p, 1/p, ...} with p = 1e9+7 (prime,
/// and 2 has order (p-1)/2).  Unlike iterating 2x mod 1 in doubles, the orbit
/// never collapses onto dyadic rationals, and small separations grow by an
/// exact factor of 2 per step until they reach O(1).
inline TimeSeries bernoulli_lattice_series(Index n, std::int64_t k0 = 12345) {
  constexpr std::int64_t p = 1000000007;
  TimeSeries s;
  s.values.resize(n);
  std::int64_t k = k0 % p;
  for (Index t = 0; t < n; ++t) {
    s.values[t] = static_cast<double>(k) / static_cast<double>(p);
    k = (2 * k) % p;
  }
  return s;
}

/// Left endpoints of the middle-thirds construction after `level` rounds:
/// all sums of c_i 3^{-i} with c_i in {0, 2}, as a 1-d cloud of 2^level rows.
inline PointCloud cantor_endpoints(int level) {
  const Index n = Index{1} << level;
  PointCloud cloud;
  cloud.points.resize(n, 1);
  cloud.time_index.resize(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    double x = 0.0;
    double scale = 1.0;
    for (int b = level - 1; b >= 0; --b) {
      scale /= 3.0;
      if ((i >> b) & 1) x += 2.0 * scale;
    }
    cloud.points(i, 0) = x;
    cloud.time_index[static_cast<std::size_t>(i)] = i;
  }
  return cloud;
}

/// Uniform points in [0,1)^2 from the library generator.
inline PointCloud unit_square_cloud(Index n, std::uint64_t seed) {
  RandomSource rng(seed);
  PointCloud cloud;
  cloud.points.resize(n, 2);
  cloud.time_index.resize(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    cloud.points(i, 0) = rng.uniform();
    cloud.points(i, 1) = rng.uniform();
    cloud.time_index[static_cast<std::size_t>(i)] = i;
  }
  return cloud;
}

/// Full-state attractor samples after a settled transient.
inline PointCloud lorenz_cloud(Index n, double dt = 0.01, Index discard = 2000) {
  Eigen::Vector3d x0(1.0, 1.0, 1.0);
  return cloud_from_trajectory(integrate_flow(LorenzFlow{}, x0, dt, n, discard));
}

/// Seeded AR(1) draw: x starts from one standard normal and follows
/// x <- phi x + g with unit-variance Gaussian innovations.
inline TimeSeries ar1_series(Index n, double phi, std::uint64_t seed) {
  RandomSource rng(seed);
  TimeSeries s;
  s.values.resize(n);
  double x = rng.gaussian();
  for (Index t = 0; t < n; ++t) {
    s.values[t] = x;
    x = phi * x + rng.gaussian();
  }
  return s;
}

}  // namespace nltsa::fixtures
