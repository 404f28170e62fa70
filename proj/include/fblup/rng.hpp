#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace fblup {

/// Deterministic sub-stream derivation: mixes a base seed with a stream tag so
/// that parallel work items draw independent, schedule-independent streams.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  // splitmix64 finalizer
  std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline Eigen::VectorXd gaussian_vector(std::mt19937_64& rng, int dim) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd v(dim);
  for (int i = 0; i < dim; ++i) v[i] = normal(rng);
  return v;
}

/// Uniform point on the unit sphere of R^dim.
inline Eigen::VectorXd unit_vector(std::mt19937_64& rng, int dim) {
  Eigen::VectorXd v = gaussian_vector(rng, dim);
  double n = v.norm();
  while (n < 1e-12) {
    v = gaussian_vector(rng, dim);
    n = v.norm();
  }
  return v / n;
}

/// Uniform point in the closed ball of given radius.
inline Eigen::VectorXd ball_point(std::mt19937_64& rng, int dim, double radius) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Eigen::VectorXd dir = unit_vector(rng, dim);
  double r = radius * std::pow(unif(rng), 1.0 / static_cast<double>(dim));
  return r * dir;
}

}  // namespace fblup
