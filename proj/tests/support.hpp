#pragma once

#include <random>
#include <vector>

#include "superball/geometry.hpp"

namespace testing_support {

using Engine = std::mt19937_64;

/// Random strictly increasing cuts 0 = k_1 < ... < k_{m+1} = n.
inline std::vector<int> random_cuts(int n, Engine& rng) {
  std::vector<int> cuts{0};
  std::bernoulli_distribution split(0.5);
  for (int i = 1; i < n; ++i) {
    if (split(rng)) cuts.push_back(i);
  }
  cuts.push_back(n);
  return cuts;
}

/// Gaussian coordinates times a log-uniform scale, so norms span several decades.
inline std::vector<double> random_point(int n, Engine& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> e(-2.0, 2.0);
  const double scale = std::pow(10.0, e(rng));
  std::vector<double> x(static_cast<std::size_t>(n));
  for (double& c : x) c = scale * g(rng);
  return x;
}

inline double rel_diff(double a, double b) {
  return std::fabs(a - b) / std::max({std::fabs(a), std::fabs(b), 1e-300});
}

}  // namespace testing_support
