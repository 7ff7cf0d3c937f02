#pragma once

#include <cmath>
#include <random>
#include <span>

#include "superball/geometry.hpp"
#include "superball/rng.hpp"

namespace superball {

/// Uniform point in the unit superball, written to `out`.
///
/// Each block x_j is drawn with density proportional to exp(-||x_j||_2^p): a
/// uniform direction times a radius rho with rho^p ~ Gamma(d_j/p). With
/// Z ~ Exp(1) independent, x / (||x||^p + Z)^{1/p} is uniform in the ball, since
/// ||x||^p / (||x||^p + Z) ~ Beta(n/p, 1) and the direction is cone-distributed.
inline void sample_unit_ball(const SpaceParams& space, Rng& rng, std::span<double> out) {
  detail::check_dim(out.size(), space);
  const double p = space.p();
  std::normal_distribution<double> gauss(0.0, 1.0);
  double total = 0.0;
  std::size_t i = 0;
  for (int d : space.blocks().block_dims()) {
    const std::size_t begin = i;
    double ss = 0.0;
    for (int e = 0; e < d; ++e, ++i) {
      out[i] = gauss(rng);
      ss += out[i] * out[i];
    }
    std::gamma_distribution<double> radial(d / p, 1.0);
    const double g = radial(rng);
    total += g;
    const double scale = std::pow(g, 1.0 / p) / std::sqrt(ss);
    for (std::size_t k = begin; k < i; ++k) out[k] *= scale;
  }
  const double z = std::exponential_distribution<double>(1.0)(rng);
  const double shrink = std::pow(total + z, -1.0 / p);
  for (double& c : out) c *= shrink;
}

/// Uniform point in B(center, radius) (flat coordinates).
inline void sample_ball(const SpaceParams& space, std::span<const double> center, double radius,
                        Rng& rng, std::span<double> out) {
  sample_unit_ball(space, rng, out);
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = center[k] + radius * out[k];
}

/// Uniform point in the region.
inline void sample_region(const SpaceParams& space, const Region& region, Rng& rng,
                          std::span<double> out) {
  if (region.kind == RegionKind::torus) {
    detail::check_dim(out.size(), space);
    for (double& c : out) {
      c = region.size * uniform01(rng);
      if (c >= region.size) c = 0.0;  // rounding at the upper edge
    }
    return;
  }
  sample_unit_ball(space, rng, out);
  for (double& c : out) c *= region.size;
}

}  // namespace superball
