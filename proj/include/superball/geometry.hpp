#pragma once

// Mixed l_{p,k} norm geometry.
//
// A vector x in R^n is cut into consecutive blocks x_1, ..., x_m by a cut
// sequence 0 = k_1 < k_2 < ... < k_{m+1} = n. The norm is the l_p combination
// of the per-block Euclidean norms:
//
//     ||x||_{p,k} = ( sum_j ||x_j||_2^p )^{1/p}
//
// One block reproduces the Euclidean norm, n singleton blocks reproduce l_p.

#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "superball/error.hpp"

namespace superball {

using Point = std::vector<double>;

class BlockSpec {
 public:
  BlockSpec() = default;

  explicit BlockSpec(std::vector<int> cuts) : cuts_(std::move(cuts)) {
    detail::require(cuts_.size() >= 2, "BlockSpec: need at least two cuts");
    detail::require(cuts_.front() == 0, "BlockSpec: first cut must be 0");
    for (std::size_t i = 1; i < cuts_.size(); ++i) {
      detail::require(cuts_[i] > cuts_[i - 1], "BlockSpec: cuts must be strictly increasing");
    }
    dims_.reserve(cuts_.size() - 1);
    for (std::size_t i = 1; i < cuts_.size(); ++i) dims_.push_back(cuts_[i] - cuts_[i - 1]);
  }

  /// A single Euclidean block of dimension n.
  static BlockSpec euclidean(int n) { return BlockSpec({0, n}); }

  /// n blocks of size one (plain l_p).
  static BlockSpec singletons(int n) {
    std::vector<int> c(static_cast<std::size_t>(n) + 1);
    for (int i = 0; i <= n; ++i) c[static_cast<std::size_t>(i)] = i;
    return BlockSpec(std::move(c));
  }

  const std::vector<int>& cuts() const noexcept { return cuts_; }
  const std::vector<int>& block_dims() const noexcept { return dims_; }
  std::size_t blocks() const noexcept { return dims_.size(); }
  int n() const noexcept { return cuts_.empty() ? 0 : cuts_.back(); }

  friend bool operator==(const BlockSpec&, const BlockSpec&) = default;

 private:
  std::vector<int> cuts_;
  std::vector<int> dims_;
};

namespace detail {

inline double log_unit_euclidean_volume(int d) {
  const double h = 0.5 * d;
  return h * std::log(std::numbers::pi) - std::lgamma(h + 1.0);
}

}  // namespace detail

/// Lebesgue volume of the unit superball {x : ||x||_{p,k} <= 1}.
///
/// Dirichlet integral over the block radii:
///   vol = prod_j [V_{d_j} * Gamma(d_j/p + 1)] / Gamma(n/p + 1),
/// with V_d the volume of the Euclidean unit d-ball.
inline double log_unit_ball_volume(double p, const BlockSpec& blocks) {
  detail::require(p >= 1.0 && std::isfinite(p), "unit_ball_volume: p must be >= 1");
  detail::require(blocks.n() > 0, "unit_ball_volume: empty BlockSpec");
  double acc = -std::lgamma(blocks.n() / p + 1.0);
  for (int d : blocks.block_dims()) {
    acc += detail::log_unit_euclidean_volume(d) + std::lgamma(d / p + 1.0);
  }
  return acc;
}

inline double unit_ball_volume(double p, const BlockSpec& blocks) {
  return std::exp(log_unit_ball_volume(p, blocks));
}

/// Radius of the superball with volume one.
inline double r_unit(double p, const BlockSpec& blocks) {
  return std::exp(-log_unit_ball_volume(p, blocks) / blocks.n());
}

/// Exponent, block layout and the unit-volume radius of the ambient space.
class SpaceParams {
 public:
  SpaceParams() = default;

  SpaceParams(double p, BlockSpec blocks) : p_(p), blocks_(std::move(blocks)) {
    detail::require(std::isfinite(p) && p >= 1.0, "SpaceParams: p must be a finite real >= 1");
    detail::require(blocks_.n() > 0, "SpaceParams: empty BlockSpec");
    q_ = p_ == 1.0 ? INFINITY : p_ / (p_ - 1.0);
    r_unit_ = superball::r_unit(p_, blocks_);
  }

  double p() const noexcept { return p_; }
  double q() const noexcept { return q_; }
  const BlockSpec& blocks() const noexcept { return blocks_; }
  int n() const noexcept { return blocks_.n(); }
  double r_unit() const noexcept { return r_unit_; }
  /// p > 2 is usable for geometry but outside the range the constants cover.
  bool above_two() const noexcept { return p_ > 2.0; }
  /// Volume of a superball of radius r.
  double ball_volume(double r) const { return std::pow(r / r_unit_, n()); }

 private:
  double p_ = 2.0;
  double q_ = 2.0;
  BlockSpec blocks_;
  double r_unit_ = 0.0;
};

enum class RegionKind { ball, torus };

/// Simulation / packing domain. Ball regions are centred at the origin;
/// torus regions are [0, L)^n with periodic wrap.
struct Region {
  RegionKind kind = RegionKind::torus;
  double size = 1.0;  // R for a ball, L for a torus

  static Region ball(double radius) {
    detail::require(radius > 0.0, "Region: ball radius must be positive");
    return {RegionKind::ball, radius};
  }
  static Region torus(double side) {
    detail::require(side > 0.0, "Region: torus side must be positive");
    return {RegionKind::torus, side};
  }

  bool periodic() const noexcept { return kind == RegionKind::torus; }

  double volume(const SpaceParams& space) const {
    return kind == RegionKind::ball ? space.ball_volume(size) : std::pow(size, space.n());
  }
};

namespace detail {

inline void check_dim(std::size_t got, const SpaceParams& space) {
  if (got != static_cast<std::size_t>(space.n())) {
    throw InputError("dimension mismatch: got " + std::to_string(got) + " coordinates, expected " +
                     std::to_string(space.n()));
  }
}

/// Minimum-image magnitude of a coordinate difference on a circle of length L.
inline double wrap_abs(double delta, double side) noexcept {
  double a = std::fabs(delta);
  if (a >= side) a = std::fmod(a, side);
  return a > 0.5 * side ? side - a : a;
}

/// Norm of the vector whose i-th coordinate is coord(i). No allocation.
template <class Coord>
double mixed_norm(const SpaceParams& space, Coord&& coord) {
  const auto& dims = space.blocks().block_dims();
  const double p = space.p();
  if (p == 2.0) {
    double ss = 0.0;
    for (int i = 0; i < space.n(); ++i) {
      const double c = coord(i);
      ss += c * c;
    }
    return std::sqrt(ss);
  }
  double acc = 0.0;
  int i = 0;
  for (int d : dims) {
    double ss = 0.0;
    for (int e = i + d; i < e; ++i) {
      const double c = coord(i);
      ss += c * c;
    }
    if (ss == 0.0) continue;
    acc += p == 1.0 ? std::sqrt(ss) : std::pow(ss, 0.5 * p);
  }
  if (acc == 0.0) return 0.0;
  return p == 1.0 ? acc : std::pow(acc, 1.0 / p);
}

}  // namespace detail

inline double norm(std::span<const double> x, const SpaceParams& space) {
  detail::check_dim(x.size(), space);
  return detail::mixed_norm(space, [&](int i) { return x[static_cast<std::size_t>(i)]; });
}

/// ||y - x||, with per-coordinate minimum image on a torus. The minimum image
/// is exact for this norm because it is monotone in each |coordinate|.
inline double distance(std::span<const double> x, std::span<const double> y,
                       const SpaceParams& space, const Region& region) {
  detail::check_dim(x.size(), space);
  detail::check_dim(y.size(), space);
  if (region.periodic()) {
    const double side = region.size;
    return detail::mixed_norm(space, [&](int i) {
      const auto k = static_cast<std::size_t>(i);
      return detail::wrap_abs(y[k] - x[k], side);
    });
  }
  return detail::mixed_norm(space, [&](int i) {
    const auto k = static_cast<std::size_t>(i);
    return y[k] - x[k];
  });
}

/// Closed superball membership: distance(center, y) <= r.
inline bool contains(std::span<const double> center, double r, std::span<const double> y,
                     const SpaceParams& space, const Region& region) {
  return distance(center, y, space, region) <= r;
}

/// Whether a point lies in the region itself (closed ball, half-open torus box).
inline bool in_region(std::span<const double> x, const SpaceParams& space, const Region& region) {
  detail::check_dim(x.size(), space);
  if (region.kind == RegionKind::ball) return norm(x, space) <= region.size;
  for (double c : x) {
    if (!(c >= 0.0 && c < region.size)) return false;
  }
  return true;
}

/// Largest possible distance between two points of the region.
inline double region_diameter(const SpaceParams& space, const Region& region) {
  if (region.kind == RegionKind::ball) return 2.0 * region.size;
  const double half = 0.5 * region.size;
  return detail::mixed_norm(space, [&](int) { return half; });
}

}  // namespace superball
