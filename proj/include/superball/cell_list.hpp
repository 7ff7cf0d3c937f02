#pragma once

// Uniform grid for neighbour queries under the mixed norm.
//
// Every coordinate difference is bounded by the norm (|d_i| <= ||d||_{p,k}), so
// two points closer than `reach` in norm are closer than `reach` in sup norm and
// therefore sit in the same or adjacent cells when cells have side >= reach.
// Candidates still need an exact distance check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "superball/geometry.hpp"

namespace superball {

class CellGrid {
 public:
  static constexpr std::size_t max_cells = std::size_t{1} << 22;

  CellGrid() = default;

  /// Grid over the cube [lo, lo + extent)^n. Periodic grids wrap; others clamp.
  CellGrid(int n, double lo, double extent, double reach, bool periodic)
      : n_(n), lo_(lo), periodic_(periodic) {
    int m = reach > 0.0 ? static_cast<int>(std::floor(extent / reach)) : 1;
    m = std::max(m, 1);
    if (periodic_ && m < 3) m = 1;  // adjacent cells would alias
    // 3^n neighbour visits must stay cheaper than a linear scan.
    if (n_ > 6) m = 1;
    while (m > 1 && std::pow(static_cast<double>(m), n_) > static_cast<double>(max_cells)) --m;
    if (periodic_ && m < 3) m = 1;
    per_dim_ = m;
    side_ = extent / m;
    std::size_t total = 1;
    for (int i = 0; i < n_; ++i) total *= static_cast<std::size_t>(m);
    cells_.assign(total, {});
  }

  /// Grid covering a region for exclusion distance `reach`.
  static CellGrid for_region(const SpaceParams& space, const Region& region, double reach) {
    if (region.kind == RegionKind::torus) return CellGrid(space.n(), 0.0, region.size, reach, true);
    return CellGrid(space.n(), -region.size, 2.0 * region.size, reach, false);
  }

  int per_dim() const noexcept { return per_dim_; }
  std::size_t cell_count() const noexcept { return cells_.size(); }

  std::size_t cell_of(std::span<const double> x) const noexcept {
    std::size_t idx = 0;
    for (int i = n_ - 1; i >= 0; --i) {
      idx = idx * static_cast<std::size_t>(per_dim_) + coord_cell(x[static_cast<std::size_t>(i)]);
    }
    return idx;
  }

  void insert(std::uint32_t id, std::size_t cell) { cells_[cell].push_back(id); }

  void erase(std::uint32_t id, std::size_t cell) {
    auto& v = cells_[cell];
    auto it = std::find(v.begin(), v.end(), id);
    if (it != v.end()) {
      *it = v.back();
      v.pop_back();
    }
  }

  void relabel(std::uint32_t from, std::uint32_t to, std::size_t cell) {
    auto& v = cells_[cell];
    std::replace(v.begin(), v.end(), from, to);
  }

  void clear() {
    for (auto& c : cells_) c.clear();
  }

  /// Visit ids in the cells adjacent to x (including its own). fn returns false
  /// to stop early; the return value reports whether the scan completed.
  template <class Fn>
  bool for_each_candidate(std::span<const double> x, Fn&& fn) const {
    if (per_dim_ == 1) {
      for (std::uint32_t id : cells_[0]) {
        if (!fn(id)) return false;
      }
      return true;
    }
    int base[16];
    int offset[16];
    for (int i = 0; i < n_; ++i) {
      base[i] = static_cast<int>(coord_cell(x[static_cast<std::size_t>(i)]));
      offset[i] = -1;
    }
    for (;;) {
      std::size_t idx = 0;
      bool valid = true;
      for (int i = n_ - 1; i >= 0; --i) {
        int c = base[i] + offset[i];
        if (periodic_) {
          c = (c + per_dim_) % per_dim_;
        } else if (c < 0 || c >= per_dim_) {
          valid = false;
          break;
        }
        idx = idx * static_cast<std::size_t>(per_dim_) + static_cast<std::size_t>(c);
      }
      if (valid) {
        for (std::uint32_t id : cells_[idx]) {
          if (!fn(id)) return false;
        }
      }
      int i = 0;
      while (i < n_ && offset[i] == 1) offset[i++] = -1;
      if (i == n_) return true;
      ++offset[i];
    }
  }

 private:
  std::size_t coord_cell(double c) const noexcept {
    if (per_dim_ == 1) return 0;
    long k = static_cast<long>(std::floor((c - lo_) / side_));
    if (periodic_) {
      k %= per_dim_;
      if (k < 0) k += per_dim_;
    } else {
      k = std::clamp<long>(k, 0, per_dim_ - 1);
    }
    return static_cast<std::size_t>(k);
  }

  int n_ = 0;
  double lo_ = 0.0;
  double side_ = 1.0;
  int per_dim_ = 1;
  bool periodic_ = false;
  std::vector<std::vector<std::uint32_t>> cells_{1};
};

}  // namespace superball
