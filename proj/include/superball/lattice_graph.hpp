#pragma once

// Constructive packings from a cube tiling.
//
// The cubes eps*k + [0, eps]^n lying inside B(R) become vertices (one
// representative point each); two vertices are adjacent when their
// representatives are closer than 2r. Any independent set is a packing of
// radius-r superballs centred in B(R).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "superball/cell_list.hpp"
#include "superball/constants.hpp"
#include "superball/error.hpp"
#include "superball/geometry.hpp"
#include "superball/parallel.hpp"
#include "superball/rng.hpp"
#include "superball/sampling.hpp"

namespace superball {

struct LatticeParams {
  SpaceParams space;
  double R = 0.0;
  double eps = 0.0;
  double radius = 0.0;  // r = r_unit
  double margin = 0.0;  // 2 n^{(p+2)/(2p)} eps
  std::size_t N = 0;
  double n_upper = 0.0;  // vol(B(R)) / eps^n
  double n_lower = 0.0;  // vol(B(R - margin)) / eps^n
  bool smallness_ok = false;

  /// n^{(p+2)/(2p)} eps, the largest norm of a cube diagonal.
  double cube_diameter() const { return 0.5 * margin; }
};

/// eps below which n^{(p+2)/(2p)} eps / r_unit < n^{-2}.
inline double smallness_threshold(const SpaceParams& space) {
  const double n = space.n();
  const double p = space.p();
  return space.r_unit() * std::pow(n, -2.0 - (p + 2.0) / (2.0 * p));
}

struct Lattice {
  LatticeParams params;
  std::vector<std::int64_t> cells;  // N x n integer lattice coordinates (lower corners / eps)

  std::size_t size() const noexcept { return params.N; }
  std::span<const std::int64_t> cell(std::size_t i) const {
    const auto n = static_cast<std::size_t>(params.space.n());
    return {cells.data() + i * n, n};
  }
};

/// Enumerate every lattice cube contained in B(R).
///
/// A cube lies in B(R) iff its corner farthest from the origin in every
/// coordinate does; since the norm is monotone in each |coordinate| the test
/// is exact.
inline Lattice build_lattice(double R, double eps, const SpaceParams& space) {
  const int n = space.n();
  const double p = space.p();
  detail::require(eps > 0.0 && std::isfinite(eps), "build_lattice: eps must be positive");
  detail::require(eps < space.r_unit(), "build_lattice: eps must be smaller than the unit-volume radius");

  Lattice lat;
  auto& lp = lat.params;
  lp.space = space;
  lp.R = R;
  lp.eps = eps;
  lp.radius = space.r_unit();
  lp.margin = 2.0 * std::pow(static_cast<double>(n), (p + 2.0) / (2.0 * p)) * eps;
  lp.smallness_ok = eps < smallness_threshold(space);
  detail::require(R > lp.margin, "build_lattice: R must exceed the margin 2 n^{(p+2)/(2p)} eps");

  const auto kmin = static_cast<std::int64_t>(std::ceil(-R / eps));
  const auto kmax = static_cast<std::int64_t>(std::floor(R / eps)) - 1;
  const auto un = static_cast<std::size_t>(n);
  std::vector<double> far(un, eps);  // undecided coordinates at their smallest possible extent
  std::vector<std::int64_t> idx(un, 0);

  auto visit = [&](auto&& self, std::size_t d) -> void {
    for (std::int64_t k = kmin; k <= kmax; ++k) {
      far[d] = std::max(std::fabs(k * eps), std::fabs((k + 1) * eps));
      if (norm(far, space) > R) continue;
      idx[d] = k;
      if (d + 1 == un) {
        lat.cells.insert(lat.cells.end(), idx.begin(), idx.end());
      } else {
        self(self, d + 1);
      }
    }
    far[d] = eps;
  };
  visit(visit, 0);

  lp.N = lat.cells.size() / un;
  const double cube_vol = std::pow(eps, n);
  lp.n_upper = space.ball_volume(R) / cube_vol;
  lp.n_lower = space.ball_volume(R - lp.margin) / cube_vol;
  return lat;
}

/// Indices of the listed cubes containing y (closed cubes, so a point on a
/// face can belong to several).
inline std::vector<std::size_t> cubes_containing(const Lattice& lat, std::span<const double> y) {
  // The cell list is in lexicographic order, so each candidate is a binary search.
  const auto n = static_cast<std::size_t>(lat.params.space.n());
  const double eps = lat.params.eps;
  std::vector<std::size_t> found;
  std::vector<std::int64_t> base(n), key(n);
  for (std::size_t i = 0; i < n; ++i) base[i] = static_cast<std::int64_t>(std::floor(y[i] / eps));
  const std::size_t combos = std::size_t{1} << n;
  for (std::size_t mask = 0; mask < combos; ++mask) {
    bool fits = true;
    for (std::size_t i = 0; i < n; ++i) {
      key[i] = base[i] - static_cast<std::int64_t>((mask >> i) & 1u);
      const double lo = static_cast<double>(key[i]) * eps;
      if (y[i] < lo || y[i] > lo + eps) fits = false;
    }
    if (!fits) continue;
    std::size_t a = 0, b = lat.size();
    while (a < b) {
      const std::size_t m = (a + b) / 2;
      const auto c = lat.cell(m);
      if (std::lexicographical_compare(c.begin(), c.end(), key.begin(), key.end())) {
        a = m + 1;
      } else {
        b = m;
      }
    }
    if (a < lat.size()) {
      const auto c = lat.cell(a);
      if (std::equal(c.begin(), c.end(), key.begin())) found.push_back(a);
    }
  }
  return found;
}

inline bool covered_by_lattice(const Lattice& lat, std::span<const double> y) {
  return !cubes_containing(lat, y).empty();
}

struct CoverReport {
  std::uint64_t probes = 0;
  std::uint64_t uncovered = 0;
  bool sandwich_ok = false;  // n_lower <= N <= n_upper
  bool passed() const { return uncovered == 0 && sandwich_ok; }
};

/// Every point of B(R - margin) should lie in a listed cube: probe uniformly
/// distributed points, and check the count sandwich on N.
inline CoverReport cover_probe_check(const Lattice& lat, std::uint64_t probes, std::uint64_t seed,
                                     unsigned threads = 0) {
  const auto& lp = lat.params;
  const auto n = static_cast<std::size_t>(lp.space.n());
  CoverReport rep;
  rep.probes = probes;
  const auto N = static_cast<double>(lp.N);
  rep.sandwich_ok = lp.n_lower <= N && N <= lp.n_upper;

  constexpr std::size_t chunks = 64;
  std::vector<std::uint64_t> misses(chunks, 0);
  parallel_for(chunks, threads, [&](std::size_t c) {
    Rng rng(derive_seed(seed, c));
    std::vector<double> y(n);
    const std::uint64_t lo = probes * c / chunks, hi = probes * (c + 1) / chunks;
    for (std::uint64_t k = lo; k < hi; ++k) {
      sample_region(lp.space, Region::ball(lp.R - lp.margin), rng, y);
      if (!covered_by_lattice(lat, y)) ++misses[c];
    }
  });
  for (auto m : misses) rep.uncovered += m;
  return rep;
}

enum class RepresentativeRule { center, lower_corner };

struct GeoGraph {
  int n = 0;
  std::vector<double> reps;  // N x n representative points
  std::vector<std::vector<std::uint32_t>> adj;
  std::size_t edges = 0;
  std::size_t max_degree = 0;

  std::size_t size() const noexcept { return adj.size(); }
  std::span<const double> rep(std::size_t i) const {
    return {reps.data() + i * static_cast<std::size_t>(n), static_cast<std::size_t>(n)};
  }
  bool adjacent(std::uint32_t a, std::uint32_t b) const {
    const auto& v = adj[a];
    return std::binary_search(v.begin(), v.end(), b);
  }

  /// Recompute edge count and max degree from adj.
  void finalize() {
    std::size_t deg_sum = 0;
    max_degree = 0;
    for (const auto& v : adj) {
      deg_sum += v.size();
      max_degree = std::max(max_degree, v.size());
    }
    edges = deg_sum / 2;
  }

  /// A graph with no geometry, for exercising the graph algorithms directly.
  static GeoGraph from_adjacency(std::vector<std::vector<std::uint32_t>> lists) {
    GeoGraph g;
    g.adj = std::move(lists);
    for (auto& v : g.adj) std::sort(v.begin(), v.end());
    g.finalize();
    return g;
  }
};

inline constexpr std::size_t max_graph_edges = 10'000'000;

/// Geometric graph on cube representatives: edge iff d(v_i, v_j) < 2r.
inline GeoGraph build_graph(const Lattice& lat, RepresentativeRule rule = RepresentativeRule::center,
                            unsigned threads = 0) {
  const auto& lp = lat.params;
  const auto& space = lp.space;
  const auto n = static_cast<std::size_t>(space.n());
  const double reach = 2.0 * lp.radius;
  const Region flat = Region::ball(lp.R);

  GeoGraph g;
  g.n = space.n();
  g.reps.resize(lat.size() * n);
  const double shift = rule == RepresentativeRule::center ? 0.5 * lp.eps : 0.0;
  for (std::size_t i = 0; i < lat.size(); ++i) {
    const auto c = lat.cell(i);
    for (std::size_t k = 0; k < n; ++k) g.reps[i * n + k] = static_cast<double>(c[k]) * lp.eps + shift;
  }

  CellGrid grid(space.n(), -lp.R, 2.0 * lp.R + lp.eps, reach, false);
  for (std::size_t i = 0; i < lat.size(); ++i) grid.insert(static_cast<std::uint32_t>(i), grid.cell_of(g.rep(i)));

  g.adj.assign(lat.size(), {});
  parallel_for(lat.size(), threads, [&](std::size_t i) {
    const auto vi = g.rep(i);
    auto& out = g.adj[i];
    grid.for_each_candidate(vi, [&](std::uint32_t j) {
      if (j != i && distance(vi, g.rep(j), space, flat) < reach) out.push_back(j);
      return true;
    });
    std::sort(out.begin(), out.end());
  });

  g.finalize();
  if (g.edges > max_graph_edges) {
    throw InputError("build_graph: " + std::to_string(g.edges) + " edges exceed the cap of " +
                     std::to_string(max_graph_edges) + "; use a larger eps");
  }
  return g;
}

/// (1/(eps r))^n (2r + margin)^n, the volume bound on |N[x]|.
inline double degree_bound(const LatticeParams& lp) {
  const double r = lp.radius;
  return std::pow((2.0 * r + lp.margin) / (lp.eps * r), lp.space.n());
}

struct SandwichReport {
  std::size_t vertices_checked = 0;
  std::uint64_t probes = 0;
  std::uint64_t inner_misses = 0;  // probe of B(v, 2r - margin) ∩ B(0, R - margin) outside every cube of N[v]
  std::uint64_t outer_misses = 0;  // cube of N[v] reaching outside B(v, 2r + margin)
  bool passed() const { return inner_misses == 0 && outer_misses == 0; }
};

/// For sampled vertices v: the cubes of the closed neighbourhood N[v] cover
/// B(v, 2r - margin) ∩ B(0, R - margin) (checked by probes), and lie inside
/// B(v, 2r + margin) (checked exactly via each cube's farthest corner from v).
inline SandwichReport neighborhood_sandwich_check(const Lattice& lat, const GeoGraph& g, std::size_t vertices,
                                                  std::uint64_t probes_per_vertex, std::uint64_t seed) {
  const auto& lp = lat.params;
  const auto& space = lp.space;
  const auto n = static_cast<std::size_t>(space.n());
  const double inner = 2.0 * lp.radius - lp.margin;
  const double outer = 2.0 * lp.radius + lp.margin;
  const double core = lp.R - lp.margin;
  SandwichReport rep;
  Rng rng(seed);
  std::vector<double> y(n), far(n);
  for (std::size_t k = 0; k < vertices && g.size() > 0; ++k) {
    const auto x = static_cast<std::uint32_t>(uniform_index(rng, g.size()));
    const auto v = g.rep(x);
    ++rep.vertices_checked;

    auto in_closed_nbhd = [&](std::size_t i) { return i == x || g.adjacent(x, static_cast<std::uint32_t>(i)); };
    for (std::uint64_t j = 0; j < probes_per_vertex && inner > 0.0; ++j) {
      sample_ball(space, v, inner, rng, y);
      if (norm(y, space) > core) continue;
      ++rep.probes;
      const auto hits = cubes_containing(lat, y);
      if (std::none_of(hits.begin(), hits.end(), in_closed_nbhd)) ++rep.inner_misses;
    }

    auto check_cube = [&](std::size_t i) {
      const auto c = lat.cell(i);
      for (std::size_t d = 0; d < n; ++d) {
        const double lo = static_cast<double>(c[d]) * lp.eps;
        far[d] = std::max(std::fabs(lo - v[d]), std::fabs(lo + lp.eps - v[d]));
      }
      if (norm(far, space) > outer) ++rep.outer_misses;
    };
    check_cube(x);
    for (auto u : g.adj[x]) check_cube(u);
  }
  return rep;
}

struct SparsityReport {
  std::size_t vertices = 0;
  std::size_t max_degree = 0;
  double max_neighborhood_avg_degree = 0.0;
  double mean_neighborhood_avg_degree = 0.0;
  double K = 0.0;                // (1/10) (2/c_p)^n
  double D_over_K = 0.0;         // observed max degree / K
  bool within_reference = true;  // advisory only at small n
};

/// Average degree of the subgraph induced by each open neighbourhood,
/// 2 e(N(x)) / |N(x)|, summarised over all vertices.
inline SparsityReport local_sparsity_stats(const GeoGraph& g, const ConstantChain& chain, unsigned threads = 0) {
  SparsityReport rep;
  rep.vertices = g.size();
  rep.max_degree = g.max_degree;
  rep.K = 0.1 * std::exp(g.n * chain.log_two_over_c());
  rep.D_over_K = static_cast<double>(g.max_degree) / rep.K;

  std::vector<double> avg(g.size(), 0.0);
  const unsigned workers = resolve_threads(threads);
  const std::size_t chunk = (g.size() + workers - 1) / std::max<unsigned>(workers, 1);
  parallel_for(workers, workers, [&](std::size_t w) {
    std::vector<std::uint32_t> mark(g.size(), std::numeric_limits<std::uint32_t>::max());
    const std::size_t lo = w * chunk, hi = std::min(g.size(), lo + chunk);
    for (std::size_t x = lo; x < hi; ++x) {
      const auto& nx = g.adj[x];
      if (nx.empty()) continue;
      for (auto u : nx) mark[u] = static_cast<std::uint32_t>(x);
      std::size_t twice_edges = 0;
      for (auto u : nx) {
        for (auto v : g.adj[u]) twice_edges += mark[v] == x;
      }
      avg[x] = static_cast<double>(twice_edges) / static_cast<double>(nx.size());
    }
  });
  double sum = 0.0;
  for (double a : avg) {
    rep.max_neighborhood_avg_degree = std::max(rep.max_neighborhood_avg_degree, a);
    sum += a;
  }
  rep.mean_neighborhood_avg_degree = g.size() ? sum / static_cast<double>(g.size()) : 0.0;
  rep.within_reference = rep.max_neighborhood_avg_degree <= rep.D_over_K;
  return rep;
}

enum class GreedyOrder { min_degree, lex };

/// Greedy maximal independent set. min_degree repeatedly takes a vertex of
/// least remaining degree; lex takes vertices in index order. The result is
/// rechecked for independence and for the size guarantee N / (maxdeg + 1).
inline std::vector<std::uint32_t> greedy_independent_set(const GeoGraph& g,
                                                         GreedyOrder order = GreedyOrder::min_degree) {
  const std::size_t N = g.size();
  std::vector<char> gone(N, 0);
  std::vector<std::uint32_t> picked;

  if (order == GreedyOrder::lex) {
    for (std::uint32_t v = 0; v < N; ++v) {
      if (gone[v]) continue;
      picked.push_back(v);
      gone[v] = 1;
      for (auto u : g.adj[v]) gone[u] = 1;
    }
  } else {
    std::vector<std::size_t> deg(N);
    std::vector<std::vector<std::uint32_t>> bucket(g.max_degree + 1);
    for (std::uint32_t v = 0; v < N; ++v) {
      deg[v] = g.adj[v].size();
      bucket[deg[v]].push_back(v);
    }
    // Buckets are filled in index order and drained from the back, so reverse
    // them to take the lowest index first among equals.
    for (auto& b : bucket) std::reverse(b.begin(), b.end());
    std::size_t lowest = 0;
    std::size_t remaining = N;
    while (remaining > 0) {
      while (bucket[lowest].empty()) ++lowest;
      const std::uint32_t v = bucket[lowest].back();
      bucket[lowest].pop_back();
      if (gone[v] || deg[v] != lowest) continue;  // stale entry
      picked.push_back(v);
      gone[v] = 1;
      --remaining;
      for (auto u : g.adj[v]) {
        if (gone[u]) continue;
        gone[u] = 1;
        --remaining;
        for (auto w : g.adj[u]) {
          if (gone[w]) continue;
          --deg[w];
          bucket[deg[w]].push_back(w);
          lowest = std::min(lowest, deg[w]);
        }
      }
    }
    std::sort(picked.begin(), picked.end());
  }

  for (std::size_t a = 0; a < picked.size(); ++a) {
    for (std::size_t b = a + 1; b < picked.size(); ++b) {
      if (g.adjacent(picked[a], picked[b])) {
        throw ComputationError("greedy_independent_set: result is not independent");
      }
    }
  }
  if (static_cast<double>(picked.size()) * static_cast<double>(g.max_degree + 1) < static_cast<double>(N)) {
    throw ComputationError("greedy_independent_set: size below N / (maxdeg + 1)");
  }
  return picked;
}

struct PackingCertificate {
  double p = 2.0;
  std::vector<int> cuts;
  double radius = 0.0;
  double R = 0.0;
  std::vector<Point> centers;
  double min_pairwise_distance = std::numeric_limits<double>::infinity();
  double density = 0.0;  // count / vol(B(R))
};

namespace detail {

inline double min_pairwise(const std::vector<Point>& pts, const SpaceParams& space, const Region& region) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (std::size_t j = i + 1; j < pts.size(); ++j) {
      best = std::min(best, distance(pts[i], pts[j], space, region));
    }
  }
  return best;
}

}  // namespace detail

/// Build a certificate from an independent set; all distances are recomputed
/// from the representatives, independent of the edge list.
inline PackingCertificate emit_packing(const std::vector<std::uint32_t>& independent, const GeoGraph& g,
                                       const Lattice& lat) {
  const auto& lp = lat.params;
  PackingCertificate cert;
  cert.p = lp.space.p();
  cert.cuts = lp.space.blocks().cuts();
  cert.radius = lp.radius;
  cert.R = lp.R;
  cert.centers.reserve(independent.size());
  for (auto v : independent) {
    detail::require(v < g.size(), "emit_packing: vertex index out of range");
    const auto r = g.rep(v);
    cert.centers.emplace_back(r.begin(), r.end());
  }
  const Region region = Region::ball(lp.R);
  cert.min_pairwise_distance = detail::min_pairwise(cert.centers, lp.space, region);
  if (cert.min_pairwise_distance < 2.0 * cert.radius) {
    throw ComputationError("emit_packing: recomputed pairwise distance below 2r");
  }
  for (const auto& c : cert.centers) {
    if (!in_region(c, lp.space, region)) throw ComputationError("emit_packing: center outside B(R)");
  }
  cert.density = static_cast<double>(cert.centers.size()) / region.volume(lp.space);
  return cert;
}

struct VerifyResult {
  bool valid = false;
  double min_distance = std::numeric_limits<double>::infinity();
  std::size_t close_pairs = 0;
  std::size_t outside = 0;
};

/// Independent re-check: every pair at distance >= 2r and every center in B(R).
inline VerifyResult verify_packing(const PackingCertificate& cert) {
  detail::require(cert.radius > 0.0 && cert.R > 0.0, "verify_packing: radius and R must be positive");
  const SpaceParams space(cert.p, BlockSpec(cert.cuts));
  const Region region = Region::ball(cert.R);
  for (const auto& c : cert.centers) detail::check_dim(c.size(), space);

  VerifyResult res;
  const double need = 2.0 * cert.radius;
  for (std::size_t i = 0; i < cert.centers.size(); ++i) {
    if (!in_region(cert.centers[i], space, region)) ++res.outside;
    for (std::size_t j = i + 1; j < cert.centers.size(); ++j) {
      const double d = distance(cert.centers[i], cert.centers[j], space, region);
      res.min_distance = std::min(res.min_distance, d);
      if (d < need) ++res.close_pairs;
    }
  }
  res.valid = res.close_pairs == 0 && res.outside == 0;
  return res;
}

}  // namespace superball
