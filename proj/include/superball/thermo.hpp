#pragma once

// Pressure and entropy density at finite volume.
//
// Pressure: g(lambda) = (1/V) log Z(lambda) = int_0^lambda alpha(x)/x dx, since
// d/dx log Z = E|X| / x. The integral runs over a log-spaced grid of chain
// estimates from lambda0 = 1e-4 lambda, plus lambda0 for the segment below it
// (alpha(x) ~ x there; the error is O(lambda0^2 V)).
//
// Entropy: f(t) = (1/t) log P(t i.i.d. uniform points of S form a packing),
// which equals (1/t) log(Zhat(t) t! / V^t).

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "superball/constants.hpp"
#include "superball/error.hpp"
#include "superball/gibbs.hpp"
#include "superball/parallel.hpp"
#include "superball/rng.hpp"

namespace superball {

enum class ThermoKind { pressure, entropy };

inline const char* to_string(ThermoKind k) { return k == ThermoKind::pressure ? "pressure" : "entropy"; }

struct ThermoResult {
  ThermoKind kind = ThermoKind::pressure;
  double value = 0.0;
  double se = 0.0;
  double lambda = 0.0;  // pressure only
  double alpha = 0.0;   // entropy only: t / V
  double volume = 0.0;
  int t = 0;            // entropy only
  std::optional<double> lower_bound_ref;  // asymptotic formula value, for context

  // pressure
  int grid_size = 0;
  double closure = 0.0;

  // entropy
  bool defined = true;
  double upper_bound = 0.0;  // meaningful when !defined
  std::uint64_t samples = 0;
  std::uint64_t successes = 0;
};

namespace detail {

/// Formula values need c_p, which exists only for 1 < p <= 2.
inline bool chain_available(double p) { return p > 1.0 && p <= 2.0; }

}  // namespace detail

/// t = floor(alpha V), the number of centers used at density alpha.
inline int count_for_density(double alpha, double volume) {
  detail::require(alpha >= 0.0 && volume > 0.0, "count_for_density: alpha >= 0 and V > 0 required");
  const double t = std::floor(alpha * volume);
  detail::require(t < 1e9, "count_for_density: alpha V too large");
  return static_cast<int>(t);
}

struct PressureOptions {
  int grid_size = 32;
  double lambda0_ratio = 1e-4;
  ChainOptions chain;
};

inline ThermoResult pressure_estimate(const ModelParams& params, double lambda, const PressureOptions& opt = {},
                                      unsigned threads = 0) {
  detail::require(lambda > 0.0 && std::isfinite(lambda), "pressure_estimate: lambda must be positive");
  detail::require(opt.grid_size >= 2, "pressure_estimate: grid_size must be at least 2");
  detail::require(opt.lambda0_ratio > 0.0 && opt.lambda0_ratio < 1.0, "pressure_estimate: lambda0 ratio in (0, 1)");
  params.validate();

  const double lambda0 = lambda * opt.lambda0_ratio;
  const int G = opt.grid_size;
  const double du = -std::log(opt.lambda0_ratio) / (G - 1);
  std::vector<double> grid(static_cast<std::size_t>(G));
  for (int i = 0; i < G; ++i) grid[static_cast<std::size_t>(i)] = lambda0 * std::exp(du * i);
  grid.back() = lambda;

  std::vector<ChainEstimate> est(grid.size());
  parallel_for(grid.size(), threads, [&](std::size_t i) {
    ChainOptions o = opt.chain;
    o.seed = derive_seed(opt.chain.seed, 2000 + i);
    est[i] = run_chain(params.with_fugacity(grid[i]), o);
  });

  // Trapezoid in u = log x: int alpha(x)/x dx = int alpha du.
  double integral = 0.0, var = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double w = (i == 0 || i + 1 == grid.size()) ? 0.5 * du : du;
    integral += w * est[i].alpha_hat;
    var += w * w * est[i].alpha_se * est[i].alpha_se;
  }

  ThermoResult res;
  res.kind = ThermoKind::pressure;
  res.closure = lambda0;
  res.value = integral + lambda0;
  res.se = std::sqrt(var);
  res.lambda = lambda;
  res.volume = params.volume();
  res.grid_size = G;
  res.lower_bound_ref = pressure_bound_formula(params.space.n(), lambda);
  return res;
}

struct EntropyOptions {
  std::uint64_t samples = 1'000'000;
  std::uint64_t seed = 1;
  int chunks = 64;  // fixed work split so results do not depend on the thread count
  std::uint64_t min_successes = 10;
};

inline ThermoResult entropy_estimate(const ModelParams& params, int t, const EntropyOptions& opt = {},
                                     unsigned threads = 0) {
  detail::require(t >= 1, "entropy_estimate: t must be at least 1");
  detail::require(opt.samples >= 1 && opt.chunks >= 1, "entropy_estimate: samples and chunks must be positive");
  params.validate();

  const auto chunks = static_cast<std::size_t>(opt.chunks);
  std::vector<std::uint64_t> hits(chunks, 0);
  parallel_for(chunks, threads, [&](std::size_t c) {
    const std::uint64_t lo = opt.samples * c / chunks, hi = opt.samples * (c + 1) / chunks;
    if (hi > lo) hits[c] = detail::packing_hits(params, t, hi - lo, derive_seed(opt.seed, c)).first;
  });
  std::uint64_t total_hits = 0;
  for (auto h : hits) total_hits += h;

  ThermoResult res;
  res.kind = ThermoKind::entropy;
  res.t = t;
  res.volume = params.volume();
  res.alpha = t / res.volume;
  res.samples = opt.samples;
  res.successes = total_hits;
  const double N = static_cast<double>(opt.samples);
  const double P = static_cast<double>(total_hits) / N;
  if (total_hits < opt.min_successes) {
    res.defined = false;
    res.upper_bound = std::log(std::max<double>(static_cast<double>(total_hits), 1.0) / N) / t;
    res.value = res.upper_bound;
    res.se = 0.0;
  } else {
    res.value = std::log(P) / t;
    // delta method: Var(log P_hat) ~ (1 - P) / (N P)
    res.se = std::sqrt((1.0 - P) / (N * P)) / t;
  }
  if (detail::chain_available(params.space.p())) {
    res.lower_bound_ref = entropy_bound_formula(params.space.n(), compute_constant_chain(params.space.p()));
  }
  return res;
}

struct MonotonicityReport {
  std::vector<ThermoResult> results;
  std::vector<std::pair<int, int>> violations;  // (t1, t2) pairs with f(t1) < f(t2) - 3 (se1 + se2)
  bool passed() const { return violations.empty(); }
};

/// Finite-V check that f decreases in t. Advisory: the statement being
/// mirrored is about the V -> infinity limit.
inline MonotonicityReport entropy_monotonicity_check(const ModelParams& params, const std::vector<int>& t_list,
                                                     const EntropyOptions& opt = {}, unsigned threads = 0) {
  for (std::size_t i = 1; i < t_list.size(); ++i) {
    detail::require(t_list[i] > t_list[i - 1], "entropy_monotonicity_check: t_list must increase");
  }
  MonotonicityReport rep;
  for (std::size_t i = 0; i < t_list.size(); ++i) {
    EntropyOptions o = opt;
    o.seed = derive_seed(opt.seed, 3000 + i);
    rep.results.push_back(entropy_estimate(params, t_list[i], o, threads));
  }
  for (std::size_t i = 0; i < rep.results.size(); ++i) {
    for (std::size_t j = i + 1; j < rep.results.size(); ++j) {
      const auto& a = rep.results[i];
      const auto& b = rep.results[j];
      if (!b.defined) continue;  // only an upper bound on f(t2), nothing to contradict
      if (a.value < b.value - 3.0 * (a.se + b.se)) rep.violations.emplace_back(a.t, b.t);
    }
  }
  return rep;
}

}  // namespace superball
