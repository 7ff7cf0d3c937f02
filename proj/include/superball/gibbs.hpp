#pragma once

// Grand canonical hard superball model.
//
// Configurations are finite sets of centers in a region S with pairwise
// distance >= 2r. At fugacity lambda a configuration of t centers has weight
// lambda^t / t! (times Lebesgue measure), so the partition function is
//
//     Z(lambda) = sum_t lambda^t Zhat(t),
//     Zhat(t)   = (1/t!) * vol{(x_1..x_t) in S^t : pairwise distance >= 2r}.
//
// The sampler is single-site birth-death Metropolis, reversible for exactly
// this measure.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
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

struct ModelParams {
  SpaceParams space;
  Region region;
  double fugacity = 1.0;
  double radius = 0.0;

  /// radius <= 0 selects the unit-volume radius.
  static ModelParams make(SpaceParams space, Region region, double fugacity, double radius = 0.0) {
    ModelParams m{std::move(space), region, fugacity, radius};
    if (m.radius <= 0.0) m.radius = m.space.r_unit();
    m.validate();
    return m;
  }

  void validate() const {
    detail::require(fugacity > 0.0 && std::isfinite(fugacity), "ModelParams: fugacity must be positive");
    detail::require(radius > 0.0 && std::isfinite(radius), "ModelParams: radius must be positive");
    const double v = volume();
    detail::require(v > 0.0 && std::isfinite(v), "ModelParams: region volume must be positive and finite");
  }

  double exclusion() const noexcept { return 2.0 * radius; }
  double volume() const { return region.volume(space); }

  ModelParams with_fugacity(double lambda) const {
    ModelParams m = *this;
    m.fugacity = lambda;
    m.validate();
    return m;
  }
};

/// A hard-core configuration with a cell list for O(1) expected blocking tests.
class Configuration {
 public:
  explicit Configuration(const ModelParams& params)
      : params_(params),
        n_(static_cast<std::size_t>(params.space.n())),
        grid_(CellGrid::for_region(params.space, params.region, params.exclusion())) {}

  const ModelParams& params() const noexcept { return params_; }
  std::size_t size() const noexcept { return cell_.size(); }
  bool empty() const noexcept { return cell_.empty(); }

  std::span<const double> center(std::size_t i) const noexcept {
    return {coords_.data() + i * n_, n_};
  }

  std::vector<Point> centers() const {
    std::vector<Point> out;
    out.reserve(size());
    for (std::size_t i = 0; i < size(); ++i) out.emplace_back(center(i).begin(), center(i).end());
    return out;
  }

  /// True if some center is at distance < 2r from y.
  bool blocked(std::span<const double> y) const {
    const double excl = params_.exclusion();
    const auto& space = params_.space;
    const auto& region = params_.region;
    return !grid_.for_each_candidate(y, [&](std::uint32_t id) {
      return distance(center(id), y, space, region) >= excl;
    });
  }

  /// Insert without checking; callers must have verified !blocked(y).
  void insert(std::span<const double> y) {
    const auto id = static_cast<std::uint32_t>(size());
    coords_.insert(coords_.end(), y.begin(), y.end());
    const std::size_t c = grid_.cell_of(y);
    cell_.push_back(c);
    grid_.insert(id, c);
  }

  bool try_insert(std::span<const double> y) {
    if (blocked(y)) return false;
    insert(y);
    return true;
  }

  /// Remove center i; the last center takes its index.
  void erase(std::size_t i) {
    const std::size_t last = size() - 1;
    grid_.erase(static_cast<std::uint32_t>(i), cell_[i]);
    if (i != last) {
      grid_.relabel(static_cast<std::uint32_t>(last), static_cast<std::uint32_t>(i), cell_[last]);
      std::copy_n(coords_.begin() + static_cast<std::ptrdiff_t>(last * n_), n_,
                  coords_.begin() + static_cast<std::ptrdiff_t>(i * n_));
      cell_[i] = cell_[last];
    }
    coords_.resize(last * n_);
    cell_.pop_back();
  }

  void clear() {
    coords_.clear();
    cell_.clear();
    grid_.clear();
  }

  /// Exhaustive O(t^2) recheck of the hard-core condition.
  bool verify_hard_core() const {
    return min_pairwise_distance() >= params_.exclusion();
  }

  double min_pairwise_distance() const {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < size(); ++i) {
      for (std::size_t j = i + 1; j < size(); ++j) {
        best = std::min(best, distance(center(i), center(j), params_.space, params_.region));
      }
    }
    return best;
  }

 private:
  ModelParams params_;
  std::size_t n_;
  CellGrid grid_;
  std::vector<double> coords_;
  std::vector<std::size_t> cell_;
};

// ---------------------------------------------------------------------------
// Partition functions
// ---------------------------------------------------------------------------

struct PartitionValue {
  double value = 0.0;
  double se = 0.0;  // zero for exact values
  bool exact = true;
  std::string method;
};

namespace detail {

inline double log_factorial(int t) { return std::lgamma(t + 1.0); }

/// Fraction of `samples` i.i.d. uniform t-tuples in S that form a packing.
inline std::pair<std::uint64_t, std::uint64_t> packing_hits(const ModelParams& params, int t,
                                                            std::uint64_t samples, std::uint64_t seed) {
  Rng rng(seed);
  const auto n = static_cast<std::size_t>(params.space.n());
  std::vector<double> pts(static_cast<std::size_t>(t) * n);
  const double excl = params.exclusion();
  std::uint64_t hits = 0;
  for (std::uint64_t s = 0; s < samples; ++s) {
    bool ok = true;
    for (int i = 0; i < t && ok; ++i) {
      std::span<double> pi(pts.data() + static_cast<std::size_t>(i) * n, n);
      sample_region(params.space, params.region, rng, pi);
      for (int j = 0; j < i; ++j) {
        std::span<const double> pj(pts.data() + static_cast<std::size_t>(j) * n, n);
        if (distance(pj, pi, params.space, params.region) < excl) {
          ok = false;
          break;
        }
      }
    }
    if (ok) ++hits;
  }
  return {hits, samples};
}

}  // namespace detail

/// Zhat(t), the canonical partition function.
///
/// Exact regimes: t <= 1; regions too small to hold two centers; one-dimensional
/// intervals (hard rods) and rings; two centers on a torus wide enough that a
/// ball of radius 2r does not wrap onto itself. Everything else falls back to a
/// Monte Carlo packing-probability estimate with its standard error.
inline PartitionValue canonical_partition(int t, const ModelParams& params,
                                          std::uint64_t mc_samples = 200000, std::uint64_t seed = 1) {
  detail::require(t >= 0, "canonical_partition: t must be nonnegative");
  params.validate();
  const double vol = params.volume();
  const double sigma = params.exclusion();
  if (t == 0) return {1.0, 0.0, true, "empty"};
  if (t == 1) return {vol, 0.0, true, "volume"};
  if (region_diameter(params.space, params.region) <= sigma) return {0.0, 0.0, true, "too-small"};

  if (params.space.n() == 1) {
    if (params.region.kind == RegionKind::ball) {
      const double len = 2.0 * params.region.size;
      const double free = len - (t - 1) * sigma;
      if (free <= 0.0) return {0.0, 0.0, true, "hard-rods"};
      return {std::exp(t * std::log(free) - detail::log_factorial(t)), 0.0, true, "hard-rods"};
    }
    const double len = params.region.size;
    const double free = len - t * sigma;
    if (free <= 0.0) return {0.0, 0.0, true, "hard-rods-ring"};
    return {std::exp(std::log(len) + (t - 1) * std::log(free) - detail::log_factorial(t)), 0.0, true,
            "hard-rods-ring"};
  }

  if (t == 2 && params.region.kind == RegionKind::torus && 2.0 * sigma <= params.region.size) {
    return {0.5 * vol * (vol - params.space.ball_volume(sigma)), 0.0, true, "torus-pair"};
  }

  detail::require(mc_samples > 0, "canonical_partition: Monte Carlo fallback needs samples");
  const auto [hits, total] = detail::packing_hits(params, t, mc_samples, seed);
  const double prob = static_cast<double>(hits) / static_cast<double>(total);
  const double scale = std::exp(t * std::log(vol) - detail::log_factorial(t));
  const double se = scale * std::sqrt(prob * (1.0 - prob) / static_cast<double>(total));
  return {scale * prob, se, false, "monte-carlo"};
}

/// Moments of |X| under the grand canonical measure, from exact Zhat(t).
struct GrandSummary {
  double z = 1.0;
  double log_z = 0.0;
  double mean_count = 0.0;
  double var_count = 0.0;
  double alpha = 0.0;  // mean_count / vol
  double volume = 0.0;
  int terms = 0;
  bool exact = true;
  double se = 0.0;
};

namespace detail {

inline double tail_bound(double lambda_vol, int t_max) {
  // sum_{t > t_max} x^t / t!  <=  x^{t+1}/(t+1)! * 1/(1 - x/(t+2))
  const int k = t_max + 1;
  const double log_term = k * std::log(lambda_vol) - log_factorial(k);
  const double ratio = lambda_vol / (k + 1.0);
  if (ratio >= 1.0) return std::numeric_limits<double>::infinity();
  return std::exp(log_term) / (1.0 - ratio);
}

}  // namespace detail

/// Z = sum_{t <= t_max} lambda^t Zhat(t), with moments of |X|.
///
/// The truncation is accepted when Zhat(t_max + 1) is exactly zero or the
/// ideal-gas tail bound sum_{t > t_max} (lambda V)^t / t! is below 1e-15.
inline GrandSummary grand_summary(const ModelParams& params, int t_max,
                                  std::uint64_t mc_samples = 200000, std::uint64_t seed = 1) {
  detail::require(t_max >= 0, "grand_partition: t_max must be nonnegative");
  params.validate();
  const double vol = params.volume();
  const double lam = params.fugacity;

  struct Term {
    int t;
    double log_w;
    double rel_se;
  };
  std::vector<Term> terms;
  GrandSummary g;
  g.volume = vol;
  bool closed = false;
  for (int t = 0; t <= t_max + 1; ++t) {
    const PartitionValue zt =
        canonical_partition(t, params, mc_samples, derive_seed(seed, static_cast<std::uint64_t>(t)));
    if (t == t_max + 1) {
      closed = zt.exact && zt.value == 0.0;
      break;
    }
    g.exact = g.exact && zt.exact;
    if (zt.value <= 0.0) {
      if (zt.exact) {  // Zhat(t) = 0 forces Zhat(t + 1) = 0
        closed = true;
        break;
      }
      continue;
    }
    terms.push_back({t, t * std::log(lam) + std::log(zt.value), zt.se / zt.value});
    g.terms = t + 1;
  }
  if (!closed && detail::tail_bound(lam * vol, t_max) >= 1e-15) {
    throw ComputationError("grand_partition: truncation tail is not negligible; increase t_max beyond " +
                           std::to_string(t_max));
  }

  double mx = -std::numeric_limits<double>::infinity();
  for (const auto& term : terms) mx = std::max(mx, term.log_w);
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, var_rel = 0.0;
  for (const auto& term : terms) {
    const double w = std::exp(term.log_w - mx);
    const double t = term.t;
    s0 += w;
    s1 += t * w;
    s2 += t * t * w;
    var_rel += (w * term.rel_se) * (w * term.rel_se);
  }
  g.log_z = mx + std::log(s0);
  g.z = std::exp(g.log_z);
  g.mean_count = s1 / s0;
  g.var_count = s2 / s0 - g.mean_count * g.mean_count;
  g.alpha = g.mean_count / vol;
  g.se = g.z * std::sqrt(var_rel) / s0;
  return g;
}

inline PartitionValue grand_partition(const ModelParams& params, int t_max,
                                      std::uint64_t mc_samples = 200000, std::uint64_t seed = 1) {
  const GrandSummary g = grand_summary(params, t_max, mc_samples, seed);
  return {g.z, g.se, g.exact, g.exact ? "exact-sum" : "mixed-sum"};
}

// ---------------------------------------------------------------------------
// Birth-death chain
// ---------------------------------------------------------------------------

struct ChainOptions {
  std::uint64_t steps = 100000;
  std::uint64_t burn_in = 10000;
  std::uint64_t seed = 1;
  int probes = 64;          // free-volume probes per recorded sample
  int sample_every = 1;     // record every k-th post-burn-in step
  int batches = 32;         // batch-means batches
  bool paranoid = false;    // recheck the hard-core condition after every accepted move
};

struct ChainEstimate {
  double lambda = 0.0;
  double volume = 0.0;
  double alpha_hat = 0.0;
  double alpha_se = 0.0;
  double fv_hat = 1.0;
  double fv_se = 0.0;
  double identity_gap = 0.0;  // alpha_hat - lambda * fv_hat
  double identity_se = 0.0;   // batch-means SE of the paired difference
  double mean_count = 0.0;
  double var_count = 0.0;
  std::uint64_t steps = 0;
  std::uint64_t samples = 0;
  std::uint64_t proposed_births = 0;
  std::uint64_t accepted_births = 0;
  std::uint64_t accepted_deaths = 0;
  std::uint64_t rejections = 0;
  std::uint64_t seed = 0;
};

enum class Move : char { birth = 'b', death = 'd' };

struct TraceRow {
  std::uint64_t step = 0;
  std::size_t count = 0;
  int fv_hits = 0;
  Move move = Move::birth;
  bool accepted = false;
};

using TraceSink = std::function<void(const TraceRow&)>;

namespace detail {

struct BatchMeans {
  double mean = 0.0;
  double se = 0.0;
};

inline BatchMeans batch_means(const std::vector<double>& xs, int batches) {
  BatchMeans out;
  const std::size_t ns = xs.size();
  if (ns == 0) return out;
  out.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(ns);
  const std::size_t b = std::min<std::size_t>(static_cast<std::size_t>(std::max(batches, 2)), ns);
  if (b < 2) return out;
  std::vector<double> means(b, 0.0);
  for (std::size_t k = 0; k < b; ++k) {
    const std::size_t lo = k * ns / b, hi = (k + 1) * ns / b;
    double s = 0.0;
    for (std::size_t i = lo; i < hi; ++i) s += xs[i];
    means[k] = s / static_cast<double>(hi - lo);
  }
  const double mb = std::accumulate(means.begin(), means.end(), 0.0) / static_cast<double>(b);
  double ss = 0.0;
  for (double m : means) ss += (m - mb) * (m - mb);
  out.se = std::sqrt(ss / (static_cast<double>(b) * static_cast<double>(b - 1)));
  return out;
}

}  // namespace detail

/// Run the birth-death chain from the empty configuration.
///
/// Each step proposes, with probability 1/2 each, a birth of a uniform point
/// of S (accepted with min(1, lambda V / (t + 1)) when unblocked) or the death
/// of a uniformly chosen center (accepted with min(1, t / (lambda V))).
/// Post burn-in samples record |X| and the number of uniform probes that are
/// at distance >= 2r from every center.
inline ChainEstimate run_chain(const ModelParams& params, const ChainOptions& opt,
                               const TraceSink& sink = {}, Configuration* final_state = nullptr) {
  params.validate();
  detail::require(opt.steps > opt.burn_in, "run_chain: steps must exceed burn_in");
  detail::require(opt.probes >= 1 && opt.sample_every >= 1, "run_chain: probes and sample_every must be >= 1");

  const double vol = params.volume();
  const double lv = params.fugacity * vol;
  const auto n = static_cast<std::size_t>(params.space.n());

  Rng rng(opt.seed);
  Configuration config(params);
  std::vector<double> y(n);

  ChainEstimate est;
  est.lambda = params.fugacity;
  est.volume = vol;
  est.steps = opt.steps;
  est.seed = opt.seed;

  std::vector<double> counts, fv, gap;
  const std::uint64_t expected = (opt.steps - opt.burn_in + opt.sample_every - 1) / opt.sample_every;
  counts.reserve(expected);
  fv.reserve(expected);
  gap.reserve(expected);

  std::uint64_t deaths_proposed = 0;
  for (std::uint64_t step = 0; step < opt.steps; ++step) {
    const std::size_t t = config.size();
    bool accepted = false;
    Move move;
    if (uniform01(rng) < 0.5) {
      move = Move::birth;
      ++est.proposed_births;
      sample_region(params.space, params.region, rng, y);
      const double a = lv / static_cast<double>(t + 1);
      if ((a >= 1.0 || uniform01(rng) < a) && !config.blocked(y)) {
        config.insert(y);
        accepted = true;
        ++est.accepted_births;
      }
    } else {
      move = Move::death;
      ++deaths_proposed;
      if (t > 0) {
        const std::size_t victim = uniform_index(rng, t);
        const double a = static_cast<double>(t) / lv;
        if (a >= 1.0 || uniform01(rng) < a) {
          config.erase(victim);
          accepted = true;
          ++est.accepted_deaths;
        }
      }
    }
    if (!accepted) ++est.rejections;
    if (accepted && opt.paranoid && !config.verify_hard_core()) {
      throw ComputationError("run_chain: hard-core condition violated after an accepted move");
    }

    if (step >= opt.burn_in && (step - opt.burn_in) % static_cast<std::uint64_t>(opt.sample_every) == 0) {
      int hits = 0;
      for (int k = 0; k < opt.probes; ++k) {
        sample_region(params.space, params.region, rng, y);
        if (!config.blocked(y)) ++hits;
      }
      const double c = static_cast<double>(config.size());
      const double f = static_cast<double>(hits) / opt.probes;
      counts.push_back(c);
      fv.push_back(f);
      gap.push_back(c / vol - params.fugacity * f);
      if (sink) sink(TraceRow{step, config.size(), hits, move, accepted});
    }
  }

  // One exhaustive recheck per chain; --paranoid does it after every move.
  if (!config.verify_hard_core()) {
    throw ComputationError("run_chain: final configuration violates the hard-core condition");
  }

  est.samples = counts.size();
  const auto mc = detail::batch_means(counts, opt.batches);
  const auto mf = detail::batch_means(fv, opt.batches);
  const auto mg = detail::batch_means(gap, opt.batches);
  est.mean_count = mc.mean;
  est.alpha_hat = mc.mean / vol;
  est.alpha_se = mc.se / vol;
  est.fv_hat = mf.mean;
  est.fv_se = mf.se;
  est.identity_gap = mg.mean;
  est.identity_se = mg.se;
  double ss = 0.0;
  for (double c : counts) ss += (c - mc.mean) * (c - mc.mean);
  est.var_count = counts.size() > 1 ? ss / static_cast<double>(counts.size() - 1) : 0.0;
  if (final_state) *final_state = std::move(config);
  return est;
}

/// Combine independent replicas, weighting by sample count.
inline ChainEstimate merge_estimates(const std::vector<ChainEstimate>& parts) {
  detail::require(!parts.empty(), "merge_estimates: nothing to merge");
  ChainEstimate m = parts.front();
  double wsum = 0.0;
  double a = 0.0, f = 0.0, g = 0.0, mean = 0.0, var = 0.0;
  double sa = 0.0, sf = 0.0, sg = 0.0;
  m.steps = m.samples = m.proposed_births = m.accepted_births = m.accepted_deaths = m.rejections = 0;
  for (const auto& p : parts) {
    const double w = static_cast<double>(p.samples);
    wsum += w;
    a += w * p.alpha_hat;
    f += w * p.fv_hat;
    g += w * p.identity_gap;
    mean += w * p.mean_count;
    var += w * p.var_count;
    sa += w * w * p.alpha_se * p.alpha_se;
    sf += w * w * p.fv_se * p.fv_se;
    sg += w * w * p.identity_se * p.identity_se;
    m.steps += p.steps;
    m.samples += p.samples;
    m.proposed_births += p.proposed_births;
    m.accepted_births += p.accepted_births;
    m.accepted_deaths += p.accepted_deaths;
    m.rejections += p.rejections;
  }
  m.alpha_hat = a / wsum;
  m.fv_hat = f / wsum;
  m.identity_gap = g / wsum;
  m.mean_count = mean / wsum;
  m.var_count = var / wsum;
  m.alpha_se = std::sqrt(sa) / wsum;
  m.fv_se = std::sqrt(sf) / wsum;
  m.identity_se = std::sqrt(sg) / wsum;
  return m;
}

/// Independent replicas with seeds derived from opt.seed; order is by replica index.
inline std::vector<ChainEstimate> run_replicas(const ModelParams& params, const ChainOptions& opt,
                                               int replicas, unsigned threads = 0) {
  detail::require(replicas >= 1, "run_replicas: need at least one replica");
  std::vector<ChainEstimate> out(static_cast<std::size_t>(replicas));
  parallel_for(out.size(), threads, [&](std::size_t i) {
    ChainOptions o = opt;
    o.seed = derive_seed(opt.seed, i);
    out[i] = run_chain(params, o);
  });
  return out;
}

struct CurvePoint {
  double lambda = 0.0;
  ChainEstimate estimate;
};

/// One independent chain per fugacity.
inline std::vector<CurvePoint> estimate_alpha_curve(const ModelParams& params, const std::vector<double>& lambdas,
                                                    const ChainOptions& opt, unsigned threads = 0) {
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    detail::require(lambdas[i] > 0.0, "estimate_alpha_curve: fugacities must be positive");
    detail::require(i == 0 || lambdas[i] > lambdas[i - 1], "estimate_alpha_curve: fugacities must increase");
  }
  std::vector<CurvePoint> out(lambdas.size());
  parallel_for(lambdas.size(), threads, [&](std::size_t i) {
    ChainOptions o = opt;
    o.seed = derive_seed(opt.seed, 1000 + i);
    out[i] = {lambdas[i], run_chain(params.with_fugacity(lambdas[i]), o)};
  });
  return out;
}

/// Monte Carlo estimate of vol(T) for a probe center v: points of S within 2r
/// of v that no center outside B(v, 2r) blocks. Debug statistic only.
inline double t_volume_debug(const Configuration& config, std::span<const double> v, int probes, Rng& rng) {
  const auto& prm = config.params();
  const auto& space = prm.space;
  const double reach = prm.exclusion();
  const auto n = static_cast<std::size_t>(space.n());
  std::vector<double> x(n);
  int inside = 0;
  for (int k = 0; k < probes; ++k) {
    sample_ball(space, v, reach, rng, x);
    if (prm.region.periodic()) {
      for (double& c : x) c -= prm.region.size * std::floor(c / prm.region.size);
    } else if (!in_region(x, space, prm.region)) {
      continue;
    }
    bool free = true;
    for (std::size_t i = 0; i < config.size() && free; ++i) {
      const auto c = config.center(i);
      if (distance(c, v, space, prm.region) <= reach) continue;  // inside B(v, 2r)
      if (distance(c, x, space, prm.region) < reach) free = false;
    }
    if (free) ++inside;
  }
  return space.ball_volume(reach) * inside / probes;
}

// ---------------------------------------------------------------------------
// Intersection volume bound
// ---------------------------------------------------------------------------

struct IntersectionTrial {
  double u_norm = 0.0;       // in units of r
  double estimate = 0.0;     // vol(B(u, 2r) ∩ B(0, ||u||))
  double se = 0.0;
  double bound = 0.0;        // c_p^n
  bool passed = true;
  std::uint64_t containment_checked = 0;
  std::uint64_t containment_violations = 0;
};

struct IntersectionReport {
  std::vector<IntersectionTrial> trials;
  std::size_t violations = 0;
  std::uint64_t containment_checked = 0;
  std::uint64_t containment_violations = 0;
  double max_ratio = 0.0;  // max estimate / c_p^n
  bool passed() const { return violations == 0 && containment_violations == 0; }
};

/// MC estimate of vol(B(u, 2r) ∩ B(0, ||u||)) with r the unit-volume radius.
/// Points are drawn uniformly in B(u, 2r), whose volume is exactly 2^n. When
/// ||u|| >= x_p r, sampled intersection points are also checked against
/// B(u/2, c'_p r).
inline IntersectionTrial intersection_volume_trial(const SpaceParams& space, const ConstantChain& chain,
                                                   std::span<const double> u, std::uint64_t points, Rng& rng) {
  const double r = space.r_unit();
  const int n = space.n();
  const double un = norm(u, space);
  const bool far = un >= chain.x_p * r;
  const double shrink_radius = (2.0 - chain.c_prime_gap) * r;
  std::vector<double> x(static_cast<std::size_t>(n));
  std::uint64_t hits = 0;
  IntersectionTrial tr;
  tr.u_norm = un / r;
  for (std::uint64_t k = 0; k < points; ++k) {
    sample_ball(space, u, 2.0 * r, rng, x);
    if (norm(x, space) > un) continue;
    ++hits;
    if (far) {
      ++tr.containment_checked;
      const double d = detail::mixed_norm(space, [&](int i) { return x[i] - 0.5 * u[i]; });
      if (d > shrink_radius * (1.0 + 1e-12)) ++tr.containment_violations;
    }
  }
  const double vol_big = std::ldexp(1.0, n);
  const double f = static_cast<double>(hits) / static_cast<double>(points);
  tr.estimate = vol_big * f;
  tr.se = vol_big * std::sqrt(f * (1.0 - f) / static_cast<double>(points));
  tr.bound = std::exp(n * chain.log_c());
  tr.passed = tr.estimate <= tr.bound + 3.0 * tr.se;
  return tr;
}

/// Random u uniform in B(0, 2r); each trial must satisfy
/// estimate <= c_p^n + 3 SE.
inline IntersectionReport intersection_volume_check(const SpaceParams& space, const ConstantChain& chain,
                                                    int trials, std::uint64_t points_per_trial,
                                                    std::uint64_t seed, unsigned threads = 0) {
  detail::require(trials >= 1 && points_per_trial >= 1, "intersection_volume_check: need trials and points");
  IntersectionReport rep;
  rep.trials.resize(static_cast<std::size_t>(trials));
  const std::vector<double> origin(static_cast<std::size_t>(space.n()), 0.0);
  parallel_for(rep.trials.size(), threads, [&](std::size_t i) {
    Rng rng(derive_seed(seed, i));
    std::vector<double> u(static_cast<std::size_t>(space.n()));
    sample_ball(space, origin, 2.0 * space.r_unit(), rng, u);
    rep.trials[i] = intersection_volume_trial(space, chain, u, points_per_trial, rng);
  });
  for (const auto& t : rep.trials) {
    if (!t.passed) ++rep.violations;
    rep.containment_checked += t.containment_checked;
    rep.containment_violations += t.containment_violations;
    rep.max_ratio = std::max(rep.max_ratio, t.estimate / t.bound);
  }
  return rep;
}

}  // namespace superball
