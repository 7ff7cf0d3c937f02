#pragma once

// Uniform convexity of the mixed norm and the geometric constant c_p < 2 that
// controls the density lower bound log(2/c_p) * n / 2^n.
//
// For p close to 1 both x_p and c_p are within a few ulps of 2 (at p = 1.02,
// 2 - c_p is about 1e-23), so the chain is carried in terms of the gaps 2 - x_p
// and 2 - c_p. The plain values are kept for display and agree with 2 - gap.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <string>

#include "superball/error.hpp"
#include "superball/geometry.hpp"

namespace superball {

namespace detail {

inline void require_constant_range(double p, const char* who) {
  if (!(p > 1.0 && p <= 2.0)) {
    throw InputError(std::string(who) + ": p must lie in (1, 2], got " + std::to_string(p));
  }
}

inline double conjugate(double p) { return p / (p - 1.0); }

/// 1 - (1 - (eps/2)^r)^{1/r}, evaluated without cancellation for small eps.
inline double convexity_modulus(double eps, double r) {
  const double a = std::pow(0.5 * eps, r);
  if (a >= 1.0) return 1.0;
  return -std::expm1(std::log1p(-a) / r);
}

}  // namespace detail

/// Modulus of convexity delta_p(eps) = 1 - (1 - (eps/2)^q)^{1/q} for 1 < p <= 2.
inline double delta_p(double eps, double p) {
  detail::require_constant_range(p, "delta_p");
  detail::require(eps > 0.0 && eps <= 2.0, "delta_p: eps must lie in (0, 2]");
  return detail::convexity_modulus(eps, detail::conjugate(p));
}

// ---------------------------------------------------------------------------
// Clarkson-type inequalities
// ---------------------------------------------------------------------------

enum class ClarksonDirection {
  automatic,  // stated for p > 2, reversed for p <= 2
  stated,     // the p >= 2 direction
  reversed,   // the 1 < p <= 2 direction
};

/// Signed residuals for the three inequalities, oriented so that a
/// nonnegative value means "holds". The two-sided first inequality reports the
/// smaller of its two residuals.
struct ClarksonReport {
  double p = 2.0;
  bool reversed = true;
  double residual3 = 0.0, scale3 = 0.0;
  double residual4 = 0.0, scale4 = 0.0;
  double residual5 = 0.0, scale5 = 0.0;

  bool holds(double rel_tol = 1e-9) const {
    return residual3 >= -rel_tol * scale3 && residual4 >= -rel_tol * scale4 &&
           residual5 >= -rel_tol * scale5;
  }
};

inline ClarksonReport clarkson_check(std::span<const double> x, std::span<const double> y,
                                     const SpaceParams& space,
                                     ClarksonDirection dir = ClarksonDirection::automatic) {
  detail::check_dim(x.size(), space);
  detail::check_dim(y.size(), space);
  detail::require(space.p() > 1.0, "clarkson_check: p must exceed 1");
  const double p = space.p();
  const double q = space.q();
  const double a = norm(x, space);
  const double b = norm(y, space);
  const double s = detail::mixed_norm(space, [&](int i) { return x[i] + y[i]; });
  const double d = detail::mixed_norm(space, [&](int i) { return x[i] - y[i]; });

  const double ap_bp = std::pow(a, p) + std::pow(b, p);
  const double aq_bq = std::pow(a, q) + std::pow(b, q);
  const double sp_dp = std::pow(s, p) + std::pow(d, p);
  const double sq_dq = std::pow(s, q) + std::pow(d, q);

  const bool rev = dir == ClarksonDirection::reversed || (dir == ClarksonDirection::automatic && p <= 2.0);
  const double sign = rev ? -1.0 : 1.0;

  ClarksonReport r;
  r.p = p;
  r.reversed = rev;

  // 2(A^p + B^p) <= S^p + D^p <= 2^{p-1}(A^p + B^p)
  const double lower = 2.0 * ap_bp;
  const double upper = std::pow(2.0, p - 1.0) * ap_bp;
  const double r3a = sign * (sp_dp - lower);
  const double r3b = sign * (upper - sp_dp);
  r.residual3 = std::min(r3a, r3b);
  r.scale3 = std::max({lower, upper, sp_dp});

  // 2(A^p + B^p)^{q-1} <= S^q + D^q
  const double lhs4 = 2.0 * std::pow(ap_bp, q - 1.0);
  r.residual4 = sign * (sq_dq - lhs4);
  r.scale4 = std::max(lhs4, sq_dq);

  // S^p + D^p <= 2(A^q + B^q)^{p-1}
  const double rhs5 = 2.0 * std::pow(aq_bq, p - 1.0);
  r.residual5 = sign * (rhs5 - sp_dp);
  r.scale5 = std::max(rhs5, sp_dp);
  return r;
}

/// For unit x, y with ||x - y|| >= eps, checks ||(x + y)/2|| <= 1 - delta(eps).
/// The modulus uses the exponent q for p <= 2 and p for p > 2.
inline bool uniform_convexity_check(std::span<const double> x, std::span<const double> y, double eps,
                                    const SpaceParams& space) {
  detail::check_dim(x.size(), space);
  detail::check_dim(y.size(), space);
  detail::require(space.p() > 1.0, "uniform_convexity_check: p must exceed 1");
  detail::require(eps > 0.0 && eps <= 2.0, "uniform_convexity_check: eps must lie in (0, 2]");
  detail::require(std::fabs(norm(x, space) - 1.0) <= 1e-9 && std::fabs(norm(y, space) - 1.0) <= 1e-9,
                  "uniform_convexity_check: x and y must be unit vectors");
  const double sep = detail::mixed_norm(space, [&](int i) { return x[i] - y[i]; });
  detail::require(sep >= eps, "uniform_convexity_check: ||x - y|| < eps");
  const double mid = detail::mixed_norm(space, [&](int i) { return 0.5 * (x[i] + y[i]); });
  const double r = space.p() <= 2.0 ? space.q() : space.p();
  return mid <= 1.0 - detail::convexity_modulus(eps, r) + 1e-12;
}

// ---------------------------------------------------------------------------
// h(x) and x_p
// ---------------------------------------------------------------------------

/// h(x) = (x/4 + 1/2 - 1/x)^q + ((x + 2)/4)^q - 1, for x >= 1.5.
inline double h(double x, double q) {
  return std::pow(x / 4.0 + 0.5 - 1.0 / x, q) + std::pow((x + 2.0) / 4.0, q) - 1.0;
}

namespace detail {

/// h(2 - s), accurate when s is tiny.
inline double h_gap(double s, double q) {
  const double first = 0.5 - 0.25 * s - s / (2.0 * (2.0 - s));
  return std::pow(first, q) + std::expm1(q * std::log1p(-0.25 * s));
}

inline double h_target(double q) { return std::exp(-q * std::log(3.0)); }

}  // namespace detail

struct XpSolution {
  double x_p = 0.0;
  double gap = 0.0;       // 2 - x_p
  double residual = 0.0;  // h(x_p) - 3^{-q}
};

/// Smallest x in (1.5, 2) with h >= 3^{-q} on [x, 2], nudged inward so that the
/// inequality is strict at the endpoint.
///
/// The crossing is located by a grid scan on s = 2 - x and refined by bisection
/// to full double precision. A second crossing anywhere on (1.5, 2) is treated
/// as an error rather than assumed away.
inline XpSolution solve_x_p_detail(double p) {
  detail::require_constant_range(p, "solve_x_p");
  const double q = detail::conjugate(p);
  const double target = detail::h_target(q);
  auto g = [&](double s) { return detail::h_gap(s, q) - target; };

  constexpr int scan = 10000;
  constexpr double s_max = 0.5;
  if (!(g(0.0) > 0.0)) throw ComputationError("solve_x_p: h(2) does not exceed 3^{-q}");
  int first_neg = -1;
  for (int k = 1; k <= scan; ++k) {
    const double s = s_max * k / scan;
    const double v = g(s);
    if (first_neg < 0 && v <= 0.0) {
      first_neg = k;
    } else if (first_neg >= 0 && v > 0.0) {
      throw ComputationError("solve_x_p: h - 3^{-q} changes sign more than once on (1.5, 2) for p = " +
                             std::to_string(p));
    }
  }
  if (first_neg < 0) throw ComputationError("solve_x_p: no sign change on (1.5, 2)");

  double lo = s_max * (first_neg - 1) / scan;  // g(lo) > 0
  double hi = s_max * first_neg / scan;        // g(hi) <= 0
  for (int it = 0; it < 4000; ++it) {
    const double mid = lo + 0.5 * (hi - lo);
    if (mid <= lo || mid >= hi) break;
    (g(mid) > 0.0 ? lo : hi) = mid;
  }
  if (!(lo > 0.0)) throw ComputationError("solve_x_p: root collapsed onto x = 2");

  const double nudge = std::min(1e-9, 1e-6 * lo);
  const double s_p = lo - nudge;
  for (int k = 0; k <= scan; ++k) {
    const double s = s_p * k / scan;
    if (g(s) < 0.0) throw ComputationError("solve_x_p: h < 3^{-q} inside [x_p, 2]");
  }
  XpSolution out;
  out.gap = s_p;
  out.x_p = 2.0 - s_p;
  out.residual = g(s_p);
  if (!(out.residual >= 0.0 && out.residual <= 1e-8)) {
    throw ComputationError("solve_x_p: residual outside [0, 1e-8]");
  }
  return out;
}

inline double solve_x_p(double p) { return solve_x_p_detail(p).x_p; }

struct ConstantChain {
  double p = 2.0;
  double q = 2.0;
  double x_p = 0.0;
  double x_p_gap = 0.0;  // 2 - x_p
  double eps_p = 0.0;    // 1 + x_p/2 - 2/x_p
  double delta_at_eps = 0.0;
  double convexity_margin = 0.0;  // 2 delta_p(eps_p) - (2 - x_p)/2, must be > 0
  double c_prime = 0.0;
  double c_prime_gap = 0.0;
  double c_p = 0.0;
  double c_p_gap = 0.0;  // 2 - c_p
  double residual_h = 0.0;

  /// log(2 / c_p), from the gap.
  double log_two_over_c() const { return -std::log1p(-0.5 * c_p_gap); }
  double log_c() const { return std::numbers::ln2 - log_two_over_c(); }
};

inline ConstantChain compute_constant_chain(double p) {
  detail::require_constant_range(p, "compute_constant_chain");
  const XpSolution xs = solve_x_p_detail(p);
  const double s = xs.gap;

  ConstantChain c;
  c.p = p;
  c.q = detail::conjugate(p);
  c.x_p = xs.x_p;
  c.x_p_gap = s;
  c.residual_h = xs.residual;
  c.eps_p = 1.0 - 0.5 * s - s / (2.0 - s);
  c.delta_at_eps = delta_p(c.eps_p, p);
  c.convexity_margin = 2.0 * c.delta_at_eps - 0.5 * s;
  if (!(c.convexity_margin > 0.0)) {
    throw ComputationError("compute_constant_chain: 2 delta_p(eps_p) - (2 - x_p)/2 is not positive (" +
                           std::to_string(c.convexity_margin) + ")");
  }
  // c'_p = max{(x_p + 2)/2, 2 - margin};  c_p = max{x_p, c'_p}
  c.c_prime_gap = std::min(0.5 * s, c.convexity_margin);
  c.c_prime = 2.0 - c.c_prime_gap;
  c.c_p_gap = std::min(s, c.c_prime_gap);
  c.c_p = 2.0 - c.c_p_gap;
  if (!(c.c_p_gap > 0.0 && c.c_p_gap < s)) {
    throw ComputationError("compute_constant_chain: c_p outside (x_p, 2)");
  }
  return c;
}

// ---------------------------------------------------------------------------
// Lambert W and the density bound
// ---------------------------------------------------------------------------

/// Principal branch W(x) for x > 0 (Halley iteration).
inline double lambert_w(double x) {
  detail::require(x > 0.0 && std::isfinite(x), "lambert_w: x must be positive and finite");
  double w;
  if (x < 3.0) {
    w = std::log1p(x);
    w = w * (1.0 - std::log1p(w) / (2.0 + w));
  } else {
    const double l = std::log(x);
    w = l - std::log(l);
  }
  for (int it = 0; it < 100; ++it) {
    const double ew = std::exp(w);
    const double f = w * ew - x;
    const double wp1 = w + 1.0;
    const double step = f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1));
    w -= step;
    if (std::fabs(step) <= 1e-16 * (1.0 + std::fabs(w))) break;
  }
  return w;
}

/// W(exp(log_x)), usable when exp(log_x) overflows.
inline double lambert_w_of_log(double log_x) {
  if (log_x < 600.0) return lambert_w(std::exp(log_x));
  double w = log_x - std::log(log_x);
  for (int it = 0; it < 100; ++it) {
    const double step = (w + std::log(w) - log_x) / (1.0 + 1.0 / w);
    w -= step;
    if (std::fabs(step) <= 1e-16 * w) break;
  }
  return w;
}

struct DensityBound {
  int n = 1;
  double p = 2.0;
  double c_p = 0.0;
  double c_p_gap = 0.0;
  double log_two_over_c = 0.0;
  double bound = 0.0;               // log(2/c_p) * n / 2^n
  double fugacity_threshold = 0.0;  // n^{-1} c_p^{-n}
};

/// Fugacity-specific quantities: z* = W(lambda 2^n e^{2 lambda c_p^n}) and the
/// resulting alpha >= lambda e^{-z*}.
struct FugacityBound {
  double lambda = 0.0;
  double z_star = 0.0;
  double alpha_lower = 0.0;
};

inline DensityBound density_lower_bound(int n, const ConstantChain& chain) {
  detail::require(n >= 1, "density_lower_bound: n must be >= 1");
  DensityBound b;
  b.n = n;
  b.p = chain.p;
  b.c_p = chain.c_p;
  b.c_p_gap = chain.c_p_gap;
  b.log_two_over_c = chain.log_two_over_c();
  b.bound = std::exp(std::log(b.log_two_over_c) + std::log(static_cast<double>(n)) - n * std::numbers::ln2);
  b.fugacity_threshold = std::exp(-std::log(static_cast<double>(n)) - n * chain.log_c());
  return b;
}

inline DensityBound density_lower_bound(int n, double p) {
  detail::require_constant_range(p, "density_lower_bound");
  return density_lower_bound(n, compute_constant_chain(p));
}

inline FugacityBound fugacity_bound(int n, const ConstantChain& chain, double lambda) {
  detail::require(n >= 1, "fugacity_bound: n must be >= 1");
  detail::require(lambda > 0.0, "fugacity_bound: lambda must be positive");
  const double log_cn = n * chain.log_c();
  const double log_arg = std::log(lambda) + n * std::numbers::ln2 + 2.0 * lambda * std::exp(log_cn);
  FugacityBound f;
  f.lambda = lambda;
  f.z_star = lambert_w_of_log(log_arg);
  f.alpha_lower = std::exp(std::log(lambda) - f.z_star);
  return f;
}

/// ((log 2 + log(lambda)/n)^2 / 2) * n^2 / 2^n, the leading term of the
/// pressure lower bound; meaningful for lambda in (2^{-n}, c_p^{-n}].
inline double pressure_bound_formula(int n, double lambda) {
  detail::require(n >= 1 && lambda > 0.0, "pressure_bound_formula: need n >= 1 and lambda > 0");
  const double t = std::numbers::ln2 + std::log(lambda) / n;
  return 0.5 * t * t * std::exp(2.0 * std::log(static_cast<double>(n)) - n * std::numbers::ln2);
}

/// The same formula at lambda = c_p^{-n}, where log 2 + log(lambda)/n is
/// exactly log(2/c_p); evaluated without the cancellation.
inline double pressure_bound_at_inverse_c(int n, const ConstantChain& chain) {
  detail::require(n >= 1, "pressure_bound_at_inverse_c: need n >= 1");
  const double t = chain.log_two_over_c();
  return 0.5 * t * t * std::exp(2.0 * std::log(static_cast<double>(n)) - n * std::numbers::ln2);
}

/// -log(2/c_p) * n, the leading term of the entropy-density lower bound.
inline double entropy_bound_formula(int n, const ConstantChain& chain) {
  return -chain.log_two_over_c() * n;
}

}  // namespace superball
