// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "cli_support.hpp"
#include "oracles/oracles.hpp"
#include "superball/superball.hpp"
#include "support.hpp"

using namespace superball;
using testing_support::Engine;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

json load_golden(const char* name) {
  std::ifstream f(std::string(GOLDEN_DIR) + "/" + name);
  return json::parse(f);
}

std::vector<double> unit(std::vector<double> x, const SpaceParams& s) {
  const double r = norm(x, s);
  for (double& c : x) c /= r;
  return x;
}

// 1 ------------------------------------------------------------------------
Outcome clarkson_suite() {
  Engine rng(101);
  std::uniform_int_distribution<int> dim(1, 10);
  std::size_t pairs = 0, failures = 0;
  double worst = 0.0;  // most negative residual / scale seen
  auto run = [&](double p, ClarksonDirection dir) {
    for (int k = 0; k < 10000; ++k) {
      const int n = dim(rng);
      const auto cuts = testing_support::random_cuts(n, rng);
      const SpaceParams s(p, BlockSpec(cuts));
      const auto x = testing_support::random_point(n, rng);
      const auto y = testing_support::random_point(n, rng);
      const auto r = clarkson_check(x, y, s, dir);
      // independent long-double evaluation of the same sides
      const auto o = oracle::clarkson_sides(x, y, p, cuts);
      const long double sgn = dir == ClarksonDirection::reversed ? -1.0L : 1.0L;
      const double o3 = static_cast<double>(std::min(sgn * o.i3_left, sgn * o.i3_right) / o.scale3);
      const double o4 = static_cast<double>(sgn * o.i4 / o.scale4);
      const double o5 = static_cast<double>(sgn * o.i5 / o.scale5);
      const bool ok = r.holds(1e-9) && o3 >= -1e-9 && o4 >= -1e-9 && o5 >= -1e-9;
      worst = std::min({worst, r.residual3 / r.scale3, r.residual4 / r.scale4, r.residual5 / r.scale5, o3, o4, o5});
      ++pairs;
      if (!ok) ++failures;
    }
  };
  for (double p : {1.05, 1.1, 1.25, 1.5, 1.75, 2.0}) run(p, ClarksonDirection::reversed);
  for (double p : {2.0, 2.5, 3.0}) run(p, ClarksonDirection::stated);
  return {failures == 0, fmt("%zu pairs, %zu failures, worst relative residual %.2e", pairs, failures, worst)};
}

// 2 ------------------------------------------------------------------------
Outcome uniform_convexity() {
  Engine rng(202);
  std::uniform_int_distribution<int> dim(1, 10);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::size_t pairs = 0, failures = 0;
  double max_eps = 0.0;
  for (double p : {1.05, 1.1, 1.25, 1.5, 1.75, 2.0, 2.5, 3.0}) {
    for (int k = 0, here = 0; here < 10000; ++k) {
      const int n = dim(rng);
      const SpaceParams s(p, BlockSpec(testing_support::random_cuts(n, rng)));
      const auto x = unit(testing_support::random_point(n, rng), s);
      auto y = unit(testing_support::random_point(n, rng), s);
      if (k % 2 == 0) {  // push half the pairs towards antipodal so eps reaches 2
        const double w = std::pow(u01(rng), 3.0);
        for (int i = 0; i < n; ++i) y[i] = -x[i] + w * y[i];
        if (norm(y, s) == 0.0) continue;
        y = unit(y, s);
      }
      std::vector<double> d(static_cast<std::size_t>(n));
      for (int i = 0; i < n; ++i) d[i] = x[i] - y[i];
      const double sep = std::min(2.0, norm(d, s));
      if (sep <= 0.0) continue;
      const double eps = sep * (1.0 - u01(rng));  // in (0, sep]
      max_eps = std::max(max_eps, eps);
      ++pairs;
      ++here;
      if (!uniform_convexity_check(x, y, eps, s)) ++failures;
    }
  }
  return {failures == 0 && max_eps > 1.99,
          fmt("%zu pairs over 8 exponents, %zu failures, eps up to %.4f", pairs, failures, max_eps)};
}

// 3 ------------------------------------------------------------------------
Outcome constant_chain() {
  std::size_t bad = 0;
  double max_res = 0.0, min_margin = 1.0;
  for (int i = 1; i <= 50; ++i) {
    const double p = 1.0 + i / 50.0;
    const auto c = compute_constant_chain(p);
    max_res = std::max(max_res, c.residual_h);
    min_margin = std::min(min_margin, c.convexity_margin);
    // x_p < c_p < 2 is checked on the gaps 2 - x_p > 2 - c_p > 0: near p = 1 both
    // constants are within rounding of 2 and only the gaps are representable
    const bool ok = c.residual_h >= 0.0 && c.residual_h <= 1e-8 && c.c_p_gap > 0.0 && c.c_p_gap < c.x_p_gap &&
                    c.convexity_margin > 0.0;
    if (!ok) ++bad;
  }
  const double q = 2.0, target = 1.0 / 9.0;
  const bool bracket = oracle::h(1.85L, q) < target && oracle::h(1.86L, q) > target;
  const double golden = load_golden("constants_p2.json")["c_p"].get<double>();
  const double c2 = compute_constant_chain(2.0).c_p;
  const double err = std::fabs(c2 - golden);
  return {bad == 0 && bracket && err <= 1e-9,
          fmt("50 exponents, %zu bad, max residual %.2e, min margin %.3e, c_2 = %.16f (golden err %.1e)", bad,
              max_res, min_margin, c2, err)};
}

// 4 ------------------------------------------------------------------------
Outcome volume_oracle() {
  Engine rng(404);
  std::uniform_int_distribution<int> dim(1, 4);
  std::uniform_real_distribution<double> pd(1.0, 3.0);
  int failures = 0;
  double worst_z = 0.0;
  for (int k = 0; k < 10; ++k) {
    const int n = dim(rng);
    const double p = pd(rng);
    const auto cuts = testing_support::random_cuts(n, rng);
    const double v = unit_ball_volume(p, BlockSpec(cuts));
    const auto mc = oracle::rejection_volume(p, cuts, 10'000'000, 4000 + static_cast<std::uint64_t>(k));
    const double z = std::fabs(v - mc.volume) / mc.se;
    worst_z = std::max(worst_z, z);
    if (z > 3.0) ++failures;
  }
  return {failures == 0, fmt("10 configurations, 1e7 samples each, %d outside 3 SE, max |z| = %.2f", failures, worst_z)};
}

// 5 ------------------------------------------------------------------------
Outcome tonks(double lambda) {
  const SpaceParams s(2.0, BlockSpec::euclidean(1));
  std::string detail;
  bool ok = true;
  for (bool ring : {true, false}) {
    const Region reg = ring ? Region::torus(20.0) : Region::ball(10.0);
    const auto m = ModelParams::make(s, reg, lambda, 0.5);
    ChainOptions o;
    o.steps = 1'000'000;
    o.burn_in = 50'000;
    o.probes = 1;
    o.seed = derive_seed(5050, static_cast<std::uint64_t>(lambda * 100) + (ring ? 1 : 0));
    const auto e = run_chain(m, o);
    const auto g = oracle::rods_grand(lambda, 20.0L, 1.0L, ring);
    const double exact = static_cast<double>(g.mean) / 20.0;
    const double z = std::fabs(e.alpha_hat - exact) / e.alpha_se;
    const double log_z = static_cast<double>(std::log(g.z));
    const auto lib = grand_summary(m, 40);
    const bool here = z <= 3.0 && log_z <= lambda * 20.0 && std::fabs(lib.log_z - log_z) <= 1e-12 * log_z;
    ok = ok && here;
    detail += fmt("%s alpha %.5f vs %.5f (%.2f SE), log Z %.4f <= %.1f; ", ring ? "torus" : "interval",
                  e.alpha_hat, exact, z, log_z, lambda * 20.0);
  }
  detail.resize(detail.size() - 2);
  return {ok, detail};
}

// 6 / 7 --------------------------------------------------------------------
struct Setting {
  int n;
  double p;
};
const std::vector<Setting> settings{{1, 1.5}, {1, 2.0}, {2, 1.5}, {2, 2.0}, {3, 1.5}, {3, 2.0}};

ModelParams torus8(const Setting& st, double lambda) {
  const SpaceParams s(st.p, BlockSpec::singletons(st.n));
  return ModelParams::make(s, Region::torus(8.0 * s.r_unit()), lambda);
}

Outcome fv_identity() {
  int configs_ok = 0, configs = 0, worst_passes = 20;
  for (const auto& st : settings) {
    for (double lambda : {0.5, 2.0}) {
      const auto m = torus8(st, lambda);
      ChainOptions o;
      o.steps = 60'000;
      o.burn_in = 5'000;
      o.sample_every = 5;
      o.probes = 64;
      o.seed = derive_seed(606, static_cast<std::uint64_t>(configs));
      const auto reps = run_replicas(m, o, 20);
      int passes = 0;
      for (const auto& e : reps) passes += std::fabs(e.identity_gap) <= 3.0 * e.identity_se;
      worst_passes = std::min(worst_passes, passes);
      ++configs;
      configs_ok += passes >= 19;
    }
  }
  return {configs_ok == configs,
          fmt("%d/%d configurations with >= 95%% of 20 replicates within 3 SE (worst %d/20)", configs_ok, configs,
              worst_passes)};
}

Outcome alpha_monotone() {
  const std::vector<double> grid{0.25, 0.5, 1.0, 2.0, 4.0, 8.0};
  int violations = 0;
  double worst = 1e9;
  for (const auto& st : settings) {
    ChainOptions o;
    o.steps = 150'000;
    o.burn_in = 10'000;
    o.probes = 1;
    o.seed = 707 + static_cast<std::uint64_t>(st.n * 10 + st.p);
    const auto curve = estimate_alpha_curve(torus8(st, 1.0), grid, o);
    for (std::size_t i = 1; i < curve.size(); ++i) {
      const auto& a = curve[i - 1].estimate;
      const auto& b = curve[i].estimate;
      const double se = std::hypot(a.alpha_se, b.alpha_se);
      const double z = (b.alpha_hat - a.alpha_hat) / se;
      worst = std::min(worst, z);
      if (z < -3.0) ++violations;
    }
  }
  return {violations == 0, fmt("6 settings x 6 fugacities, %d decreases beyond 3 SE (smallest step %.1f SE)",
                               violations, worst)};
}

// 8 ------------------------------------------------------------------------
Outcome intersection() {
  std::size_t trials = 0, violations = 0, contain = 0, contain_bad = 0;
  double max_ratio = 0.0;
  std::size_t configs = 0;
  for (int n : {2, 3, 4}) {
    // plain l_p, plus a mixed layout with a Euclidean block where n allows one
    std::vector<BlockSpec> layouts{BlockSpec::singletons(n)};
    if (n > 2) layouts.push_back(BlockSpec({0, 1, n}));
    for (double p : {1.5, 2.0}) for (const auto& b : layouts) {
      const SpaceParams s(p, b);
      const auto rep = intersection_volume_check(s, compute_constant_chain(p), 200, 100'000, 808 + configs++);
      trials += rep.trials.size();
      violations += rep.violations;
      contain += rep.containment_checked;
      contain_bad += rep.containment_violations;
      max_ratio = std::max(max_ratio, rep.max_ratio);
    }
  }
  return {violations == 0 && contain_bad == 0,
          fmt("%zu layouts, %zu centers, %zu above c_p^n + 3 SE, max estimate / c_p^n = %.3f, %zu/%zu far points outside "
              "B(u/2, c'_p r)",
              configs, trials, violations, max_ratio, contain_bad, contain)};
}

// 9 ------------------------------------------------------------------------
Outcome pipeline() {
  const SpaceParams s(1.5, BlockSpec::singletons(2));
  const auto lat = build_lattice(10.0 * s.r_unit(), 0.999 * smallness_threshold(s), s);
  const auto cover = cover_probe_check(lat, 100'000, 909);
  const auto g = build_graph(lat);
  const double bound = degree_bound(lat.params);
  const auto mis = greedy_independent_set(g);
  const auto cert = emit_packing(mis, g, lat);
  const auto round = certificate_from_json(json::parse(to_json(cert).dump()));
  const auto v = verify_packing(round);
  const bool ok = cover.passed() && static_cast<double>(g.max_degree + 1) <= bound && v.valid && cert.density >= 0.25;
  return {ok, fmt("N = %zu in [%.0f, %.0f], %llu/%llu probes uncovered, max degree %zu (bound %.0f), %zu centers, "
                  "density %.4f, verify %s",
                  lat.size(), lat.params.n_lower, lat.params.n_upper,
                  static_cast<unsigned long long>(cover.uncovered), static_cast<unsigned long long>(cover.probes),
                  g.max_degree, bound, cert.centers.size(), cert.density, v.valid ? "valid" : "INVALID")};
}

// 10 -----------------------------------------------------------------------
Outcome entropy() {
  const SpaceParams s(2.0, BlockSpec::euclidean(1));
  const auto m = ModelParams::make(s, Region::ball(5.0), 1.0, 0.5);
  EntropyOptions o;
  o.samples = 1'000'000;
  o.seed = 1010;
  const auto r = entropy_estimate(m, 3, o);
  const double exact = std::log(static_cast<double>(oracle::rods_interval(3, 10.0L, 1.0L)) * 6.0 / 1000.0) / 3.0;
  const double z = std::fabs(r.value - exact) / r.se;
  const auto mono = entropy_monotonicity_check(m, {1, 2, 3}, o);
  return {r.defined && z <= 3.0 && mono.passed(),
          fmt("f(3) = %.5f +- %.5f vs %.5f (%.2f SE); f(1), f(2), f(3) = %.4f, %.4f, %.4f, %zu violations", r.value,
              r.se, exact, z, mono.results[0].value, mono.results[1].value, mono.results[2].value,
              mono.violations.size())};
}

// 11 -----------------------------------------------------------------------
Outcome determinism() {
  using testing_support::run_cli;
  testing_support::ScratchDir dir("acceptance");
  struct Case {
    std::string name, args;
    std::vector<std::string> files;
  };
  const std::vector<Case> cases{
      {"simulate",
       "simulate --p 1.5 --cuts 0,2,3 --size 5 --fugacity 1.5 --steps 20000 --burnin 1000 --seed 11 --replicas 3 "
       "--out OUT/trace.csv",
       {"trace.csv", "trace.json"}},
      {"pack", "pack --p 1.5 --cuts 0,2 --R 5 --probes 20000 --seed 11 --out OUT/cert.json", {"cert.json"}},
      {"thermo pressure",
       "thermo pressure --p 2 --cuts 0,2 --size 6 --fugacity 1 --grid 8 --steps 5000 --burnin 500 --probes 4 "
       "--seed 11 --out OUT/pressure.json",
       {"pressure.json"}},
      {"thermo entropy",
       "thermo entropy --p 1.5 --cuts 0,1,2 --size 6 --counts 2,4,6 --samples 50000 --seed 11 --out OUT/entropy.json",
       {"entropy.json"}},
  };
  std::vector<std::string> bad;
  for (const auto& c : cases) {
    std::vector<std::string> outputs[2];
    int codes[2];
    for (int run = 0; run < 2; ++run) {
      std::string args = c.args;
      const std::string sub = dir / std::to_string(run);
      std::filesystem::create_directories(sub);
      args.replace(args.find("OUT"), 3, sub);
      // second run uses a different worker count as well
      const auto r = run_cli(std::string("--threads ") + (run == 0 ? "1 " : "3 ") + args);
      codes[run] = r.code;
      outputs[run].push_back(r.out);
      for (const auto& f : c.files) outputs[run].push_back(testing_support::slurp(std::filesystem::path(sub) / f));
    }
    bool ok = codes[0] == 0 && codes[1] == 0 && outputs[0] == outputs[1];
    for (std::size_t k = 1; k < outputs[0].size(); ++k) ok = ok && !outputs[0][k].empty();
    if (!ok) bad.push_back(c.name);
  }
  std::string list;
  for (const auto& b : bad) list += " " + b;
  return {bad.empty(), bad.empty() ? "simulate, pack, thermo pressure, thermo entropy: two runs byte-identical"
                                   : "differs or failed:" + list};
}

// 12 -----------------------------------------------------------------------
Outcome golden_tables() {
  const auto golden = load_golden("density_table.json");
  const char* keys[] = {"bound", "fugacity_threshold", "z_star_at_threshold", "alpha_lower_at_threshold",
                        "pressure_formula_at_threshold", "pressure_formula_at_inverse_c", "entropy_formula"};
  std::size_t compared = 0, bad = 0;
  double worst = 0.0;
  auto compare = [&](double a, double b) {
    const double rel = std::fabs(a - b) / std::fabs(b);
    worst = std::max(worst, rel);
    ++compared;
    if (!(rel <= 1e-12)) ++bad;
  };
  for (double p : {1.5, 2.0}) {
    const auto chain = compute_constant_chain(p);
    const auto r = testing_support::run_cli("constants --p " + fmt("%g", p));
    if (r.code != 0) return {false, "constants command failed"};
    const auto emitted = json::parse(r.out)["density_table"];
    for (const auto& g : golden) {
      if (g["p"].get<double>() != p) continue;
      const int n = g["n"].get<int>();
      const auto b = density_lower_bound(n, chain);
      const auto fb = fugacity_bound(n, chain, b.fugacity_threshold);
      const double lib[] = {b.bound,
                            b.fugacity_threshold,
                            fb.z_star,
                            fb.alpha_lower,
                            pressure_bound_formula(n, b.fugacity_threshold),
                            pressure_bound_at_inverse_c(n, chain),
                            entropy_bound_formula(n, chain)};
      const json* row = nullptr;
      for (const auto& e : emitted) {
        if (e["n"] == n) row = &e;
      }
      if (row == nullptr) return {false, fmt("n = %d missing from the emitted table", n)};
      for (std::size_t k = 0; k < std::size(keys); ++k) {
        const double want = g[keys[k]].get<double>();
        compare(lib[k], want);
        compare((*row)[keys[k]].get<double>(), want);
      }
    }
  }
  return {bad == 0 && compared == 2 * 8 * 7,
          fmt("%zu values (library and emitted), %zu beyond 1e-12, max relative difference %.1e", compared, bad,
              worst)};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
    double time_limit;  // seconds, 0 = none
  };
  const std::vector<Criterion> criteria{
      {1, "Clarkson suite", clarkson_suite, 30.0},
      {2, "uniform convexity", uniform_convexity, 0.0},
      {3, "constant chain", constant_chain, 0.0},
      {4, "volume oracle", volume_oracle, 120.0},
      {5, "Tonks gas", [] {
         Outcome all{true, ""};
         for (double lam : {0.5, 1.0, 2.0}) {
           const auto t0 = std::chrono::steady_clock::now();
           auto o = tonks(lam);
           const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
           if (secs >= 60.0) o.pass = false;
           all.pass = all.pass && o.pass;
           all.detail += fmt("lambda %g [%.1fs]: ", lam, secs) + o.detail + (lam < 2.0 ? " | " : "");
         }
         return all;
       }, 0.0},
      {6, "free-volume identity", fv_identity, 0.0},
      {7, "density monotone in fugacity", alpha_monotone, 0.0},
      {8, "intersection volume bound", intersection, 300.0},
      {9, "lattice packing pipeline", pipeline, 120.0},
      {10, "entropy oracle", entropy, 0.0},
      {11, "determinism", determinism, 0.0},
      {12, "density table and pressure formula", golden_tables, 0.0},
  };

  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::string timing = fmt("%.1fs", secs);
    if (c.time_limit > 0.0) {
      timing += fmt(" (limit %.0fs)", c.time_limit);
      if (secs >= c.time_limit) o.pass = false;
    }
    failed += !o.pass;
    std::printf("[%s] %d %s: %s [%s]\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(), timing.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
