// superball: command-line front end for the library.
//
// Exit status: 0 success, 2 input error, 3 computation error, 4 a check or
// certificate reported a violation (the output is still written).

#include <unistd.h>

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "superball/superball.hpp"

namespace fs = std::filesystem;
namespace sb = superball;
using sb::json;

namespace {

constexpr int exit_input = 2;
constexpr int exit_computation = 3;
constexpr int exit_violation = 4;

constexpr const char* out_dir_env = "SUPERBALL_OUT_DIR";

fs::path resolve_out(const std::string& out) {
  fs::path p(out);
  if (p.is_relative()) {
    if (const char* dir = std::getenv(out_dir_env); dir != nullptr && *dir != '\0') p = fs::path(dir) / p;
  }
  return p;
}

// Write to a sibling temp file, then rename over the target.
void write_atomic(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw sb::InputError("cannot open " + tmp.string() + " for writing");
    f << content;
    f.flush();
    if (!f) throw sb::InputError("failed writing " + tmp.string());
  }
  fs::rename(tmp, path);
}

/// Print to stdout, or write atomically when an output path is given.
void emit(const std::string& out, const std::string& content) {
  if (out.empty()) {
    std::cout << content;
    return;
  }
  const fs::path path = resolve_out(out);
  write_atomic(path, content);
  std::cerr << "wrote " << path.string() << "\n";
}

json envelope(const std::string& command, json config) {
  return json{{"artifact_version", sb::version}, {"command", command}, {"config", std::move(config)}};
}

struct SpaceOpts {
  double p = 2.0;
  std::vector<int> cuts;

  void add(CLI::App* app) {
    app->add_option("--p", p, "norm exponent p >= 1")->required();
    app->add_option("--cuts", cuts, "block cuts, e.g. 0,2,3")->required()->delimiter(',');
  }
  sb::SpaceParams make() const { return sb::SpaceParams(p, sb::BlockSpec(cuts)); }
  void echo(json& cfg, const sb::SpaceParams& s) const {
    cfg["p"] = p;
    cfg["cuts"] = cuts;
    cfg["n"] = s.n();
    cfg["r_unit"] = s.r_unit();
    if (s.above_two()) cfg["p_above_two"] = true;
  }
};

// Lengths are in multiples of r_unit unless --absolute is given.
struct RegionOpts {
  std::string kind = "torus";
  double size = 8.0;
  double radius = 0.0;
  bool absolute = false;

  void add(CLI::App* app) {
    app->add_option("--region", kind, "torus (side L) or ball (radius R)")
        ->check(CLI::IsMember({"torus", "ball"}))
        ->capture_default_str();
    app->add_option("--size", size, "L or R")->capture_default_str();
    app->add_option("--radius", radius, "hard-core radius r (0 = r_unit)")->capture_default_str();
    app->add_flag("--absolute", absolute, "lengths are absolute instead of multiples of r_unit");
  }
  double scale(const sb::SpaceParams& s) const { return absolute ? 1.0 : s.r_unit(); }
  sb::Region make(const sb::SpaceParams& s) const {
    const double len = size * scale(s);
    return kind == "ball" ? sb::Region::ball(len) : sb::Region::torus(len);
  }
  double resolved_radius(const sb::SpaceParams& s) const { return radius > 0.0 ? radius * scale(s) : s.r_unit(); }
  void echo(json& cfg, const sb::SpaceParams& s) const {
    cfg["region"] = kind;
    cfg["size"] = size;
    cfg["absolute"] = absolute;
    cfg["region_length"] = size * scale(s);
    cfg["radius"] = resolved_radius(s);
  }
};

std::string csv_header(const json& env) {
  std::ostringstream os;
  os << "# artifact_version=" << sb::version << "\n# config=" << env.at("config").dump() << "\n";
  return os.str();
}

// ---------------------------------------------------------------------------

struct ConstantsCmd {
  double p = 2.0;
  std::vector<int> ns{8, 16, 32, 48};
  std::string format = "json";
  std::string out;

  void add(CLI::App* app) {
    app->add_option("--p", p, "exponent in (1, 2]")->required();
    app->add_option("--n", ns, "dimensions for the density table")->delimiter(',')->capture_default_str();
    app->add_option("--format", format)->check(CLI::IsMember({"json", "text"}))->capture_default_str();
    app->add_option("--out", out, "output file (default stdout)");
  }

  int run() const {
    const sb::ConstantChain chain = sb::compute_constant_chain(p);
    json table = json::array();
    for (int n : ns) {
      const sb::DensityBound b = sb::density_lower_bound(n, chain);
      json row = sb::to_json(b);
      const double lam_threshold = b.fugacity_threshold;
      const sb::FugacityBound fb = sb::fugacity_bound(n, chain, lam_threshold);
      row["z_star_at_threshold"] = fb.z_star;
      row["alpha_lower_at_threshold"] = fb.alpha_lower;
      row["pressure_formula_at_threshold"] = sb::pressure_bound_formula(n, lam_threshold);
      row["pressure_formula_at_inverse_c"] = sb::pressure_bound_at_inverse_c(n, chain);
      row["entropy_formula"] = sb::entropy_bound_formula(n, chain);
      table.push_back(std::move(row));
    }
    json env = envelope("constants", json{{"p", p}, {"n", ns}, {"format", format}});
    env["chain"] = sb::to_json(chain);
    env["density_table"] = std::move(table);

    if (format == "json") {
      emit(out, env.dump(2) + "\n");
      return 0;
    }
    std::ostringstream os;
    os << std::setprecision(17);
    os << "# artifact_version " << sb::version << "\n";
    for (const auto& [k, v] : env["chain"].items()) os << k << " " << v.dump() << "\n";
    os << "\n# n bound fugacity_threshold pressure_formula_at_threshold pressure_formula_at_inverse_c\n";
    for (const auto& row : env["density_table"]) {
      os << row["n"].dump() << " " << row["bound"].dump() << " " << row["fugacity_threshold"].dump() << " "
         << row["pressure_formula_at_threshold"].dump() << " " << row["pressure_formula_at_inverse_c"].dump()
         << "\n";
    }
    emit(out, os.str());
    return 0;
  }
};

struct VolumeCmd {
  SpaceOpts space;
  std::optional<double> R;
  std::string out;

  void add(CLI::App* app) {
    space.add(app);
    app->add_option("--R", R, "also report vol(B(R)) for this absolute radius");
    app->add_option("--out", out, "output file (default stdout)");
  }

  int run() const {
    const sb::SpaceParams s = space.make();
    json cfg;
    space.echo(cfg, s);
    if (R) cfg["R"] = *R;
    json env = envelope("volume", cfg);
    env["unit_ball_volume"] = sb::unit_ball_volume(s.p(), s.blocks());
    env["log_unit_ball_volume"] = sb::log_unit_ball_volume(s.p(), s.blocks());
    env["r_unit"] = s.r_unit();
    if (R) {
      sb::detail::require(*R > 0.0, "volume: R must be positive");
      env["ball_volume"] = s.ball_volume(*R);
    }
    emit(out, env.dump(2) + "\n");
    return 0;
  }
};

struct SimulateCmd {
  SpaceOpts space;
  RegionOpts region;
  double fugacity = 1.0;
  std::uint64_t steps = 100000;
  std::uint64_t burnin = 10000;
  std::uint64_t seed = 1;
  int replicas = 1;
  int probes = 64;
  int sample_every = 1;
  bool paranoid = false;
  std::string out;
  std::string summary;

  void add(CLI::App* app) {
    space.add(app);
    region.add(app);
    app->add_option("--fugacity", fugacity, "lambda > 0")->capture_default_str();
    app->add_option("--steps", steps)->capture_default_str();
    app->add_option("--burnin", burnin)->capture_default_str();
    app->add_option("--seed", seed)->capture_default_str();
    app->add_option("--replicas", replicas)->capture_default_str();
    app->add_option("--probes", probes, "free-volume probes per recorded step")->capture_default_str();
    app->add_option("--sample-every", sample_every)->capture_default_str();
    app->add_flag("--paranoid", paranoid, "recheck the hard-core condition after every accepted move");
    app->add_option("--out", out, "trace CSV")->required();
    app->add_option("--summary", summary, "summary JSON (default: the CSV path with .json)");
  }

  int run(unsigned threads) const {
    const sb::SpaceParams s = space.make();
    const auto params = sb::ModelParams::make(s, region.make(s), fugacity, region.resolved_radius(s));
    sb::detail::require(replicas >= 1, "simulate: replicas must be >= 1");

    json cfg;
    space.echo(cfg, s);
    region.echo(cfg, s);
    cfg["fugacity"] = fugacity;
    cfg["steps"] = steps;
    cfg["burnin"] = burnin;
    cfg["seed"] = seed;
    cfg["replicas"] = replicas;
    cfg["probes"] = probes;
    cfg["sample_every"] = sample_every;
    cfg["paranoid"] = paranoid;
    json env = envelope("simulate", cfg);
    env["seed"] = seed;

    sb::ChainOptions opt;
    opt.steps = steps;
    opt.burn_in = burnin;
    opt.probes = probes;
    opt.sample_every = sample_every;
    opt.paranoid = paranoid;

    const auto R = static_cast<std::size_t>(replicas);
    std::vector<sb::ChainEstimate> est(R);
    std::vector<std::string> traces(R);
    sb::parallel_for(R, threads, [&](std::size_t i) {
      sb::ChainOptions o = opt;
      o.seed = sb::derive_seed(seed, i);
      std::string& buf = traces[i];
      const std::string prefix = std::to_string(i) + ",";
      est[i] = sb::run_chain(params, o, [&](const sb::TraceRow& row) {
        buf += prefix;
        buf += std::to_string(row.step);
        buf += ',';
        buf += std::to_string(row.count);
        buf += ',';
        buf += std::to_string(row.fv_hits);
        buf += ',';
        buf += static_cast<char>(row.move);
        buf += row.accepted ? ",1\n" : ",0\n";
      });
    });

    std::string csv = csv_header(env);
    csv += "replica,step,count,fv_probe_hits,move,accepted\n";
    for (const auto& t : traces) csv += t;
    emit(out, csv);

    json reps = json::array();
    for (const auto& e : est) reps.push_back(sb::to_json(e));
    env["estimate"] = sb::to_json(sb::merge_estimates(est));
    env["replica_estimates"] = std::move(reps);
    std::string summary_path = summary;
    if (summary_path.empty()) summary_path = fs::path(out).replace_extension(".json").string();
    emit(summary_path, env.dump(2) + "\n");
    std::cout << env["estimate"].dump(2) << "\n";
    return 0;
  }
};

struct PackCmd {
  SpaceOpts space;
  double R = 10.0;
  std::optional<double> eps;
  std::string order = "mindeg";
  std::string rep = "center";
  std::uint64_t probes = 100000;
  std::uint64_t seed = 1;
  bool absolute = false;
  std::string out = "certificate.json";

  void add(CLI::App* app) {
    space.add(app);
    app->add_option("--R", R, "region radius")->capture_default_str();
    app->add_option("--eps", eps, "cube side (default: 0.999 x the smallness threshold)");
    app->add_option("--order", order)->check(CLI::IsMember({"mindeg", "lex"}))->capture_default_str();
    app->add_option("--rep", rep, "cube representative")->check(CLI::IsMember({"center", "corner"}))
        ->capture_default_str();
    app->add_option("--probes", probes, "cover probes")->capture_default_str();
    app->add_option("--seed", seed)->capture_default_str();
    app->add_flag("--absolute", absolute, "R and eps are absolute instead of multiples of r_unit");
    app->add_option("--out", out, "certificate JSON")->capture_default_str();
  }

  int run(unsigned threads) const {
    const sb::SpaceParams s = space.make();
    const double unit = absolute ? 1.0 : s.r_unit();
    const double R_abs = R * unit;
    const double eps_abs = eps ? *eps * unit : 0.999 * sb::smallness_threshold(s);

    json cfg;
    space.echo(cfg, s);
    cfg["R"] = R;
    cfg["absolute"] = absolute;
    cfg["R_abs"] = R_abs;
    cfg["eps_abs"] = eps_abs;
    cfg["order"] = order;
    cfg["rep"] = rep;
    cfg["probes"] = probes;
    cfg["seed"] = seed;

    const sb::Lattice lat = sb::build_lattice(R_abs, eps_abs, s);
    if (!lat.params.smallness_ok) {
      std::cerr << "warning: eps is above the smallness threshold " << sb::smallness_threshold(s) << "\n";
    }
    const sb::CoverReport cover = sb::cover_probe_check(lat, probes, seed, threads);
    const sb::GeoGraph g = sb::build_graph(
        lat, rep == "center" ? sb::RepresentativeRule::center : sb::RepresentativeRule::lower_corner, threads);
    const double dbound = sb::degree_bound(lat.params);
    const bool degree_ok = static_cast<double>(g.max_degree + 1) <= dbound;

    json report{{"N", lat.params.N},
                {"n_lower", lat.params.n_lower},
                {"n_upper", lat.params.n_upper},
                {"margin", lat.params.margin},
                {"smallness_ok", lat.params.smallness_ok},
                {"cover_probes", cover.probes},
                {"cover_uncovered", cover.uncovered},
                {"sandwich_ok", cover.sandwich_ok},
                {"edges", g.edges},
                {"max_degree", g.max_degree},
                {"degree_bound", dbound},
                {"degree_ok", degree_ok}};
    if (s.p() > 1.0 && s.p() <= 2.0) {
      const sb::SparsityReport sp = sb::local_sparsity_stats(g, sb::compute_constant_chain(s.p()), threads);
      report["local_sparsity"] = json{{"max_neighborhood_avg_degree", sp.max_neighborhood_avg_degree},
                                      {"mean_neighborhood_avg_degree", sp.mean_neighborhood_avg_degree},
                                      {"K", sp.K},
                                      {"D_over_K", sp.D_over_K},
                                      {"within_reference", sp.within_reference},
                                      {"advisory", true}};
    }

    const auto mis =
        sb::greedy_independent_set(g, order == "mindeg" ? sb::GreedyOrder::min_degree : sb::GreedyOrder::lex);
    const sb::PackingCertificate cert = sb::emit_packing(mis, g, lat);
    const sb::VerifyResult vr = sb::verify_packing(cert);
    report["packing_size"] = cert.centers.size();
    report["density"] = cert.density;
    report["verified"] = vr.valid;

    json doc = sb::to_json(cert);
    doc["kind"] = "packing_certificate";
    doc["artifact_version"] = sb::version;
    doc["seed"] = seed;
    doc["config"] = cfg;
    emit(out, doc.dump(2) + "\n");
    std::cout << report.dump(2) << "\n";

    const bool ok = cover.passed() && degree_ok && vr.valid;
    return ok ? 0 : exit_violation;
  }
};

struct VerifyCmd {
  std::string in;
  std::string out;

  void add(CLI::App* app) {
    app->add_option("--in", in, "certificate JSON")->required();
    app->add_option("--out", out, "result JSON (default stdout)");
  }

  int run() const {
    std::ifstream f(in);
    if (!f) throw sb::InputError("cannot read " + in);
    json doc;
    try {
      doc = json::parse(f);
    } catch (const json::parse_error& e) {
      throw sb::InputError(std::string("certificate is not valid JSON: ") + e.what());
    }
    const sb::PackingCertificate cert = sb::certificate_from_json(doc);
    const sb::VerifyResult vr = sb::verify_packing(cert);
    json env = envelope("verify", json{{"in", in}});
    env["valid"] = vr.valid;
    env["centers"] = cert.centers.size();
    env["min_distance"] = std::isfinite(vr.min_distance) ? json(vr.min_distance) : json(nullptr);
    env["required_distance"] = 2.0 * cert.radius;
    env["close_pairs"] = vr.close_pairs;
    env["outside"] = vr.outside;
    emit(out, env.dump(2) + "\n");
    return vr.valid ? 0 : exit_violation;
  }
};

struct ThermoCmd {
  SpaceOpts space;
  RegionOpts region;
  // pressure
  double fugacity = 1.0;
  int grid = 32;
  std::uint64_t steps = 100000;
  std::uint64_t burnin = 10000;
  int probes = 16;
  // entropy
  std::optional<int> count;
  std::optional<double> alpha;
  std::vector<int> counts;
  std::uint64_t samples = 1000000;

  std::uint64_t seed = 1;
  std::string out;

  void add_common(CLI::App* app) {
    space.add(app);
    region.add(app);
    app->add_option("--seed", seed)->capture_default_str();
    app->add_option("--out", out, "result JSON (default stdout)");
  }
  void add_pressure(CLI::App* app) {
    add_common(app);
    app->add_option("--fugacity", fugacity, "lambda > 0")->capture_default_str();
    app->add_option("--grid", grid, "log-spaced integration points")->capture_default_str();
    app->add_option("--steps", steps, "chain steps per grid point")->capture_default_str();
    app->add_option("--burnin", burnin)->capture_default_str();
    app->add_option("--probes", probes)->capture_default_str();
  }
  void add_entropy(CLI::App* app) {
    add_common(app);
    auto* c = app->add_option("--count", count, "number of centers t");
    auto* a = app->add_option("--alpha", alpha, "density; t = floor(alpha V)");
    auto* l = app->add_option("--counts", counts, "increasing t list: run the monotonicity check")->delimiter(',');
    c->excludes(a)->excludes(l);
    a->excludes(l);
    app->add_option("--samples", samples)->capture_default_str();
  }

  json base_config(const sb::SpaceParams& s) const {
    json cfg;
    space.echo(cfg, s);
    region.echo(cfg, s);
    cfg["seed"] = seed;
    return cfg;
  }

  int run_pressure(unsigned threads) const {
    const sb::SpaceParams s = space.make();
    const auto params = sb::ModelParams::make(s, region.make(s), fugacity, region.resolved_radius(s));
    json cfg = base_config(s);
    cfg["fugacity"] = fugacity;
    cfg["grid"] = grid;
    cfg["steps"] = steps;
    cfg["burnin"] = burnin;
    cfg["probes"] = probes;
    sb::PressureOptions opt;
    opt.grid_size = grid;
    opt.chain.steps = steps;
    opt.chain.burn_in = burnin;
    opt.chain.probes = probes;
    opt.chain.seed = seed;
    const sb::ThermoResult r = sb::pressure_estimate(params, fugacity, opt, threads);
    json env = envelope("thermo pressure", cfg);
    env["seed"] = seed;
    env["result"] = sb::to_json(r);
    emit(out, env.dump(2) + "\n");
    return 0;
  }

  int run_entropy(unsigned threads) const {
    const sb::SpaceParams s = space.make();
    const auto params = sb::ModelParams::make(s, region.make(s), 1.0, region.resolved_radius(s));
    json cfg = base_config(s);
    cfg["samples"] = samples;
    sb::EntropyOptions opt;
    opt.samples = samples;
    opt.seed = seed;
    json env = envelope("thermo entropy", cfg);
    env["seed"] = seed;

    if (!counts.empty()) {
      env["config"]["counts"] = counts;
      const sb::MonotonicityReport rep = sb::entropy_monotonicity_check(params, counts, opt, threads);
      json results = json::array();
      for (const auto& r : rep.results) results.push_back(sb::to_json(r));
      json viol = json::array();
      for (const auto& [a, b] : rep.violations) viol.push_back({a, b});
      env["results"] = std::move(results);
      env["violations"] = std::move(viol);
      env["advisory"] = true;
      env["passed"] = rep.passed();
      emit(out, env.dump(2) + "\n");
      return rep.passed() ? 0 : exit_violation;
    }

    int t = 0;
    if (count) {
      t = *count;
    } else if (alpha) {
      t = sb::count_for_density(*alpha, params.volume());
      env["config"]["alpha"] = *alpha;
    } else {
      throw sb::InputError("thermo entropy: one of --count, --alpha or --counts is required");
    }
    env["config"]["count"] = t;
    const sb::ThermoResult r = sb::entropy_estimate(params, t, opt, threads);
    env["result"] = sb::to_json(r);
    emit(out, env.dump(2) + "\n");
    if (!r.defined) {
      std::cerr << "entropy estimate undefined: " << r.successes << " successes in " << r.samples
                << " samples; upper bound " << r.upper_bound << "\n";
      return exit_computation;
    }
    return 0;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Superball packings: constants, simulation, construction and certification"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "TOML/INI file with option values; unknown keys are rejected");
  app.allow_config_extras(CLI::config_extras_mode::error);
  unsigned threads = 0;
  app.add_option("--threads", threads, "worker threads (0 = all hardware threads)")->capture_default_str();
  app.set_version_flag("--version", std::string(sb::version));

  ConstantsCmd constants;
  VolumeCmd volume;
  SimulateCmd simulate;
  PackCmd pack;
  VerifyCmd verify;
  ThermoCmd thermo;

  constants.add(app.add_subcommand("constants", "constant chain and density-bound table"));
  volume.add(app.add_subcommand("volume", "unit-ball volume and unit-volume radius"));
  simulate.add(app.add_subcommand("simulate", "birth-death chain for the hard superball gas"));
  pack.add(app.add_subcommand("pack", "lattice-graph packing with certificate"));
  verify.add(app.add_subcommand("verify", "recheck a packing certificate"));
  auto* th = app.add_subcommand("thermo", "pressure and entropy-density estimators");
  th->require_subcommand(1);
  auto* th_p = th->add_subcommand("pressure", "pressure by thermodynamic integration");
  auto* th_e = th->add_subcommand("entropy", "entropy density by direct rejection");
  thermo.add_pressure(th_p);
  ThermoCmd thermo_e;
  thermo_e.add_entropy(th_e);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return exit_input;
  }

  try {
    const std::string cmd = app.get_subcommands().front()->get_name();
    if (cmd == "constants") return constants.run();
    if (cmd == "volume") return volume.run();
    if (cmd == "simulate") return simulate.run(threads);
    if (cmd == "pack") return pack.run(threads);
    if (cmd == "verify") return verify.run();
    if (th_p->parsed()) return thermo.run_pressure(threads);
    return thermo_e.run_entropy(threads);
  } catch (const sb::InputError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return exit_input;
  } catch (const sb::ComputationError& e) {
    std::cerr << "computation error: " << e.what() << "\n";
    return exit_computation;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return exit_input;
  } catch (const std::exception& e) {
    std::cerr << "computation error: " << e.what() << "\n";
    return exit_computation;
  }
}
