#pragma once

// JSON encodings. Parsing is strict: unknown keys and wrong types are input
// errors, so a typo in a hand-written certificate cannot be silently ignored.

#include <cmath>
#include <initializer_list>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "superball/constants.hpp"
#include "superball/error.hpp"
#include "superball/geometry.hpp"
#include "superball/gibbs.hpp"
#include "superball/lattice_graph.hpp"
#include "superball/thermo.hpp"

namespace superball {

using json = nlohmann::ordered_json;

namespace detail {

inline void reject_unknown(const json& j, std::initializer_list<const char*> known, const char* what) {
  if (!j.is_object()) throw InputError(std::string(what) + ": expected a JSON object");
  std::set<std::string> ok(known.begin(), known.end());
  for (const auto& item : j.items()) {
    if (!ok.count(item.key())) throw InputError(std::string(what) + ": unknown field '" + item.key() + "'");
  }
}

inline const json& field(const json& j, const char* key, const char* what) {
  auto it = j.find(key);
  if (it == j.end()) throw InputError(std::string(what) + ": missing field '" + key + "'");
  return *it;
}

inline double get_number(const json& j, const char* key, const char* what) {
  const json& v = field(j, key, what);
  if (!v.is_number()) throw InputError(std::string(what) + ": field '" + key + "' must be a number");
  return v.get<double>();
}

inline std::vector<int> get_cuts(const json& v, const char* what) {
  if (!v.is_array()) throw InputError(std::string(what) + ": cuts must be an integer array");
  std::vector<int> cuts;
  for (const auto& c : v) {
    if (!c.is_number_integer()) throw InputError(std::string(what) + ": cuts must be an integer array");
    cuts.push_back(c.get<int>());
  }
  return cuts;
}

inline Point get_coords(const json& v, const char* what) {
  if (!v.is_array()) throw InputError(std::string(what) + ": coords must be a number array");
  Point x;
  x.reserve(v.size());
  for (const auto& c : v) {
    if (!c.is_number()) throw InputError(std::string(what) + ": coords must be a number array");
    x.push_back(c.get<double>());
  }
  return x;
}

}  // namespace detail

inline json to_json(const BlockSpec& b) { return json{{"cuts", b.cuts()}}; }

inline BlockSpec blockspec_from_json(const json& j) {
  detail::reject_unknown(j, {"cuts"}, "BlockSpec");
  return BlockSpec(detail::get_cuts(detail::field(j, "cuts", "BlockSpec"), "BlockSpec"));
}

inline json point_to_json(const Point& x) { return json{{"coords", x}}; }

inline Point point_from_json(const json& j) {
  detail::reject_unknown(j, {"coords"}, "Point");
  return detail::get_coords(detail::field(j, "coords", "Point"), "Point");
}

inline json to_json(const ConstantChain& c) {
  return json{{"p", c.p},
              {"q", c.q},
              {"x_p", c.x_p},
              {"x_p_gap", c.x_p_gap},
              {"eps_p", c.eps_p},
              {"delta_p_eps_p", c.delta_at_eps},
              {"convexity_margin", c.convexity_margin},
              {"c_prime", c.c_prime},
              {"c_prime_gap", c.c_prime_gap},
              {"c_p", c.c_p},
              {"c_p_gap", c.c_p_gap},
              {"log_two_over_c", c.log_two_over_c()},
              {"residual_h", c.residual_h}};
}

inline json to_json(const DensityBound& b) {
  return json{{"n", b.n},
              {"p", b.p},
              {"c_p", b.c_p},
              {"log_two_over_c", b.log_two_over_c},
              {"bound", b.bound},
              {"fugacity_threshold", b.fugacity_threshold}};
}

inline json to_json(const ChainEstimate& e) {
  return json{{"lambda", e.lambda},
              {"volume", e.volume},
              {"alpha_hat", e.alpha_hat},
              {"alpha_se", e.alpha_se},
              {"fv_hat", e.fv_hat},
              {"fv_se", e.fv_se},
              {"identity_gap", e.identity_gap},
              {"identity_se", e.identity_se},
              {"mean_count", e.mean_count},
              {"var_count", e.var_count},
              {"steps", e.steps},
              {"samples", e.samples},
              {"proposed_births", e.proposed_births},
              {"accepted_births", e.accepted_births},
              {"accepted_deaths", e.accepted_deaths},
              {"rejections", e.rejections},
              {"seed", e.seed}};
}

inline json to_json(const ThermoResult& r) {
  json j{{"kind", to_string(r.kind)}, {"value", r.value}, {"se", r.se}, {"volume", r.volume}};
  if (r.kind == ThermoKind::pressure) {
    j["lambda"] = r.lambda;
    j["grid_size"] = r.grid_size;
    j["closure"] = r.closure;
  } else {
    j["t"] = r.t;
    j["alpha"] = r.alpha;
    j["defined"] = r.defined;
    if (!r.defined) j["upper_bound"] = r.upper_bound;
    j["samples"] = r.samples;
    j["successes"] = r.successes;
  }
  j["lower_bound_ref"] = r.lower_bound_ref ? json(*r.lower_bound_ref) : json(nullptr);
  return j;
}

inline json to_json(const PackingCertificate& c) {
  json centers = json::array();
  for (const auto& x : c.centers) centers.push_back(x);
  return json{{"p", c.p},
              {"cuts", c.cuts},
              {"radius", c.radius},
              {"R", c.R},
              {"centers", std::move(centers)},
              {"min_pairwise_distance",
               std::isfinite(c.min_pairwise_distance) ? json(c.min_pairwise_distance) : json(nullptr)},
              {"density", c.density}};
}

/// Besides the payload a certificate may carry the provenance envelope written
/// by the command-line tool (artifact_version, config, seed, kind).
inline PackingCertificate certificate_from_json(const json& j) {
  const char* what = "certificate";
  detail::reject_unknown(j,
                         {"p", "cuts", "radius", "R", "centers", "min_pairwise_distance", "density",
                          "artifact_version", "config", "seed", "kind"},
                         what);
  PackingCertificate c;
  c.p = detail::get_number(j, "p", what);
  c.cuts = detail::get_cuts(detail::field(j, "cuts", what), what);
  c.radius = detail::get_number(j, "radius", what);
  c.R = detail::get_number(j, "R", what);
  const json& centers = detail::field(j, "centers", what);
  if (!centers.is_array()) throw InputError("certificate: centers must be an array of number arrays");
  for (const auto& x : centers) c.centers.push_back(detail::get_coords(x, what));
  if (auto it = j.find("min_pairwise_distance"); it != j.end() && !it->is_null()) {
    if (!it->is_number()) throw InputError("certificate: min_pairwise_distance must be a number");
    c.min_pairwise_distance = it->get<double>();
  }
  if (auto it = j.find("density"); it != j.end()) {
    if (!it->is_number()) throw InputError("certificate: density must be a number");
    c.density = it->get<double>();
  }
  detail::require(c.p >= 1.0, "certificate: p must be >= 1");
  return c;
}

}  // namespace superball
