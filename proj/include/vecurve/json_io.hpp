#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "vecurve/ag_fit.hpp"
#include "vecurve/common.hpp"
#include "vecurve/effect.hpp"
#include "vecurve/hazard_sim.hpp"
#include "vecurve/impact.hpp"
#include "vecurve/study.hpp"
#include "vecurve/version.hpp"

// JSON bindings for scenario specs, fit results, and NCA results.

namespace vecurve {

using nlohmann::json;

inline json provenance_json(const std::string& command_line,
                            std::optional<std::uint64_t> seed = std::nullopt) {
  json p;
  p["tool"] = "vecurve";
  p["version"] = kVersion;
  p["command"] = command_line;
  if (seed) p["seed"] = *seed;
  return p;
}

inline json effect_to_json(const EffectSpec& e) {
  json j;
  j["family"] = to_string(e.family);
  j["beta0"] = e.beta0;
  if (e.beta1) j["beta1"] = *e.beta1;
  return j;
}

inline EffectSpec effect_from_json(const json& j) {
  EffectSpec e;
  e.family = effect_family_from_string(j.at("family").get<std::string>());
  e.beta0 = j.at("beta0").get<double>();
  if (j.contains("beta1")) e.beta1 = j.at("beta1").get<double>();
  if (e.family != EffectFamily::constant && !e.beta1)
    throw validation_error("effect JSON: family '" + to_string(e.family) + "' requires beta1");
  return e;
}

inline json scenario_to_json(const ScenarioSpec& s) {
  json j;
  j["scenario_id"] = s.scenario_id;
  j["tau"] = s.tau;
  j["n_per_arm"] = s.n_per_arm;
  if (s.censoring.kind == CensoringSpec::Kind::fixed) {
    j["censoring"] = {{"type", "fixed"}};
  } else {
    j["censoring"] = {{"type", "uniform"}, {"a", s.censoring.a}, {"b", s.censoring.b}};
  }
  j["baseline"] = {{"breakpoints", s.baseline.breakpoints}, {"rates", s.baseline.rates}};
  j["effect"] = effect_to_json(s.effect);
  return j;
}

inline ScenarioSpec scenario_from_json(const json& j) {
  ScenarioSpec s;
  if (j.contains("scenario_id")) {
    const auto& id = j.at("scenario_id");
    s.scenario_id = id.is_string() ? id.get<std::string>() : id.dump();
  }
  s.tau = j.at("tau").get<double>();
  s.n_per_arm = j.at("n_per_arm").get<int>();
  const json& c = j.at("censoring");
  const std::string type = c.at("type").get<std::string>();
  if (type == "fixed") {
    s.censoring = {CensoringSpec::Kind::fixed, 0.0, s.tau};
  } else if (type == "uniform") {
    s.censoring = {CensoringSpec::Kind::uniform, c.at("a").get<double>(), c.at("b").get<double>()};
  } else {
    throw validation_error("scenario JSON: unknown censoring type '" + type + "'");
  }
  const json& b = j.at("baseline");
  s.baseline.breakpoints = b.at("breakpoints").get<std::vector<double>>();
  s.baseline.rates = b.at("rates").get<std::vector<double>>();
  s.effect = effect_from_json(j.at("effect"));
  s.validate();
  return s;
}

inline json fit_result_to_json(const FitResult& f) {
  json j;
  j["family"] = to_string(f.effect.family);
  j["rule"] = to_string(f.rule);
  std::vector<double> coef{f.effect.beta0};
  if (f.effect.beta1) coef.push_back(*f.effect.beta1);
  j["coef"] = coef;
  std::vector<double> se_m, se_r;
  for (int k = 0; k < f.effect.n_coefficients(); ++k) {
    se_m.push_back(f.se_model(k));
    se_r.push_back(f.se_robust(k));
  }
  j["se_model"] = se_m;
  j["se_robust"] = se_r;
  j["loglik"] = f.loglik;
  j["bic"] = f.bic;
  j["n_events"] = f.n_events;
  j["n_subjects"] = f.n_subjects;
  j["converged"] = f.converged;
  j["iterations"] = f.iterations;
  if (f.warning) j["warning"] = *f.warning;
  return j;
}

// Reads the coefficient part of a fit-result JSON back into an EffectSpec
// (for commands that consume a stored fit).
inline EffectSpec effect_from_fit_json(const json& j) {
  EffectSpec e;
  e.family = effect_family_from_string(j.at("family").get<std::string>());
  const auto coef = j.at("coef").get<std::vector<double>>();
  if (coef.empty()) throw validation_error("fit JSON: empty coef array");
  e.beta0 = coef[0];
  if (e.family != EffectFamily::constant) {
    if (coef.size() < 2) throw validation_error("fit JSON: family requires two coefficients");
    e.beta1 = coef[1];
  }
  return e;
}

inline json nca_to_json(const NCAResult& r) {
  json j;
  j["variant"] = to_string(r.variant);
  if (r.season_start) j["s"] = *r.season_start;
  j["horizon_months"] = r.horizon;
  j["value"] = r.value;
  if (!r.per_interval.empty()) j["per_interval"] = r.per_interval;
  return j;
}

inline json study_summary_to_json(const StudySummary& s) {
  json j;
  j["scenario_id"] = s.scenario_id;
  j["n_replicates"] = s.n_replicates;
  j["n_failed_fits"] = s.n_failed_fits;
  j["high_failure_rate"] = s.high_failure_rate;
  auto stat = [](const SummaryStat& st) {
    return json{{"mean", st.mean}, {"mc_se", st.mc_se}, {"n", st.n}};
  };
  j["beta_ph"] = stat(s.beta_ph);
  j["ve_ph"] = stat(s.ve_ph);
  j["beta0"] = stat(s.beta0);
  j["beta1"] = stat(s.beta1);
  j["auc_0_12"] = stat(s.auc_0_12);
  j["auc_0_10"] = stat(s.auc_0_10);
  auto opt = [&](const char* key, const std::optional<SummaryStat>& st) {
    if (st) j[key] = stat(*st);
  };
  opt("nca_sf_12", s.nca_sf_12);
  opt("nca_sf_10", s.nca_sf_10);
  opt("nca_auc_12", s.nca_auc_12);
  opt("nca_auc_10", s.nca_auc_10);
  opt("nca_season_12", s.nca_season_12);
  opt("nca_age_12", s.nca_age_12);
  return j;
}

inline json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw validation_error("cannot open JSON file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw validation_error("JSON parse error in '" + path + "': " + e.what());
  }
  return j;
}

}  // namespace vecurve
