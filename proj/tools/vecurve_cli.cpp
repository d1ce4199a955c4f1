// vecurve command-line tool: simulation, model fitting, VE/AUC summaries,
// cases-averted metrics, and the built-in replication study.
//
// Exit codes: 0 success, 2 invalid input, 3 numerical failure. Errors are
// emitted as one JSON object on stderr.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "vecurve/ag_fit.hpp"
#include "vecurve/bootstrap.hpp"
#include "vecurve/common.hpp"
#include "vecurve/csv_io.hpp"
#include "vecurve/hazard_sim.hpp"
#include "vecurve/impact.hpp"
#include "vecurve/json_io.hpp"
#include "vecurve/study.hpp"
#include "vecurve/trial_data.hpp"
#include "vecurve/ve_metrics.hpp"
#include "vecurve/version.hpp"

namespace {

using nlohmann::json;
using namespace vecurve;

std::string g_command_line;

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw validation_error("cannot open output file '" + path + "'");
  out << content;
}

void write_json_artifact(const std::string& path, json j,
                         std::optional<std::uint64_t> seed = std::nullopt) {
  j["provenance"] = provenance_json(g_command_line, seed);
  write_text_file(path, j.dump(2) + "\n");
}

// Resolved-configuration echo for provenance.
void echo_config(const std::string& subcommand, json config,
                 std::optional<std::uint64_t> seed = std::nullopt) {
  json j;
  j["subcommand"] = subcommand;
  if (seed) config["seed"] = *seed;
  j["resolved_config"] = std::move(config);
  j["version"] = kVersion;
  std::cout << j.dump() << "\n";
}

std::vector<double> parse_delta_times(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      out.push_back(std::stod(tok));
    } catch (const std::exception&) {
      throw validation_error("bad delta-times entry '" + tok + "'");
    }
  }
  if (out.empty()) throw validation_error("empty delta-times");
  return out;
}

std::vector<int> parse_scenario_set(const std::string& s) {
  std::vector<int> ids;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    const auto dash = tok.find('-');
    try {
      if (dash == std::string::npos) {
        ids.push_back(std::stoi(tok));
      } else {
        const int a = std::stoi(tok.substr(0, dash));
        const int b = std::stoi(tok.substr(dash + 1));
        for (int i = a; i <= b; ++i) ids.push_back(i);
      }
    } catch (const std::exception&) {
      throw validation_error("bad scenario set '" + s + "'");
    }
  }
  if (ids.empty()) throw validation_error("empty scenario set");
  return ids;
}

IncidenceTable stamp_identity_calendar(IncidenceTable table) {
  for (std::size_t k = 0; k < table.intervals.size(); ++k)
    if (!table.intervals[k].calendar_index)
      table.intervals[k].calendar_index = static_cast<int>(k) + 1;
  return table;
}

struct SimulateArgs {
  int scenario = 0;
  std::string spec_path;
  std::uint64_t seed = 0;
  bool seed_given = false;
  std::string out;
};

int cmd_simulate(const SimulateArgs& a) {
  ScenarioSpec spec;
  std::uint64_t seed = a.seed;
  if (!a.spec_path.empty()) {
    const json j = load_json_file(a.spec_path);
    spec = scenario_from_json(j);
    if (!a.seed_given && j.contains("seed")) seed = j.at("seed").get<std::uint64_t>();
  } else if (a.scenario >= 1) {
    spec = builtin_scenario(a.scenario);
  } else {
    throw validation_error("simulate: give --scenario or --spec");
  }

  const TrialDataset ds = simulate_trial(spec, seed);
  std::ostringstream comment;
  comment << "vecurve " << kVersion << " | " << g_command_line << " | seed=" << seed;
  std::ofstream out(a.out);
  if (!out) throw validation_error("cannot open output file '" + a.out + "'");
  write_events_csv(out, ds, comment.str());

  json cfg = scenario_to_json(spec);
  cfg["out"] = a.out;
  echo_config("simulate", cfg, seed);
  return 0;
}

struct FitArgs {
  std::string events;
  std::string family = "linear";
  std::string rule = "ag";
  std::string out;
};

int cmd_fit(const FitArgs& a) {
  const TrialDataset ds = read_events_csv_file(a.events);
  const EffectFamily family = effect_family_from_string(a.family);
  const RiskSetRule rule = risk_set_rule_from_string(a.rule);
  const FitResult f = fit(ds, family, rule);
  write_json_artifact(a.out, fit_result_to_json(f));
  echo_config("fit", {{"events", a.events},
                      {"family", a.family},
                      {"rule", to_string(rule)},
                      {"out", a.out}});
  return 0;
}

struct AucArgs {
  std::string fit_path;
  double t1 = 0.0;
  double t2 = 12.0;
  double fitted_horizon = -1.0;
  bool quadrature = false;
  int n_panels = 1024;
  int bootstrap = 0;
  std::string events;
  std::string rule = "ag";
  std::uint64_t seed = 0;
  std::string out;
};

int cmd_auc(const AucArgs& a) {
  const json fj = load_json_file(a.fit_path);
  const EffectSpec effect = effect_from_fit_json(fj);
  const VECurve curve{effect};

  AUCValue v;
  std::string method;
  if (a.quadrature || effect.family == EffectFamily::sqrt) {
    v = auc_quadrature(curve, a.t1, a.t2, a.n_panels);
    method = "quadrature";
  } else {
    v = auc_closed_form(effect, a.t1, a.t2);
    method = "closed_form";
  }
  if (a.fitted_horizon > 0.0) {
    if (a.t2 < a.fitted_horizon) v.kind = AUCKind::interpolation;
    else if (a.t2 > a.fitted_horizon) v.kind = AUCKind::extrapolation;
  }

  json j;
  j["t1"] = v.t1;
  j["t2"] = v.t2;
  j["value"] = v.value;
  j["percent"] = 100.0 * v.value;
  j["kind"] = to_string(v.kind);
  j["method"] = method;
  std::optional<std::uint64_t> seed;
  if (a.bootstrap > 0) {
    if (a.events.empty())
      throw validation_error("auc: --bootstrap needs --events to resample from");
    const TrialDataset ds = read_events_csv_file(a.events);
    const BootstrapInterval bi =
        bootstrap_auc(ds, effect.family, risk_set_rule_from_string(a.rule), a.t1, a.t2,
                      static_cast<std::size_t>(a.bootstrap), a.seed);
    j["bootstrap"] = {{"lower", bi.lower},       {"upper", bi.upper},
                      {"level", bi.level},       {"n_resamples", bi.n_resamples},
                      {"n_failed", bi.n_failed}, {"point", bi.point}};
    seed = a.seed;
  }
  write_json_artifact(a.out, j, seed);
  echo_config("auc", {{"fit", a.fit_path}, {"t1", a.t1}, {"t2", a.t2}, {"out", a.out}}, seed);
  return 0;
}

struct VeCurveArgs {
  std::string fit_path;
  double t_min = 0.0;
  double t_max = 12.0;
  double step = 0.1;
  std::string out;
};

int cmd_ve_curve(const VeCurveArgs& a) {
  if (!(a.step > 0.0) || !(a.t_max > a.t_min) || a.t_min < 0.0)
    throw validation_error("ve-curve: need t_min >= 0, t_max > t_min, step > 0");
  const EffectSpec effect = effect_from_fit_json(load_json_file(a.fit_path));
  const VECurve curve{effect};

  std::ostringstream os;
  os << "# vecurve " << kVersion << " | " << g_command_line << "\n";
  os << "t,ve\n";
  os.precision(10);
  const int n_steps = static_cast<int>((a.t_max - a.t_min) / a.step + 1e-9);
  for (int i = 0; i <= n_steps; ++i) {
    const double t = a.t_min + i * a.step;
    if (effect.family == EffectFamily::log && t == 0.0) continue;  // undefined at 0
    os << t << ',' << curve.at(t) << "\n";
  }
  write_text_file(a.out, os.str());
  echo_config("ve-curve", {{"fit", a.fit_path},
                           {"t_min", a.t_min},
                           {"t_max", a.t_max},
                           {"step", a.step},
                           {"out", a.out}});
  return 0;
}

struct NcaArgs {
  std::string variant = "sf";
  std::string incidence;
  std::string events;
  std::string delta_times = "3,3,3,3";
  bool calendar = false;
  std::string fit_path;
  int season_start = 0;
  bool with_nnv = false;
  std::string out;
};

IncidenceTable load_table(const NcaArgs& a) {
  if (!a.incidence.empty()) return read_incidence_csv_file(a.incidence);
  if (a.events.empty())
    throw validation_error("nca: give --incidence or --events");
  const TrialDataset ds = read_events_csv_file(a.events);
  if (a.calendar) return tabulate_calendar_incidence(ds);
  return tabulate_incidence(ds, parse_delta_times(a.delta_times));
}

std::vector<double> table_deltas(const IncidenceTable& t) {
  std::vector<double> d;
  for (const auto& iv : t.intervals) d.push_back(iv.delta_time);
  return d;
}

int cmd_nca(const NcaArgs& a) {
  const IncidenceTable table = load_table(a);
  NCAResult r;
  if (a.variant == "sf") {
    r = nca_sf(table);
  } else {
    if (a.fit_path.empty())
      throw validation_error("nca: variant '" + a.variant + "' needs --fit");
    const VECurve curve{effect_from_fit_json(load_json_file(a.fit_path))};
    if (a.variant == "auc") {
      r = nca_auc(interval_aucs(curve, table_deltas(table)), table);
    } else if (a.variant == "auc-season" || a.variant == "auc-age") {
      // seasonal variants pair the k-th month since vaccination with a
      // calendar month, so the AUCs are always over unit months
      const auto monthly = interval_aucs(curve, std::vector<double>(12, 1.0));
      if (a.variant == "auc-season") {
        if (a.season_start < 1) throw validation_error("nca: --s 1..12 required for auc-season");
        r = nca_auc_seasonal(monthly, stamp_identity_calendar(table), a.season_start);
      } else {
        r = nca_auc_age(monthly, stamp_identity_calendar(table));
      }
    } else {
      throw validation_error("nca: unknown variant '" + a.variant + "'");
    }
  }
  json j = nca_to_json(r);
  if (a.with_nnv) {
    const double v = nnv(r);
    j["nnv"] = v;
    j["nnv_per_1000_cases"] = 1000.0 * v;
  }
  write_json_artifact(a.out, j);
  echo_config("nca", {{"variant", a.variant}, {"out", a.out}});
  return 0;
}

int cmd_nca_by_start(const NcaArgs& a) {
  const IncidenceTable table = stamp_identity_calendar(load_table(a));
  if (a.fit_path.empty()) throw validation_error("nca-by-start: --fit required");
  const VECurve curve{effect_from_fit_json(load_json_file(a.fit_path))};
  const auto aucs = interval_aucs(curve, std::vector<double>(12, 1.0));
  const auto results = nca_by_start_month(aucs, table);

  std::ostringstream os;
  os << "# vecurve " << kVersion << " | " << g_command_line << "\n";
  os << "start_month,nca\n";
  os.precision(10);
  for (const auto& r : results) os << *r.season_start << ',' << r.value << "\n";
  write_text_file(a.out, os.str());
  echo_config("nca-by-start", {{"out", a.out}});
  return 0;
}

struct StudyArgs {
  std::string scenarios = "1-8";
  std::size_t replicates = 1000;
  std::uint64_t seed = 0;
  unsigned jobs = 1;
  std::string out_dir = ".";
};

int cmd_study(const StudyArgs& a) {
  const auto ids = parse_scenario_set(a.scenarios);
  const auto summaries = run_builtin_study(ids, a.replicates, a.seed, a.jobs);
  for (const auto& s : summaries) {
    json j = study_summary_to_json(s);
    write_json_artifact(a.out_dir + "/scenario_" + s.scenario_id + ".json", j, a.seed);
  }
  echo_config("study",
              {{"scenarios", a.scenarios},
               {"replicates", a.replicates},
               {"jobs", a.jobs},
               {"out_dir", a.out_dir}},
              a.seed);
  std::cout << "\n" << render_estimation_table(summaries) << "\n"
            << render_impact_table(summaries);
  return 0;
}

int emit_error(const char* type, const std::string& message, int code) {
  json j;
  j["error"] = {{"type", type}, {"message", message}};
  std::cerr << j.dump() << "\n";
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  std::ostringstream cmd;
  for (int i = 0; i < argc; ++i) cmd << (i ? " " : "") << argv[i];
  g_command_line = cmd.str();

  CLI::App app{"vecurve: time-varying vaccine efficacy and impact from recurrent-event trials"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));

  SimulateArgs sim;
  auto* c_sim = app.add_subcommand("simulate", "Simulate a recurrent-event trial to an events CSV");
  c_sim->add_option("--scenario", sim.scenario, "Built-in scenario id (1-8)");
  c_sim->add_option("--spec", sim.spec_path, "Scenario spec JSON file");
  auto* sim_seed = c_sim->add_option("--seed", sim.seed, "RNG seed (default 0)");
  c_sim->add_option("--out", sim.out, "Output events CSV")->required();
  c_sim->callback([&] { sim.seed_given = sim_seed->count() > 0; });

  FitArgs fita;
  auto* c_fit = app.add_subcommand("fit", "Fit the partial-likelihood model to an events CSV");
  c_fit->add_option("--events", fita.events, "Events CSV")->required();
  c_fit->add_option("--family", fita.family, "constant|linear|log|sqrt (default linear)");
  c_fit->add_option("--rule", fita.rule, "ag|first-event (default ag)");
  c_fit->add_option("--out", fita.out, "Output fit JSON")->required();

  AucArgs auca;
  auto* c_auc = app.add_subcommand("auc", "Area under the VE curve from a stored fit");
  c_auc->add_option("--fit", auca.fit_path, "Fit JSON")->required();
  c_auc->add_option("--t1", auca.t1, "Interval start (default 0)");
  c_auc->add_option("--t2", auca.t2, "Interval end")->required();
  c_auc->add_option("--fitted-horizon", auca.fitted_horizon,
                    "Duration the fit was estimated on; labels inter/extrapolation");
  c_auc->add_flag("--quadrature", auca.quadrature, "Force Simpson quadrature");
  c_auc->add_option("--n-panels", auca.n_panels, "Quadrature panels (default 1024)");
  c_auc->add_option("--bootstrap", auca.bootstrap, "Bootstrap resamples (0 = off)");
  c_auc->add_option("--events", auca.events, "Events CSV (for --bootstrap)");
  c_auc->add_option("--rule", auca.rule, "Risk-set rule for bootstrap refits (default ag)");
  c_auc->add_option("--seed", auca.seed, "Bootstrap RNG seed (default 0)");
  c_auc->add_option("--out", auca.out, "Output JSON")->required();

  VeCurveArgs vca;
  auto* c_vc = app.add_subcommand("ve-curve", "Tabulate VE(t) on a grid to CSV");
  c_vc->add_option("--fit", vca.fit_path, "Fit JSON")->required();
  c_vc->add_option("--t-min", vca.t_min, "Grid start (default 0)");
  c_vc->add_option("--t-max", vca.t_max, "Grid end")->required();
  c_vc->add_option("--step", vca.step, "Grid step (default 0.1)");
  c_vc->add_option("--out", vca.out, "Output CSV")->required();

  NcaArgs ncaa;
  auto* c_nca = app.add_subcommand("nca", "Number of cases averted per 1000 persons");
  c_nca->add_option("--variant", ncaa.variant, "sf|auc|auc-season|auc-age (default sf)");
  c_nca->add_option("--incidence", ncaa.incidence, "Incidence CSV");
  c_nca->add_option("--events", ncaa.events, "Events CSV (tabulated internally)");
  c_nca->add_option("--delta-times", ncaa.delta_times,
                    "Interval durations for --events (default 3,3,3,3)");
  c_nca->add_flag("--calendar", ncaa.calendar,
                  "Tabulate --events by calendar month (needs vaccination_month)");
  c_nca->add_option("--fit", ncaa.fit_path, "Fit JSON (required for auc variants)");
  c_nca->add_option("--s", ncaa.season_start, "Target start month 1..12 (auc-season)");
  c_nca->add_flag("--nnv", ncaa.with_nnv, "Also report NNV");
  c_nca->add_option("--out", ncaa.out, "Output JSON")->required();

  NcaArgs nbsa;
  auto* c_nbs = app.add_subcommand("nca-by-start", "Seasonal NCA for every start month (CSV)");
  c_nbs->add_option("--incidence", nbsa.incidence, "Incidence CSV (12 monthly rows)");
  c_nbs->add_option("--events", nbsa.events, "Events CSV (tabulated internally)");
  c_nbs->add_flag("--calendar", nbsa.calendar,
                  "Tabulate --events by calendar month (needs vaccination_month)");
  c_nbs->add_option("--fit", nbsa.fit_path, "Fit JSON")->required();
  c_nbs->add_option("--out", nbsa.out, "Output CSV")->required();

  StudyArgs sta;
  auto* c_study = app.add_subcommand("study", "Run the built-in replication study");
  c_study->add_option("--scenarios", sta.scenarios, "Scenario set, e.g. 1-8 or 1,5,7 (default 1-8)");
  c_study->add_option("--replicates", sta.replicates, "Replicates per scenario (default 1000)");
  c_study->add_option("--seed", sta.seed, "Base RNG seed (default 0)");
  c_study->add_option("--jobs", sta.jobs, "Worker threads (default 1)");
  c_study->add_option("--out-dir", sta.out_dir, "Directory for per-scenario JSON (default .)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return emit_error("cli", e.what(), 2);
  }

  try {
    if (app.got_subcommand(c_sim)) return cmd_simulate(sim);
    if (app.got_subcommand(c_fit)) return cmd_fit(fita);
    if (app.got_subcommand(c_auc)) return cmd_auc(auca);
    if (app.got_subcommand(c_vc)) return cmd_ve_curve(vca);
    if (app.got_subcommand(c_nca)) return cmd_nca(ncaa);
    if (app.got_subcommand(c_nbs)) return cmd_nca_by_start(nbsa);
    if (app.got_subcommand(c_study)) return cmd_study(sta);
  } catch (const non_convergence_error& e) {
    return emit_error("non_convergence", e.what(), 3);
  } catch (const numeric_error& e) {
    return emit_error("numeric", e.what(), 3);
  } catch (const validation_error& e) {
    return emit_error("validation", e.what(), 2);
  } catch (const std::exception& e) {
    return emit_error("internal", e.what(), 1);
  }
  return 0;
}
