#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "vecurve/ag_fit.hpp"
#include "vecurve/common.hpp"
#include "vecurve/hazard_sim.hpp"
#include "vecurve/impact.hpp"
#include "vecurve/rng.hpp"
#include "vecurve/trial_data.hpp"
#include "vecurve/ve_metrics.hpp"

// Replication study: simulate -> fit (constant and linear effect, AG rule)
// -> AUC -> NCA per replicate, aggregated into per-scenario means and Monte
// Carlo standard errors. Replicates draw from substreams keyed by
// (base_seed, scenario_id, replicate_index, subject_index), so results are
// independent of thread count and execution order.

namespace vecurve {

struct ReplicateOutcome {
  bool fit_failed = false;
  double beta_ph = 0.0;
  double ve_ph = 0.0;
  double beta0 = 0.0;
  double beta1 = 0.0;
  double auc_0_12 = 0.0;
  double auc_0_10 = 0.0;
  std::optional<double> nca_sf_12, nca_sf_10;
  std::optional<double> nca_auc_12, nca_auc_10;
  std::optional<double> nca_season_12, nca_age_12;
};

struct SummaryStat {
  double mean = 0.0;
  double mc_se = 0.0;
  std::size_t n = 0;
};

struct StudySummary {
  std::string scenario_id;
  std::size_t n_replicates = 0;
  std::size_t n_failed_fits = 0;
  bool high_failure_rate = false;  // > 1% of replicates failed
  SummaryStat beta_ph, ve_ph, beta0, beta1, auc_0_12, auc_0_10;
  std::optional<SummaryStat> nca_sf_12, nca_sf_10, nca_auc_12, nca_auc_10;
  std::optional<SummaryStat> nca_season_12, nca_age_12;
};

inline std::uint64_t replicate_seed(std::uint64_t base_seed, const std::string& scenario_id,
                                    std::uint64_t replicate_index) {
  return derive_stream(base_seed, fnv1a64(scenario_id.data(), scenario_id.size()),
                       replicate_index);
}

inline ReplicateOutcome run_replicate_metrics(const TrialDataset& ds,
                                              const ScenarioSpec& spec) {
  ReplicateOutcome out;
  const FitResult ph = fit(ds, EffectFamily::constant, RiskSetRule::ag);
  const FitResult tv = fit(ds, EffectFamily::linear, RiskSetRule::ag);
  if (!ph.converged || !tv.converged) {
    out.fit_failed = true;
    return out;
  }

  out.beta_ph = ph.effect.beta0;
  out.ve_ph = 1.0 - std::exp(ph.effect.beta0);
  out.beta0 = tv.effect.beta0;
  out.beta1 = *tv.effect.beta1;

  const VECurve curve{tv.effect};
  out.auc_0_12 = auc_cross_duration(curve, spec.tau, 12.0).value;
  out.auc_0_10 = auc_cross_duration(curve, spec.tau, 10.0).value;

  const std::vector<double> quarters10{3.0, 3.0, 3.0, 1.0};
  const std::vector<double> quarters12{3.0, 3.0, 3.0, 3.0};

  if (spec.tau >= 10.0) {
    const IncidenceTable t10 = tabulate_incidence(ds, quarters10);
    out.nca_sf_10 = nca_sf(t10).value;
    out.nca_auc_10 = nca_auc(interval_aucs(curve, quarters10), t10).value;
  }
  if (spec.tau >= 12.0) {
    const IncidenceTable t12 = tabulate_incidence(ds, quarters12);
    out.nca_sf_12 = nca_sf(t12).value;
    out.nca_auc_12 = nca_auc(interval_aucs(curve, quarters12), t12).value;

    // Seasonal variants: simulated analysis months read as calendar months
    // from trial start (every subject completes vaccination at month 1).
    const std::optional<int> s_high = high_season_start(spec.baseline);
    if (s_high) {
      IncidenceTable monthly = tabulate_incidence(ds, std::vector<double>(12, 1.0));
      for (int m = 0; m < 12; ++m) monthly.intervals[static_cast<std::size_t>(m)].calendar_index = m + 1;
      const auto monthly_aucs = interval_aucs(curve, std::vector<double>(12, 1.0));
      out.nca_season_12 = nca_auc_seasonal(monthly_aucs, monthly, *s_high).value;
      out.nca_age_12 = nca_auc_age(monthly_aucs, monthly).value;
    }
  }
  return out;
}

// One simulate -> fit -> metrics pass. Numeric failures (non-convergence,
// separation, degenerate data) mark the replicate failed rather than abort
// the study.
inline ReplicateOutcome run_replicate(const ScenarioSpec& spec, std::uint64_t base_seed,
                                      std::uint64_t replicate_index) {
  const TrialDataset ds =
      simulate_trial(spec, replicate_seed(base_seed, spec.scenario_id, replicate_index));
  try {
    return run_replicate_metrics(ds, spec);
  } catch (const numeric_error&) {
    ReplicateOutcome out;
    out.fit_failed = true;
    return out;
  }
}

namespace detail {

class Accumulator {
 public:
  void add(double x) {
    xs_.push_back(x);
  }
  SummaryStat stat() const {
    SummaryStat s;
    s.n = xs_.size();
    if (s.n == 0) return s;
    double sum = 0.0;
    for (double x : xs_) sum += x;
    s.mean = sum / static_cast<double>(s.n);
    if (s.n > 1) {
      double ss = 0.0;
      for (double x : xs_) ss += (x - s.mean) * (x - s.mean);
      s.mc_se = std::sqrt(ss / static_cast<double>(s.n - 1) / static_cast<double>(s.n));
    }
    return s;
  }

 private:
  std::vector<double> xs_;
};

}  // namespace detail

// Runs n_replicates of the scenario, optionally across threads. Aggregation
// runs in fixed replicate order so the summary is bit-identical for any
// n_jobs.
inline StudySummary run_scenario(const ScenarioSpec& spec, std::size_t n_replicates,
                                 std::uint64_t base_seed, unsigned n_jobs = 1) {
  if (n_replicates < 1) throw validation_error("run_scenario: n_replicates must be >= 1");
  spec.validate();

  std::vector<ReplicateOutcome> outcomes(n_replicates);
  const unsigned workers =
      std::max(1u, std::min<unsigned>(n_jobs, static_cast<unsigned>(n_replicates)));
  if (workers == 1) {
    for (std::size_t r = 0; r < n_replicates; ++r)
      outcomes[r] = run_replicate(spec, base_seed, r);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t r = next.fetch_add(1); r < n_replicates; r = next.fetch_add(1))
          outcomes[r] = run_replicate(spec, base_seed, r);
      });
    }
    for (auto& th : pool) th.join();
  }

  StudySummary s;
  s.scenario_id = spec.scenario_id;
  s.n_replicates = n_replicates;

  detail::Accumulator beta_ph, ve_ph, beta0, beta1, auc12, auc10;
  detail::Accumulator sf12, sf10, a12, a10, season, age;
  for (const auto& o : outcomes) {
    if (o.fit_failed) {
      ++s.n_failed_fits;
      continue;
    }
    beta_ph.add(o.beta_ph);
    ve_ph.add(o.ve_ph);
    beta0.add(o.beta0);
    beta1.add(o.beta1);
    auc12.add(o.auc_0_12);
    auc10.add(o.auc_0_10);
    if (o.nca_sf_12) sf12.add(*o.nca_sf_12);
    if (o.nca_sf_10) sf10.add(*o.nca_sf_10);
    if (o.nca_auc_12) a12.add(*o.nca_auc_12);
    if (o.nca_auc_10) a10.add(*o.nca_auc_10);
    if (o.nca_season_12) season.add(*o.nca_season_12);
    if (o.nca_age_12) age.add(*o.nca_age_12);
  }
  s.high_failure_rate =
      static_cast<double>(s.n_failed_fits) > 0.01 * static_cast<double>(n_replicates);
  s.beta_ph = beta_ph.stat();
  s.ve_ph = ve_ph.stat();
  s.beta0 = beta0.stat();
  s.beta1 = beta1.stat();
  s.auc_0_12 = auc12.stat();
  s.auc_0_10 = auc10.stat();
  auto opt = [](const detail::Accumulator& a) -> std::optional<SummaryStat> {
    const SummaryStat st = a.stat();
    if (st.n == 0) return std::nullopt;
    return st;
  };
  s.nca_sf_12 = opt(sf12);
  s.nca_sf_10 = opt(sf10);
  s.nca_auc_12 = opt(a12);
  s.nca_auc_10 = opt(a10);
  s.nca_season_12 = opt(season);
  s.nca_age_12 = opt(age);
  return s;
}

inline std::vector<StudySummary> run_builtin_study(const std::vector<int>& scenario_ids,
                                                   std::size_t n_replicates,
                                                   std::uint64_t base_seed,
                                                   unsigned n_jobs = 1) {
  std::vector<StudySummary> all;
  all.reserve(scenario_ids.size());
  for (int id : scenario_ids)
    all.push_back(run_scenario(builtin_scenario(id), n_replicates, base_seed, n_jobs));
  return all;
}

inline std::vector<StudySummary> run_table1_study(std::size_t n_replicates,
                                                  std::uint64_t base_seed,
                                                  unsigned n_jobs = 1) {
  return run_builtin_study({1, 2, 3, 4, 5, 6, 7, 8}, n_replicates, base_seed, n_jobs);
}

namespace detail {

inline std::string fmt(double v, int prec) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(prec) << v;
  return os.str();
}

inline std::string cell(const std::optional<SummaryStat>& s, int prec, int width) {
  std::ostringstream os;
  os << std::setw(width) << (s ? fmt(s->mean, prec) : std::string("-"));
  return os.str();
}

}  // namespace detail

// Text rendering of the estimation summary (coefficients, VE, AUC).
inline std::string render_estimation_table(const std::vector<StudySummary>& summaries) {
  std::ostringstream os;
  os << "scenario    beta_ph   ve_ph%     beta0     beta1  auc_0_12%  auc_0_10%\n";
  for (const auto& s : summaries) {
    os << std::setw(8) << s.scenario_id << "  " << std::setw(9) << detail::fmt(s.beta_ph.mean, 2)
       << std::setw(9) << detail::fmt(100.0 * s.ve_ph.mean, 1) << std::setw(10)
       << detail::fmt(s.beta0.mean, 2) << std::setw(10) << detail::fmt(s.beta1.mean, 3)
       << std::setw(11) << detail::fmt(100.0 * s.auc_0_12.mean, 1) << std::setw(11)
       << detail::fmt(100.0 * s.auc_0_10.mean, 1) << "\n";
  }
  return os.str();
}

// Text rendering of the impact summary (NCA variants).
inline std::string render_impact_table(const std::vector<StudySummary>& summaries) {
  std::ostringstream os;
  os << "scenario  nca_sf_12  nca_sf_10  nca_auc_12  nca_auc_10  nca_season_12  nca_age_12\n";
  for (const auto& s : summaries) {
    os << std::setw(8) << s.scenario_id << detail::cell(s.nca_sf_12, 1, 11)
       << detail::cell(s.nca_sf_10, 1, 11) << detail::cell(s.nca_auc_12, 1, 12)
       << detail::cell(s.nca_auc_10, 1, 12) << detail::cell(s.nca_season_12, 1, 15)
       << detail::cell(s.nca_age_12, 1, 12) << "\n";
  }
  return os.str();
}

}  // namespace vecurve
