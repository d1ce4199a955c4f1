#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <string>
#include <vector>

#include "vecurve/common.hpp"
#include "vecurve/effect.hpp"
#include "vecurve/rng.hpp"
#include "vecurve/trial_data.hpp"

// Recurrent-event simulation under lambda_i(t) = lambda0(t) * exp(f(t) z_i)
// using thinning: propose arrivals from a homogeneous Poisson process with a
// dominating rate lambda_bar and accept each proposal T* with probability
// lambda_i(T*) / lambda_bar.

namespace vecurve {

// Piecewise-constant baseline hazard. Segment i covers
// [breakpoints[i], breakpoints[i+1]) with the final segment closed at the
// horizon of use.
struct BaselineHazard {
  std::vector<double> breakpoints;  // strictly increasing, first must be 0
  std::vector<double> rates;        // events per person-month, one per segment

  void validate() const {
    if (breakpoints.empty() || breakpoints.size() != rates.size())
      throw validation_error("baseline hazard: need one rate per breakpoint");
    if (breakpoints.front() != 0.0)
      throw validation_error("baseline hazard: first breakpoint must be 0");
    for (std::size_t i = 1; i < breakpoints.size(); ++i)
      if (!(breakpoints[i] > breakpoints[i - 1]))
        throw validation_error("baseline hazard: breakpoints must be strictly increasing");
    for (double r : rates)
      if (r < 0.0 || !std::isfinite(r))
        throw validation_error("baseline hazard: rates must be finite and >= 0");
  }

  // lambda0(t) for t within [0, horizon]. t at a breakpoint belongs to the
  // segment starting there.
  double rate_at(double t, double horizon) const {
    if (t < 0.0 || t > horizon)
      throw domain_error("baseline hazard evaluated outside [0, horizon]");
    auto it = std::upper_bound(breakpoints.begin(), breakpoints.end(), t);
    return rates[static_cast<std::size_t>(it - breakpoints.begin()) - 1];
  }

  double max_rate() const { return *std::max_element(rates.begin(), rates.end()); }
};

inline BaselineHazard constant_hazard(double rate) { return {{0.0}, {rate}}; }

struct CensoringSpec {
  enum class Kind { fixed, uniform };
  Kind kind = Kind::fixed;
  double a = 0.0;  // lower bound for uniform
  double b = 0.0;  // upper bound for uniform
};

struct ScenarioSpec {
  std::string scenario_id = "custom";
  double tau = 12.0;  // planned study duration (months)
  int n_per_arm = 1000;
  CensoringSpec censoring;
  BaselineHazard baseline;
  EffectSpec effect;

  void validate() const {
    baseline.validate();
    if (n_per_arm <= 0) throw validation_error("scenario: n_per_arm must be > 0");
    if (!(tau > 0.0)) throw validation_error("scenario: tau must be > 0");
    if (censoring.kind == CensoringSpec::Kind::uniform) {
      if (!(0.0 < censoring.a && censoring.a < censoring.b && censoring.b <= tau))
        throw validation_error("scenario: uniform censoring requires 0 < a < b <= tau");
    }
  }
};

// lambda_i(t) = lambda0(t) for the control arm, lambda0(t) * exp(f(t)) for
// the vaccine arm.
inline double hazard_value(const BaselineHazard& baseline, const EffectSpec& effect,
                           int arm, double t, double horizon) {
  const double base = baseline.rate_at(t, horizon);
  if (arm == 0) return base;
  return base * effect.hazard_ratio(t);
}

// Dominating rate lambda_bar >= lambda_i(t) on [0, horizon]: the maximum
// segment rate times the largest hazard-ratio value over the segment
// endpoints. All supported effect families are monotone in t, so the
// endpoint sup equals the interval sup; the log family's t -> 0 limit is 0
// when beta1 > 0.
inline double hazard_upper_bound(const BaselineHazard& baseline, const EffectSpec& effect,
                                 int arm, double horizon) {
  const double max_rate = baseline.max_rate();
  if (arm == 0) return max_rate;

  std::vector<double> endpoints;
  endpoints.push_back(0.0);
  for (double b : baseline.breakpoints)
    if (b > 0.0 && b < horizon) endpoints.push_back(b);
  endpoints.push_back(horizon);

  double sup_hr = 0.0;
  for (double t : endpoints) {
    double hr;
    if (effect.family == EffectFamily::log && t == 0.0) {
      hr = effect.slope() > 0.0 ? 0.0
                                : std::numeric_limits<double>::infinity();
      if (std::isinf(hr))
        throw domain_error("hazard_upper_bound: log family with beta1 <= 0 is unbounded at t = 0");
    } else {
      hr = effect.hazard_ratio(t);
    }
    sup_hr = std::max(sup_hr, hr);
  }
  return max_rate * sup_hr;
}

// Thinning: T* accumulates Exponential(lambda_bar) gaps; while T* <= C the
// proposal is accepted as an event iff V <= lambda_i(T*)/lambda_bar. The
// dominating rate defaults to hazard_upper_bound; any larger value yields
// the same event-time distribution.
inline std::vector<double> simulate_subject(const BaselineHazard& baseline,
                                            const EffectSpec& effect, int arm,
                                            double censor_time, Xoshiro256pp& rng,
                                            std::optional<double> lambda_bar_override = {}) {
  if (!(censor_time > 0.0)) throw validation_error("simulate_subject: censor_time must be > 0");
  const double tight = hazard_upper_bound(baseline, effect, arm, censor_time);
  const double lambda_bar = lambda_bar_override.value_or(tight);
  if (lambda_bar < tight)
    throw validation_error("simulate_subject: dominating rate below the hazard supremum");
  if (lambda_bar == 0.0) return {};
  if (!(lambda_bar > 0.0) || !std::isfinite(lambda_bar))
    throw numeric_error("simulate_subject: invalid dominating rate");

  std::vector<double> events;
  double t_star = 0.0;
  while (true) {
    t_star += rng.exponential(lambda_bar);
    if (t_star > censor_time) break;
    const double lam = hazard_value(baseline, effect, arm, t_star, censor_time);
    assert(lam <= lambda_bar * (1.0 + 1e-12));
    const double v = rng.uniform01();
    if (v <= lam / lambda_bar) events.push_back(t_star);
  }
  return events;
}

// Simulates a full two-arm trial. Subject index i in [0, 2n) is control for
// i < n, vaccine otherwise; each subject draws from its own substream keyed
// by (seed, subject index), so results do not depend on execution order.
inline TrialDataset simulate_trial(const ScenarioSpec& spec, std::uint64_t seed) {
  spec.validate();
  const int n = spec.n_per_arm;
  TrialDataset ds;
  ds.subjects.resize(static_cast<std::size_t>(2) * n);

  for (int i = 0; i < 2 * n; ++i) {
    Xoshiro256pp rng(derive_stream(seed, static_cast<std::uint64_t>(i)));
    Subject& s = ds.subjects[static_cast<std::size_t>(i)];
    s.arm = i < n ? 0 : 1;
    char buf[16];
    std::snprintf(buf, sizeof(buf), "s%05d", i + 1);
    s.id = buf;
    s.stratum = "1";
    s.censor_time = spec.censoring.kind == CensoringSpec::Kind::fixed
                        ? spec.tau
                        : rng.uniform(spec.censoring.a, spec.censoring.b);
    s.event_times = simulate_subject(spec.baseline, spec.effect, s.arm, s.censor_time, rng);
  }
  return ds;
}

// The eight built-in scenarios: durations 12 or 10 months, censoring fixed
// at tau or uniform on (0.6 tau, tau), and constant or two-season baseline
// hazards; the effect is linear with beta0 = -4, beta1 = 0.33 throughout.
inline ScenarioSpec builtin_scenario(int id) {
  const BaselineHazard flat = constant_hazard(0.15);
  const BaselineHazard low_high{{0.0, 6.0}, {0.1, 0.2}};
  const BaselineHazard high_low{{0.0, 6.0}, {0.2, 0.1}};

  ScenarioSpec spec;
  spec.scenario_id = std::to_string(id);
  spec.n_per_arm = 1000;
  spec.effect = make_effect(EffectFamily::linear, -4.0, 0.33);

  auto fixed = [](double tau) { return CensoringSpec{CensoringSpec::Kind::fixed, 0.0, tau}; };
  auto unif = [](double a, double b) { return CensoringSpec{CensoringSpec::Kind::uniform, a, b}; };

  switch (id) {
    case 1: spec.tau = 12; spec.censoring = fixed(12); spec.baseline = flat; break;
    case 2: spec.tau = 10; spec.censoring = fixed(10); spec.baseline = flat; break;
    case 3: spec.tau = 12; spec.censoring = unif(7.2, 12); spec.baseline = flat; break;
    case 4: spec.tau = 10; spec.censoring = unif(6, 10); spec.baseline = flat; break;
    case 5: spec.tau = 12; spec.censoring = fixed(12); spec.baseline = low_high; break;
    case 6: spec.tau = 12; spec.censoring = fixed(12); spec.baseline = high_low; break;
    case 7: spec.tau = 12; spec.censoring = unif(7.2, 12); spec.baseline = low_high; break;
    case 8: spec.tau = 12; spec.censoring = unif(7.2, 12); spec.baseline = high_low; break;
    default: throw validation_error("unknown built-in scenario id: " + std::to_string(id));
  }
  return spec;
}

// Calendar month (1..12) in which the high-transmission season starts, for
// scenarios with a seasonal baseline; nullopt for constant baselines.
inline std::optional<int> high_season_start(const BaselineHazard& baseline) {
  if (baseline.rates.size() < 2) return std::nullopt;
  auto mx = std::max_element(baseline.rates.begin(), baseline.rates.end());
  if (*mx == *std::min_element(baseline.rates.begin(), baseline.rates.end()))
    return std::nullopt;
  const double start = baseline.breakpoints[static_cast<std::size_t>(mx - baseline.rates.begin())];
  return static_cast<int>(std::lround(start)) + 1;
}

}  // namespace vecurve
