#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vecurve/common.hpp"
#include "vecurve/effect.hpp"
#include "vecurve/trial_data.hpp"

// Stratified partial likelihood for the intervention indicator with an
// optional time-varying effect. The covariate vector at event time t is
// z (constant family) or (z, g(t) z), so the risk-set denominator reduces to
// N0(t) + N1(t) exp(beta0 + beta1 g(t)) with N_a(t) the per-stratum at-risk
// count of arm a. Ties use the Breslow convention (shared denominator).

namespace vecurve {

enum class RiskSetRule { ag, first_event };

inline std::string to_string(RiskSetRule r) {
  return r == RiskSetRule::ag ? "ag" : "first_event";
}

inline RiskSetRule risk_set_rule_from_string(const std::string& s) {
  if (s == "ag") return RiskSetRule::ag;
  if (s == "first_event" || s == "first-event") return RiskSetRule::first_event;
  throw validation_error("unknown risk-set rule: '" + s + "'");
}

// Symmetric matrix of dimension p in {1, 2}.
struct SymMat2 {
  int p = 1;
  std::array<std::array<double, 2>, 2> m{{{0.0, 0.0}, {0.0, 0.0}}};

  SymMat2 inverse() const {
    SymMat2 inv;
    inv.p = p;
    if (p == 1) {
      if (m[0][0] == 0.0) throw degenerate_data_error("singular information matrix");
      inv.m[0][0] = 1.0 / m[0][0];
      return inv;
    }
    const double det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    if (det == 0.0 || !std::isfinite(det))
      throw degenerate_data_error("singular information matrix");
    inv.m[0][0] = m[1][1] / det;
    inv.m[1][1] = m[0][0] / det;
    inv.m[0][1] = inv.m[1][0] = -m[0][1] / det;
    return inv;
  }
};

struct FitOptions {
  int max_iterations = 50;
  int max_step_halvings = 20;
  double loglik_rel_tol = 1e-9;
  double score_tol = 1e-6;
};

struct FitResult {
  EffectSpec effect;  // family plus fitted coefficients
  RiskSetRule rule = RiskSetRule::ag;
  double loglik = 0.0;
  SymMat2 cov_model;   // inverse observed information
  SymMat2 cov_robust;  // subject-clustered sandwich
  std::size_t n_events = 0;
  std::size_t n_subjects = 0;
  int iterations = 0;
  bool converged = false;
  double bic = 0.0;
  std::optional<std::string> warning;

  double se_model(int j) const { return std::sqrt(cov_model.m[j][j]); }
  double se_robust(int j) const { return std::sqrt(cov_robust.m[j][j]); }
  double ve() const { return effect.vaccine_efficacy(0.0); }  // constant family only
};

// Thrown when Newton-Raphson exhausts its iteration budget; carries the
// last iterate for diagnosis.
class non_convergence_error : public numeric_error {
 public:
  non_convergence_error(const std::string& msg, FitResult last)
      : numeric_error(msg), last_iterate(std::move(last)) {}
  FitResult last_iterate;
};

namespace detail {

struct StratumData {
  // One entry per event used by the active rule, sorted by time.
  std::vector<double> event_times;
  std::vector<int> event_arms;
  // Risk-exit times per arm, sorted ascending. A subject is at risk at t
  // iff exit >= t (exit = censor time under AG, min(censor, first event)
  // under the first-event rule).
  std::array<std::vector<double>, 2> exits;
  // Subject indices (into the dataset) per arm, aligned with nothing; used
  // for the residual pass.
  std::vector<std::size_t> subject_index;  // subjects in this stratum
};

inline std::vector<StratumData> build_strata(const TrialDataset& ds, RiskSetRule rule) {
  std::map<std::string, StratumData> by_stratum;
  for (std::size_t i = 0; i < ds.subjects.size(); ++i) {
    const Subject& s = ds.subjects[i];
    StratumData& sd = by_stratum[s.stratum];
    sd.subject_index.push_back(i);
    if (rule == RiskSetRule::ag) {
      sd.exits[static_cast<std::size_t>(s.arm)].push_back(s.censor_time);
      for (double t : s.event_times) {
        sd.event_times.push_back(t);
        sd.event_arms.push_back(s.arm);
      }
    } else {
      const double first = s.event_times.empty() ? s.censor_time : s.event_times.front();
      sd.exits[static_cast<std::size_t>(s.arm)].push_back(std::min(first, s.censor_time));
      if (!s.event_times.empty()) {
        sd.event_times.push_back(s.event_times.front());
        sd.event_arms.push_back(s.arm);
      }
    }
  }

  std::vector<StratumData> strata;
  strata.reserve(by_stratum.size());
  for (auto& entry : by_stratum) {
    StratumData& sd = entry.second;
    std::vector<std::size_t> order(sd.event_times.size());
    for (std::size_t j = 0; j < order.size(); ++j) order[j] = j;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return sd.event_times[a] < sd.event_times[b];
    });
    StratumData sorted;
    sorted.subject_index = std::move(sd.subject_index);
    sorted.exits = sd.exits;
    std::sort(sorted.exits[0].begin(), sorted.exits[0].end());
    std::sort(sorted.exits[1].begin(), sorted.exits[1].end());
    sorted.event_times.reserve(order.size());
    sorted.event_arms.reserve(order.size());
    for (std::size_t j : order) {
      sorted.event_times.push_back(sd.event_times[j]);
      sorted.event_arms.push_back(sd.event_arms[j]);
    }
    strata.push_back(std::move(sorted));
  }
  return strata;
}

struct Derivatives {
  double loglik = 0.0;
  std::array<double, 2> score{0.0, 0.0};
  SymMat2 info;  // negative Hessian (observed information)
};

// One sweep over all strata: log partial likelihood with exact first and
// second derivatives. Events at the same time within a stratum share the
// denominator.
inline Derivatives sweep(const std::vector<StratumData>& strata, EffectFamily family,
                         double beta0, double beta1, int p) {
  Derivatives d;
  d.info.p = p;
  for (const auto& sd : strata) {
    std::size_t p0 = 0, p1 = 0;  // exits passed (exit < t)
    const auto& ex0 = sd.exits[0];
    const auto& ex1 = sd.exits[1];
    std::size_t j = 0;
    const std::size_t n_events = sd.event_times.size();
    while (j < n_events) {
      const double t = sd.event_times[j];
      while (p0 < ex0.size() && ex0[p0] < t) ++p0;
      while (p1 < ex1.size() && ex1[p1] < t) ++p1;
      const double n0 = static_cast<double>(ex0.size() - p0);
      const double n1 = static_cast<double>(ex1.size() - p1);
      if (n0 + n1 <= 0.0)
        throw degenerate_data_error("empty risk set at event time " + std::to_string(t));

      const double g = effect_time_basis(family, t);
      const double eta = beta0 + beta1 * g;
      const double w = std::exp(eta);
      const double denom = n0 + n1 * w;
      const double log_denom = std::log(denom);
      const double pr1 = n1 * w / denom;  // weighted share of arm 1 in the risk set
      const double v = pr1 * (1.0 - pr1);

      // All events tied at t contribute with this shared denominator.
      for (; j < n_events && sd.event_times[j] == t; ++j) {
        const double z = static_cast<double>(sd.event_arms[j]);
        d.loglik += z * eta - log_denom;
        d.score[0] += z - pr1;
        d.info.m[0][0] += v;
        if (p == 2) {
          d.score[1] += g * (z - pr1);
          d.info.m[0][1] += g * v;
          d.info.m[1][1] += g * g * v;
        }
      }
    }
  }
  d.info.m[1][0] = d.info.m[0][1];
  return d;
}

inline std::size_t count_events(const std::vector<StratumData>& strata, int arm) {
  std::size_t n = 0;
  for (const auto& sd : strata)
    for (int a : sd.event_arms) n += (a == arm);
  return n;
}

// Subject-clustered score residuals: s_i sums the subject's event terms
// (z_i - pr1(t)) x(t) minus its at-risk terms. For arm a the per-event risk
// contribution (z_a - pr1) e_a / denom depends only on (a, t), so each
// subject's at-risk sum is a prefix sum over event times up to its risk
// exit. The residuals satisfy sum_i s_i = score at any coefficients.
inline std::vector<std::array<double, 2>> score_residuals(
    const TrialDataset& ds, const std::vector<StratumData>& strata, EffectFamily family,
    double beta0, double beta1, RiskSetRule rule) {
  std::vector<std::array<double, 2>> resid(ds.subjects.size(), {0.0, 0.0});

  // Map subject id -> index within the dataset for the event pass.
  // Events in StratumData do not carry subject indices, so recompute the
  // per-subject event contributions directly from the dataset.
  for (const auto& sd : strata) {
    const std::size_t n_events = sd.event_times.size();
    // Per-event cumulative at-risk increments, one series per arm.
    std::vector<double> cum0_b0(n_events), cum0_b1(n_events);
    std::vector<double> cum1_b0(n_events), cum1_b1(n_events);
    std::vector<double> pr1_at(n_events), g_at(n_events);

    std::size_t p0 = 0, p1 = 0;
    const auto& ex0 = sd.exits[0];
    const auto& ex1 = sd.exits[1];
    double a0 = 0.0, a1 = 0.0, b0c = 0.0, b1c = 0.0;
    std::size_t j = 0;
    while (j < n_events) {
      const double t = sd.event_times[j];
      while (p0 < ex0.size() && ex0[p0] < t) ++p0;
      while (p1 < ex1.size() && ex1[p1] < t) ++p1;
      const double n0 = static_cast<double>(ex0.size() - p0);
      const double n1 = static_cast<double>(ex1.size() - p1);
      const double g = effect_time_basis(family, t);
      const double w = std::exp(beta0 + beta1 * g);
      const double denom = n0 + n1 * w;
      const double pr1 = n1 * w / denom;
      for (; j < n_events && sd.event_times[j] == t; ++j) {
        // arm 0: (0 - pr1) * (1/denom); arm 1: (1 - pr1) * (w/denom)
        a0 += -pr1 / denom;
        a1 += g * (-pr1 / denom);
        b0c += (1.0 - pr1) * w / denom;
        b1c += g * (1.0 - pr1) * w / denom;
        cum0_b0[j] = a0;
        cum0_b1[j] = a1;
        cum1_b0[j] = b0c;
        cum1_b1[j] = b1c;
        pr1_at[j] = pr1;
        g_at[j] = g;
      }
    }

    for (std::size_t si : sd.subject_index) {
      const Subject& s = ds.subjects[si];
      double exit;
      std::size_t n_own = 0;  // events of this subject under the rule
      if (rule == RiskSetRule::ag) {
        exit = s.censor_time;
        n_own = s.event_times.size();
      } else {
        exit = s.event_times.empty() ? s.censor_time
                                     : std::min(s.event_times.front(), s.censor_time);
        n_own = s.event_times.empty() ? 0 : 1;
      }

      // At-risk part: prefix sum over events with time <= exit.
      const auto ub = std::upper_bound(sd.event_times.begin(), sd.event_times.end(), exit);
      if (ub != sd.event_times.begin()) {
        const std::size_t last = static_cast<std::size_t>(ub - sd.event_times.begin()) - 1;
        if (s.arm == 0) {
          resid[si][0] -= cum0_b0[last];
          resid[si][1] -= cum0_b1[last];
        } else {
          resid[si][0] -= cum1_b0[last];
          resid[si][1] -= cum1_b1[last];
        }
      }

      // Event part: (z_i - pr1(t)) * (1, g(t)) at the subject's own events.
      for (std::size_t e = 0; e < n_own; ++e) {
        const double t = s.event_times[e];
        const auto lo = std::lower_bound(sd.event_times.begin(), sd.event_times.end(), t);
        std::size_t idx = static_cast<std::size_t>(lo - sd.event_times.begin());
        // Several events may be tied at t; pr1 and g are equal across them.
        const double z = static_cast<double>(s.arm);
        resid[si][0] += z - pr1_at[idx];
        resid[si][1] += g_at[idx] * (z - pr1_at[idx]);
      }
    }
  }
  return resid;
}

// S = sum_i s_i s_i' over subjects, the meat of the sandwich variance.
inline SymMat2 score_residual_outer(const TrialDataset& ds,
                                    const std::vector<StratumData>& strata,
                                    EffectFamily family, double beta0, double beta1,
                                    int p, RiskSetRule rule) {
  const auto resid = score_residuals(ds, strata, family, beta0, beta1, rule);
  SymMat2 outer;
  outer.p = p;
  for (const auto& r : resid) {
    outer.m[0][0] += r[0] * r[0];
    if (p == 2) {
      outer.m[0][1] += r[0] * r[1];
      outer.m[1][1] += r[1] * r[1];
    }
  }
  outer.m[1][0] = outer.m[0][1];
  return outer;
}

inline void check_log_family_events(const TrialDataset& ds, EffectFamily family) {
  if (family != EffectFamily::log) return;
  for (const auto& s : ds.subjects)
    for (double t : s.event_times)
      if (t <= 0.0)
        throw degenerate_data_error("log effect family cannot use an event at t <= 0 (subject '" + s.id + "')");
}

}  // namespace detail

// Log partial likelihood at the given coefficients. beta1 is ignored for
// the constant family.
inline double log_partial_likelihood(const TrialDataset& ds, EffectFamily family,
                                     double beta0, double beta1, RiskSetRule rule) {
  detail::check_log_family_events(ds, family);
  const auto strata = detail::build_strata(ds, rule);
  const int p = family == EffectFamily::constant ? 1 : 2;
  return detail::sweep(strata, family, beta0, family == EffectFamily::constant ? 0.0 : beta1, p).loglik;
}

// Analytic score vector and observed information (negative Hessian).
inline std::pair<std::array<double, 2>, SymMat2> score_and_information(
    const TrialDataset& ds, EffectFamily family, double beta0, double beta1,
    RiskSetRule rule) {
  detail::check_log_family_events(ds, family);
  const auto strata = detail::build_strata(ds, rule);
  const int p = family == EffectFamily::constant ? 1 : 2;
  auto d = detail::sweep(strata, family, beta0, family == EffectFamily::constant ? 0.0 : beta1, p);
  return {d.score, d.info};
}

// Newton-Raphson from zero with step-halving. Converged means the relative
// log-likelihood change fell below loglik_rel_tol and the score max-norm
// below score_tol. Separation (all events in one arm) returns the last
// finite iterate flagged converged = false instead of diverging.
inline FitResult fit(const TrialDataset& ds, EffectFamily family, RiskSetRule rule,
                     const FitOptions& options = {}) {
  validate_dataset(ds);
  detail::check_log_family_events(ds, family);
  const auto strata = detail::build_strata(ds, rule);
  const int p = family == EffectFamily::constant ? 1 : 2;

  std::size_t n_events = 0;
  for (const auto& sd : strata) n_events += sd.event_times.size();
  if (n_events == 0) throw degenerate_data_error("fit requires at least one event");
  for (const auto& sd : strata) {
    if (sd.event_times.empty()) continue;
    if (sd.exits[0].empty() || sd.exits[1].empty())
      throw degenerate_data_error("a stratum with events must contain both arms");
  }

  const bool separated = detail::count_events(strata, 0) == 0 || detail::count_events(strata, 1) == 0;

  double beta0 = 0.0, beta1 = 0.0;
  auto cur = detail::sweep(strata, family, beta0, beta1, p);
  int iter = 0;
  bool converged = false;
  const int max_iter = separated ? std::min(options.max_iterations, 25) : options.max_iterations;

  while (iter < max_iter) {
    ++iter;
    const SymMat2 inv = cur.info.inverse();
    double step0 = inv.m[0][0] * cur.score[0] + (p == 2 ? inv.m[0][1] * cur.score[1] : 0.0);
    double step1 = p == 2 ? inv.m[1][0] * cur.score[0] + inv.m[1][1] * cur.score[1] : 0.0;

    // Near the optimum the quadratic improvement drops below the rounding
    // noise of the log-likelihood sum, so accept steps within that noise.
    const double noise = 1e-10 * (std::abs(cur.loglik) + 1.0);
    auto acceptable = [&](double ll) { return std::isfinite(ll) && ll >= cur.loglik - noise; };

    double trial0 = beta0 + step0, trial1 = beta1 + step1;
    auto next = detail::sweep(strata, family, trial0, trial1, p);
    for (int h = 0; h < options.max_step_halvings && !acceptable(next.loglik); ++h) {
      step0 *= 0.5;
      step1 *= 0.5;
      trial0 = beta0 + step0;
      trial1 = beta1 + step1;
      next = detail::sweep(strata, family, trial0, trial1, p);
    }
    if (!acceptable(next.loglik)) break;  // no usable step

    const double rel_change = std::abs(next.loglik - cur.loglik) /
                              (std::abs(cur.loglik) + 1e-300);
    beta0 = trial0;
    beta1 = trial1;
    cur = next;

    const double score_norm = std::max(std::abs(cur.score[0]),
                                       p == 2 ? std::abs(cur.score[1]) : 0.0);
    if (rel_change < options.loglik_rel_tol && score_norm < options.score_tol) {
      converged = true;
      break;
    }
    if (separated && std::max(std::abs(beta0), std::abs(beta1)) > 30.0) break;
  }

  FitResult result;
  result.effect = EffectSpec{family, beta0,
                             p == 2 ? std::optional<double>(beta1) : std::nullopt};
  result.rule = rule;
  result.loglik = cur.loglik;
  result.n_events = n_events;
  result.n_subjects = ds.subjects.size();
  result.iterations = iter;
  result.converged = converged && !separated;
  result.bic = -2.0 * cur.loglik + p * std::log(static_cast<double>(n_events));
  result.cov_model = cur.info.inverse();
  const SymMat2 outer = detail::score_residual_outer(ds, strata, family, beta0,
                                                     beta1, p, rule);
  // sandwich: I^-1 (sum s s') I^-1
  SymMat2 rob;
  rob.p = p;
  const auto& A = result.cov_model.m;
  const auto& B = outer.m;
  for (int r = 0; r < p; ++r)
    for (int c = 0; c < p; ++c) {
      double acc = 0.0;
      for (int u = 0; u < p; ++u)
        for (int v = 0; v < p; ++v) acc += A[r][u] * B[u][v] * A[v][c];
      rob.m[r][c] = acc;
    }
  result.cov_robust = rob;

  if (separated) {
    result.warning = "monotone-likelihood separation: one arm has zero events";
    return result;
  }
  if (!converged)
    throw non_convergence_error("fit did not converge within " +
                                    std::to_string(options.max_iterations) + " iterations",
                                result);
  return result;
}

// Ascending-BIC ranking with pairwise differences against the best model.
struct BicRanking {
  std::vector<std::size_t> order;       // indices into the input, best first
  std::vector<double> delta_bic;        // bic - best bic, aligned with order
};

inline BicRanking compare_bic(const std::vector<FitResult>& fits) {
  if (fits.empty()) throw validation_error("compare_bic: no fits given");
  for (const auto& f : fits) {
    if (f.n_subjects != fits.front().n_subjects || f.rule != fits.front().rule)
      throw validation_error("compare_bic: fits must share the same dataset and rule");
  }
  BicRanking rank;
  rank.order.resize(fits.size());
  for (std::size_t i = 0; i < fits.size(); ++i) rank.order[i] = i;
  std::stable_sort(rank.order.begin(), rank.order.end(),
                   [&](std::size_t a, std::size_t b) { return fits[a].bic < fits[b].bic; });
  const double best = fits[rank.order.front()].bic;
  rank.delta_bic.reserve(fits.size());
  for (std::size_t i : rank.order) rank.delta_bic.push_back(fits[i].bic - best);
  return rank;
}

}  // namespace vecurve
