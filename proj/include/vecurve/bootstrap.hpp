#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

#include "vecurve/ag_fit.hpp"
#include "vecurve/common.hpp"
#include "vecurve/rng.hpp"
#include "vecurve/trial_data.hpp"
#include "vecurve/ve_metrics.hpp"

// Subject-level nonparametric bootstrap for the AUC: resample subjects with
// replacement, refit, recompute the AUC, and take percentile bounds. This is
// an optional add-on; the point estimate never depends on it.

namespace vecurve {

struct BootstrapInterval {
  double point = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  std::size_t n_resamples = 0;
  std::size_t n_failed = 0;
  double level = 0.95;
};

inline BootstrapInterval bootstrap_auc(const TrialDataset& ds, EffectFamily family,
                                       RiskSetRule rule, double t1, double t2,
                                       std::size_t n_resamples = 500,
                                       std::uint64_t seed = 0, double level = 0.95) {
  if (n_resamples < 2) throw validation_error("bootstrap_auc: n_resamples must be >= 2");
  if (!(level > 0.0 && level < 1.0)) throw validation_error("bootstrap_auc: level must be in (0,1)");

  auto auc_of = [&](const FitResult& f) {
    const VECurve curve{f.effect};
    return (family == EffectFamily::sqrt ? auc_quadrature(curve, t1, t2)
                                         : auc_closed_form(f.effect, t1, t2))
        .value;
  };

  BootstrapInterval out;
  out.level = level;
  out.n_resamples = n_resamples;
  out.point = auc_of(fit(ds, family, rule));

  const std::size_t n = ds.subjects.size();
  std::vector<double> values;
  values.reserve(n_resamples);
  for (std::size_t b = 0; b < n_resamples; ++b) {
    Xoshiro256pp rng(derive_stream(seed, 0x626F6F74ULL, b));  // per-resample substream
    TrialDataset resampled;
    resampled.subjects.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t pick = static_cast<std::size_t>(rng.uniform01() * static_cast<double>(n));
      Subject s = ds.subjects[std::min(pick, n - 1)];
      s.id = s.id + "#" + std::to_string(i);  // keep ids unique in the resample
      resampled.subjects.push_back(std::move(s));
    }
    try {
      const FitResult f = fit(resampled, family, rule);
      if (!f.converged) {
        ++out.n_failed;
        continue;
      }
      values.push_back(auc_of(f));
    } catch (const numeric_error&) {
      ++out.n_failed;
    }
  }
  if (values.size() < 2)
    throw numeric_error("bootstrap_auc: too few successful resamples");

  std::sort(values.begin(), values.end());
  const double alpha = (1.0 - level) / 2.0;
  auto pick_quantile = [&](double q) {
    const double pos = q * static_cast<double>(values.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    const double w = pos - static_cast<double>(lo);
    return values[lo] * (1.0 - w) + values[hi] * w;
  };
  out.lower = pick_quantile(alpha);
  out.upper = pick_quantile(1.0 - alpha);
  return out;
}

}  // namespace vecurve
