#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "vecurve/common.hpp"
#include "vecurve/effect.hpp"

// VE(t) = 1 - exp(f(t)) and its interval summary
// AUC_{t1-t2} = (1/(t2-t1)) * integral of VE over [t1, t2].

namespace vecurve {

struct VECurve {
  EffectSpec effect;

  double at(double t) const { return effect.vaccine_efficacy(t); }
};

enum class AUCKind { within, interpolation, extrapolation };

inline std::string to_string(AUCKind k) {
  switch (k) {
    case AUCKind::within: return "within";
    case AUCKind::interpolation: return "interpolation";
    case AUCKind::extrapolation: return "extrapolation";
  }
  return "?";
}

struct AUCValue {
  double t1 = 0.0;
  double t2 = 0.0;
  double value = 0.0;  // proportion, may be negative; <= 1
  AUCKind kind = AUCKind::within;
};

inline double ve_at(const VECurve& curve, double t) {
  if (t < 0.0) throw domain_error("ve_at: t must be >= 0");
  return curve.at(t);
}

namespace detail {

inline void check_interval(double t1, double t2) {
  if (!(t1 < t2)) throw validation_error("AUC interval requires t1 < t2");
  if (t1 < 0.0) throw validation_error("AUC interval requires t1 >= 0");
}

// integral of exp(beta0 + beta1 * g(t)) dt over [t1, t2], exact per family.
inline double hr_integral(const EffectSpec& e, double t1, double t2) {
  const double b0 = e.beta0;
  switch (e.family) {
    case EffectFamily::constant:
      return std::exp(b0) * (t2 - t1);
    case EffectFamily::linear: {
      const double b1 = e.slope();
      if (b1 == 0.0) return std::exp(b0) * (t2 - t1);
      return std::exp(b0) * (std::exp(b1 * t2) - std::exp(b1 * t1)) / b1;
    }
    case EffectFamily::log: {
      const double b1 = e.slope();
      if (b1 <= -1.0)
        throw numeric_error("log-family AUC requires beta1 > -1");
      const double q = b1 + 1.0;
      return std::exp(b0) * (std::pow(t2, q) - std::pow(t1, q)) / q;
    }
    case EffectFamily::sqrt:
      throw validation_error("closed-form AUC does not support the sqrt family; use quadrature");
  }
  return 0.0;
}

}  // namespace detail

// Exact AUC for the constant, linear, and log families. The linear family
// uses the antiderivative t - exp(beta0 + beta1 t)/beta1 with a dedicated
// beta1 = 0 branch; the log family uses the power rule (valid down to
// t1 = 0 for beta1 > -1).
inline AUCValue auc_closed_form(const EffectSpec& effect, double t1, double t2) {
  detail::check_interval(t1, t2);
  const double integral = (t2 - t1) - detail::hr_integral(effect, t1, t2);
  return {t1, t2, integral / (t2 - t1), AUCKind::within};
}

namespace detail {

template <typename F>
double simpson(F&& f, double a, double b, int n_panels) {
  const double h = (b - a) / n_panels;
  double acc = f(a) + f(b);
  for (int i = 1; i < n_panels; ++i) acc += f(a + i * h) * (i % 2 == 1 ? 4.0 : 2.0);
  return acc * h / 3.0;
}

}  // namespace detail

// Composite Simpson estimate of the AUC. n_panels must be even. The log and
// sqrt families integrate in u = sqrt(t), which smooths the t -> 0 endpoint;
// a log family with beta1 <= 0 on an interval touching 0 is unbounded there
// and falls back to the exact antiderivative.
inline AUCValue auc_quadrature(const VECurve& curve, double t1, double t2,
                               int n_panels = 1024) {
  detail::check_interval(t1, t2);
  if (n_panels < 2 || n_panels % 2 != 0)
    throw validation_error("auc_quadrature: n_panels must be even and >= 2");

  const EffectSpec& e = curve.effect;
  double integral;
  if (e.family == EffectFamily::log || e.family == EffectFamily::sqrt) {
    if (e.family == EffectFamily::log && t1 == 0.0 && e.slope() <= 0.0)
      return auc_closed_form(e, t1, t2);
    auto f = [&](double u) {
      if (u == 0.0) return 0.0;  // limit of VE(u^2) * 2u
      return curve.at(u * u) * 2.0 * u;
    };
    integral = detail::simpson(f, std::sqrt(t1), std::sqrt(t2), n_panels);
  } else {
    integral = detail::simpson([&](double t) { return curve.at(t); }, t1, t2, n_panels);
  }
  return {t1, t2, integral / (t2 - t1), AUCKind::within};
}

// AUC over each consecutive interval from t = 0. Families with a closed
// form use it; the sqrt family uses quadrature.
inline std::vector<AUCValue> interval_aucs(const VECurve& curve,
                                           const std::vector<double>& delta_times) {
  if (delta_times.empty()) throw validation_error("interval_aucs: delta_times must be non-empty");
  std::vector<AUCValue> aucs;
  aucs.reserve(delta_times.size());
  double lower = 0.0;
  for (double d : delta_times) {
    if (!(d > 0.0)) throw validation_error("interval_aucs: delta_times must be > 0");
    const double upper = lower + d;
    if (curve.effect.family == EffectFamily::sqrt)
      aucs.push_back(auc_quadrature(curve, lower, upper));
    else
      aucs.push_back(auc_closed_form(curve.effect, lower, upper));
    lower = upper;
  }
  return aucs;
}

// AUC over [0, horizon] from a curve fitted on data of a different duration,
// labeled interpolation (horizon < fitted) or extrapolation (horizon >
// fitted).
inline AUCValue auc_cross_duration(const VECurve& curve, double fitted_horizon,
                                   double horizon) {
  AUCValue out = curve.effect.family == EffectFamily::sqrt
                     ? auc_quadrature(curve, 0.0, horizon)
                     : auc_closed_form(curve.effect, 0.0, horizon);
  if (horizon < fitted_horizon)
    out.kind = AUCKind::interpolation;
  else if (horizon > fitted_horizon)
    out.kind = AUCKind::extrapolation;
  return out;
}

}  // namespace vecurve
