#pragma once

#include <cmath>
#include <optional>
#include <string>

#include "vecurve/common.hpp"

namespace vecurve {

// Parametric families for the log hazard ratio f(t) = beta0 + beta1*g(t).
enum class EffectFamily { constant, linear, log, sqrt };

inline std::string to_string(EffectFamily f) {
  switch (f) {
    case EffectFamily::constant: return "constant";
    case EffectFamily::linear: return "linear";
    case EffectFamily::log: return "log";
    case EffectFamily::sqrt: return "sqrt";
  }
  return "?";
}

inline EffectFamily effect_family_from_string(const std::string& s) {
  if (s == "constant") return EffectFamily::constant;
  if (s == "linear") return EffectFamily::linear;
  if (s == "log") return EffectFamily::log;
  if (s == "sqrt") return EffectFamily::sqrt;
  throw validation_error("unknown effect family: '" + s + "'");
}

// Time basis g(t) of the family. The log family is defined for t > 0 only.
inline double effect_time_basis(EffectFamily family, double t) {
  switch (family) {
    case EffectFamily::constant: return 0.0;
    case EffectFamily::linear: return t;
    case EffectFamily::log:
      if (!(t > 0.0)) throw domain_error("log effect family undefined at t <= 0");
      return std::log(t);
    case EffectFamily::sqrt:
      if (t < 0.0) throw domain_error("sqrt effect family undefined at t < 0");
      return std::sqrt(t);
  }
  return 0.0;
}

// Effect specification, optionally carrying fitted or true coefficients.
struct EffectSpec {
  EffectFamily family = EffectFamily::constant;
  double beta0 = 0.0;
  std::optional<double> beta1;  // absent for the constant family

  int n_coefficients() const { return family == EffectFamily::constant ? 1 : 2; }

  double slope() const {
    if (family == EffectFamily::constant) return 0.0;
    if (!beta1) throw validation_error("effect family " + to_string(family) +
                                       " requires beta1");
    return *beta1;
  }

  // f(t) = beta0 + beta1*g(t)
  double log_hazard_ratio(double t) const {
    if (family == EffectFamily::constant) return beta0;
    return beta0 + slope() * effect_time_basis(family, t);
  }

  double hazard_ratio(double t) const { return std::exp(log_hazard_ratio(t)); }

  // VE(t) = 1 - HR(t)
  double vaccine_efficacy(double t) const { return 1.0 - hazard_ratio(t); }
};

inline EffectSpec make_effect(EffectFamily family, double beta0,
                              std::optional<double> beta1 = std::nullopt) {
  EffectSpec e;
  e.family = family;
  e.beta0 = beta0;
  e.beta1 = beta1;
  if (family != EffectFamily::constant && !beta1)
    throw validation_error("effect family " + to_string(family) + " requires beta1");
  return e;
}

}  // namespace vecurve
