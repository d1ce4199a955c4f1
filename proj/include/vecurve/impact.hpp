#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "vecurve/common.hpp"
#include "vecurve/trial_data.hpp"
#include "vecurve/ve_metrics.hpp"

// Vaccine-impact measures: number of cases averted per 1000 persons over the
// table's horizon, from the empirical incidence-rate difference (step
// function) or from interval AUCs times control-arm incidence, plus the
// seasonal-shift and age-averaged variants and NNV.

namespace vecurve {

enum class NCAVariant { sf, auc, auc_season, auc_age };

inline std::string to_string(NCAVariant v) {
  switch (v) {
    case NCAVariant::sf: return "sf";
    case NCAVariant::auc: return "auc";
    case NCAVariant::auc_season: return "auc_season";
    case NCAVariant::auc_age: return "auc_age";
  }
  return "?";
}

struct NCAResult {
  NCAVariant variant = NCAVariant::sf;
  std::optional<int> season_start;  // s, for the seasonal variant
  double horizon = 0.0;             // months covered by the table
  double value = 0.0;               // cases averted per 1000 persons per horizon
  std::vector<double> per_interval;
};

namespace detail {

inline void require_positive_person_time(const IncidenceInterval& iv, std::size_t k,
                                         bool need_vaccine_arm) {
  if (!(iv.t0 > 0.0))
    throw degenerate_data_error("interval " + std::to_string(k + 1) +
                                ": zero control person-time");
  if (need_vaccine_arm && !(iv.t1 > 0.0))
    throw degenerate_data_error("interval " + std::to_string(k + 1) +
                                ": zero vaccine person-time");
}

}  // namespace detail

// 1000 * sum_k [ (E0k/T0k) - (E1k/T1k) ] * dt_k
inline NCAResult nca_sf(const IncidenceTable& table) {
  validate_incidence_table(table);
  NCAResult out;
  out.variant = NCAVariant::sf;
  out.horizon = table.horizon();
  out.per_interval.reserve(table.intervals.size());
  for (std::size_t k = 0; k < table.intervals.size(); ++k) {
    const auto& iv = table.intervals[k];
    detail::require_positive_person_time(iv, k, true);
    const double ird = iv.e0 / iv.t0 - iv.e1 / iv.t1;
    const double part = 1000.0 * ird * iv.delta_time;
    out.per_interval.push_back(part);
    out.value += part;
  }
  return out;
}

// 1000 * sum_k AUC_k * (E0k/T0k) * dt_k. Only the control columns are used,
// so externally supplied control-only tables work.
inline NCAResult nca_auc(const std::vector<AUCValue>& aucs, const IncidenceTable& table) {
  validate_incidence_table(table);
  if (aucs.size() != table.intervals.size())
    throw validation_error("nca_auc: need one AUC per incidence interval");
  NCAResult out;
  out.variant = NCAVariant::auc;
  out.horizon = table.horizon();
  out.per_interval.reserve(table.intervals.size());
  for (std::size_t k = 0; k < table.intervals.size(); ++k) {
    const auto& iv = table.intervals[k];
    detail::require_positive_person_time(iv, k, false);
    const double part = 1000.0 * aucs[k].value * (iv.e0 / iv.t0) * iv.delta_time;
    out.per_interval.push_back(part);
    out.value += part;
  }
  return out;
}

namespace detail {

// Intervals of a 12-month calendar table indexed by calendar month 1..12.
inline std::vector<std::size_t> calendar_order(const IncidenceTable& table) {
  if (table.intervals.size() != 12)
    throw validation_error("seasonal NCA requires a 12-month calendar table");
  std::vector<std::size_t> by_month(12, SIZE_MAX);
  for (std::size_t k = 0; k < 12; ++k) {
    const auto& iv = table.intervals[k];
    if (!iv.calendar_index)
      throw validation_error("seasonal NCA: interval " + std::to_string(k + 1) +
                             " lacks a calendar_index");
    const std::size_t m = static_cast<std::size_t>(*iv.calendar_index) - 1;
    if (by_month[m] != SIZE_MAX)
      throw validation_error("seasonal NCA: duplicate calendar month " + std::to_string(m + 1));
    by_month[m] = k;
  }
  return by_month;
}

}  // namespace detail

// 1000 * sum_{k=1..12} AUC_k * (E0,s+k-1 / T0,s+k-1) * dt_{s+k-1}, with the
// calendar index wrapping modulo 12: AUC_k is the k-th month after
// vaccination, paired with the incidence of calendar month s+k-1.
inline NCAResult nca_auc_seasonal(const std::vector<AUCValue>& aucs,
                                  const IncidenceTable& calendar_table, int s) {
  validate_incidence_table(calendar_table);
  const auto by_month = detail::calendar_order(calendar_table);
  if (aucs.size() != 12)
    throw validation_error("seasonal NCA requires 12 monthly AUC values");
  const int s0 = ((s - 1) % 12 + 12) % 12;  // 0-based, wraps
  NCAResult out;
  out.variant = NCAVariant::auc_season;
  out.season_start = s0 + 1;
  out.horizon = calendar_table.horizon();
  out.per_interval.reserve(12);
  for (int k = 0; k < 12; ++k) {
    const auto& iv = calendar_table.intervals[by_month[static_cast<std::size_t>((s0 + k) % 12)]];
    detail::require_positive_person_time(iv, static_cast<std::size_t>((s0 + k) % 12), false);
    const double part = 1000.0 * aucs[static_cast<std::size_t>(k)].value *
                        (iv.e0 / iv.t0) * iv.delta_time;
    out.per_interval.push_back(part);
    out.value += part;
  }
  return out;
}

// Arithmetic mean of the seasonal NCA over all twelve start months.
inline NCAResult nca_auc_age(const std::vector<AUCValue>& aucs,
                             const IncidenceTable& calendar_table) {
  NCAResult out;
  out.variant = NCAVariant::auc_age;
  out.horizon = calendar_table.horizon();
  for (int s = 1; s <= 12; ++s)
    out.value += nca_auc_seasonal(aucs, calendar_table, s).value;
  out.value /= 12.0;
  return out;
}

// Seasonal NCA for every start month, in start-month order.
inline std::vector<NCAResult> nca_by_start_month(const std::vector<AUCValue>& aucs,
                                                 const IncidenceTable& calendar_table) {
  std::vector<NCAResult> out;
  out.reserve(12);
  for (int s = 1; s <= 12; ++s) out.push_back(nca_auc_seasonal(aucs, calendar_table, s));
  return out;
}

// NNV = 1000 / NCA: subjects to vaccinate per case prevented, under the
// per-1000-persons NCA convention. Reports scale by 1000 (subjects per 1000
// cases prevented) because NCA > 1000 makes per-case NNV fractional for
// repeatable events.
inline double nnv(const NCAResult& nca) {
  if (!(nca.value > 0.0))
    throw numeric_error("NNV undefined for non-positive NCA");
  return 1000.0 / nca.value;
}

}  // namespace vecurve
