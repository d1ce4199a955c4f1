#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include "vecurve/common.hpp"

// Recurrent-event trial data model. Time is measured in months since
// analysis time zero; a subject is observed on [0, censor_time] and may
// experience any number of events in (0, censor_time].

namespace vecurve {

struct Subject {
  std::string id;
  int arm = 0;  // 0 = control, 1 = vaccine
  std::string stratum = "1";
  double censor_time = 0.0;
  std::vector<double> event_times;  // strictly increasing, in (0, censor_time]
  std::optional<int> vaccination_month;  // calendar month 1..12

  bool operator==(const Subject&) const = default;
};

struct TrialDataset {
  std::vector<Subject> subjects;
  std::string time_unit = "months";

  bool operator==(const TrialDataset&) const = default;
};

// Long-format view of the risk process: one row per at-risk interval
// (start, stop], status 1 if an event occurred at stop.
struct CountingProcessRecord {
  std::string subject_id;
  double start = 0.0;
  double stop = 0.0;
  int status = 0;
  int arm = 0;
  std::string stratum = "1";
  std::optional<int> vaccination_month;
};

struct IncidenceInterval {
  double delta_time = 0.0;  // interval duration (months)
  double e0 = 0.0;          // control-arm events
  double t0 = 0.0;          // control-arm person-time
  double e1 = 0.0;          // vaccine-arm events
  double t1 = 0.0;          // vaccine-arm person-time
  std::optional<int> calendar_index;  // calendar month 1..12
};

struct IncidenceTable {
  std::vector<IncidenceInterval> intervals;

  double horizon() const {
    double h = 0.0;
    for (const auto& iv : intervals) h += iv.delta_time;
    return h;
  }
};

inline void validate_subject(const Subject& s) {
  if (!(s.censor_time > 0.0) || !std::isfinite(s.censor_time))
    throw validation_error("subject '" + s.id + "': censor_time must be finite and > 0");
  if (s.arm != 0 && s.arm != 1)
    throw validation_error("subject '" + s.id + "': arm must be 0 or 1");
  double prev = 0.0;
  for (double t : s.event_times) {
    if (!std::isfinite(t)) throw validation_error("subject '" + s.id + "': non-finite event time");
    if (!(t > prev))
      throw validation_error("subject '" + s.id + "': event times must be strictly increasing and > 0");
    if (t > s.censor_time)
      throw validation_error("subject '" + s.id + "': event time exceeds censor_time");
    prev = t;
  }
  if (s.vaccination_month && (*s.vaccination_month < 1 || *s.vaccination_month > 12))
    throw validation_error("subject '" + s.id + "': vaccination_month must be in 1..12");
}

inline void validate_dataset(const TrialDataset& ds) {
  std::unordered_set<std::string> ids;
  for (const auto& s : ds.subjects) {
    validate_subject(s);
    if (!ids.insert(s.id).second)
      throw validation_error("duplicate subject id '" + s.id + "'");
  }
}

// Builds a dataset from counting-process rows. Rows of one subject must
// partition [0, censor_time]; rows may arrive in any order.
inline TrialDataset ingest_counting_process(const std::vector<CountingProcessRecord>& rows) {
  // Group rows by subject, preserving first-appearance order of subjects.
  std::vector<std::string> order;
  std::map<std::string, std::vector<CountingProcessRecord>> groups;
  for (const auto& r : rows) {
    if (!std::isfinite(r.start) || !std::isfinite(r.stop))
      throw validation_error("subject '" + r.subject_id + "': non-finite interval bounds");
    if (r.arm != 0 && r.arm != 1)
      throw validation_error("subject '" + r.subject_id + "': arm must be 0 or 1");
    if (r.status != 0 && r.status != 1)
      throw validation_error("subject '" + r.subject_id + "': status must be 0 or 1");
    auto [it, inserted] = groups.try_emplace(r.subject_id);
    if (inserted) order.push_back(r.subject_id);
    it->second.push_back(r);
  }

  TrialDataset ds;
  ds.subjects.reserve(order.size());
  for (const auto& id : order) {
    auto& recs = groups[id];
    std::sort(recs.begin(), recs.end(),
              [](const auto& a, const auto& b) { return a.start < b.start; });
    Subject s;
    s.id = id;
    s.arm = recs.front().arm;
    s.stratum = recs.front().stratum;
    s.vaccination_month = recs.front().vaccination_month;
    double cursor = 0.0;
    for (const auto& r : recs) {
      if (r.arm != s.arm || r.stratum != s.stratum)
        throw validation_error("subject '" + id + "': inconsistent arm or stratum across records");
      if (r.vaccination_month != s.vaccination_month)
        throw validation_error("subject '" + id + "': inconsistent vaccination_month across records");
      if (!(r.start < r.stop))
        throw structural_error("subject '" + id + "': record must have start < stop");
      if (r.start < cursor)
        throw structural_error("subject '" + id + "': overlapping intervals");
      if (r.start > cursor)
        throw structural_error("subject '" + id + "': gap in intervals");
      if (r.status == 1) s.event_times.push_back(r.stop);
      cursor = r.stop;
    }
    s.censor_time = cursor;
    ds.subjects.push_back(std::move(s));
  }
  validate_dataset(ds);
  return ds;
}

// Inverse of ingest_counting_process up to record splitting at event times.
inline std::vector<CountingProcessRecord> to_counting_process(const TrialDataset& ds) {
  std::vector<CountingProcessRecord> rows;
  for (const auto& s : ds.subjects) {
    double cursor = 0.0;
    for (double t : s.event_times) {
      rows.push_back({s.id, cursor, t, 1, s.arm, s.stratum, s.vaccination_month});
      cursor = t;
    }
    if (cursor < s.censor_time)
      rows.push_back({s.id, cursor, s.censor_time, 0, s.arm, s.stratum, s.vaccination_month});
  }
  return rows;
}

// Interval boundaries from consecutive durations, starting at t = 0.
inline std::vector<double> interval_boundaries(const std::vector<double>& delta_times) {
  if (delta_times.empty()) throw validation_error("delta_times must be non-empty");
  std::vector<double> bounds;
  bounds.reserve(delta_times.size() + 1);
  bounds.push_back(0.0);
  for (double d : delta_times) {
    if (!(d > 0.0) || !std::isfinite(d))
      throw validation_error("delta_times must be finite and > 0");
    bounds.push_back(bounds.back() + d);
  }
  return bounds;
}

// Events and person-time per interval and arm. Interval k covers
// (lower_k, upper_k]; an event exactly on a boundary belongs to the earlier
// interval. Person-time in interval k is max(0, min(C_i, upper_k) - lower_k).
inline IncidenceTable tabulate_incidence(const TrialDataset& ds,
                                         const std::vector<double>& delta_times) {
  const auto bounds = interval_boundaries(delta_times);
  IncidenceTable table;
  table.intervals.resize(delta_times.size());
  for (std::size_t k = 0; k < delta_times.size(); ++k)
    table.intervals[k].delta_time = delta_times[k];

  for (const auto& s : ds.subjects) {
    for (std::size_t k = 0; k < delta_times.size(); ++k) {
      auto& iv = table.intervals[k];
      const double lower = bounds[k], upper = bounds[k + 1];
      const double pt = std::max(0.0, std::min(s.censor_time, upper) - lower);
      (s.arm == 0 ? iv.t0 : iv.t1) += pt;
      for (double t : s.event_times) {
        if (t > lower && t <= upper) (s.arm == 0 ? iv.e0 : iv.e1) += 1.0;
      }
    }
  }
  return table;
}

// Incidence re-indexed by calendar month. A subject vaccinated in calendar
// month m contributes its k-th analysis month (k = 1..12) to calendar month
// ((m + k - 2) mod 12) + 1. Only the first 12 analysis months count, so the
// table covers exactly one year.
inline IncidenceTable tabulate_calendar_incidence(const TrialDataset& ds) {
  for (const auto& s : ds.subjects)
    if (!s.vaccination_month)
      throw validation_error("subject '" + s.id + "': vaccination_month required for calendar tabulation");
  bool any_control = std::any_of(ds.subjects.begin(), ds.subjects.end(),
                                 [](const Subject& s) { return s.arm == 0; });
  if (!any_control)
    throw validation_error("calendar tabulation requires a non-empty control arm");

  IncidenceTable table;
  table.intervals.resize(12);
  for (int m = 0; m < 12; ++m) {
    table.intervals[m].delta_time = 1.0;
    table.intervals[m].calendar_index = m + 1;
  }
  for (const auto& s : ds.subjects) {
    const int m = *s.vaccination_month;
    for (int k = 1; k <= 12; ++k) {
      auto& iv = table.intervals[(m + k - 2) % 12];
      const double lower = k - 1.0, upper = k;
      const double pt = std::max(0.0, std::min(s.censor_time, upper) - lower);
      (s.arm == 0 ? iv.t0 : iv.t1) += pt;
      for (double t : s.event_times) {
        if (t > lower && t <= upper) (s.arm == 0 ? iv.e0 : iv.e1) += 1.0;
      }
    }
  }
  return table;
}

inline void validate_incidence_table(const IncidenceTable& table) {
  for (std::size_t k = 0; k < table.intervals.size(); ++k) {
    const auto& iv = table.intervals[k];
    if (!(iv.delta_time > 0.0))
      throw validation_error("incidence interval " + std::to_string(k + 1) + ": delta_time must be > 0");
    if (iv.e0 < 0 || iv.e1 < 0 || iv.t0 < 0 || iv.t1 < 0)
      throw validation_error("incidence interval " + std::to_string(k + 1) + ": counts and person-time must be >= 0");
    if (iv.t0 == 0.0 && iv.e0 != 0.0)
      throw validation_error("incidence interval " + std::to_string(k + 1) + ": events with zero person-time (control)");
    if (iv.t1 == 0.0 && iv.e1 != 0.0)
      throw validation_error("incidence interval " + std::to_string(k + 1) + ": events with zero person-time (vaccine)");
    if (iv.calendar_index && (*iv.calendar_index < 1 || *iv.calendar_index > 12))
      throw validation_error("incidence interval " + std::to_string(k + 1) + ": calendar_index must be in 1..12");
  }
}

}  // namespace vecurve
