#pragma once

// Frozen reference fixtures shared by the unit and acceptance suites: a
// twelve-month incidence table (rates per 1000 person-months) with the
// published per-month cases-averted columns, and the log-family curve the
// AUC column was derived from.

#include <vector>

#include "vecurve/effect.hpp"
#include "vecurve/trial_data.hpp"

namespace testutil {

struct MonthlyReference {
  vecurve::IncidenceTable table;          // e0/t0 in events per person-month
  vecurve::EffectSpec curve;              // log family, beta0 = -1.66, beta1 = 0.525
  std::vector<double> auc_k;              // published monthly AUC column
  std::vector<int> nca_sf_k;              // published monthly step-function column
  std::vector<int> nca_auc_k;             // published monthly AUC-based column
  int total_sf = 0;
  int total_auc = 0;
};

inline MonthlyReference monthly_reference() {
  MonthlyReference ref;
  const std::vector<double> inc1 = {7.7,   0.0,   5.2,   7.9,   48.4,  140.2,
                                    312.7, 458.5, 375.7, 215.0, 136.4, 66.9};
  const std::vector<double> inc0 = {23.4,  10.2,  5.1,   51.9,  192.3, 389.6,
                                    666.7, 563.5, 547.5, 377.1, 213.8, 98.8};
  for (int k = 0; k < 12; ++k) {
    vecurve::IncidenceInterval iv;
    iv.delta_time = 1.0;
    iv.calendar_index = k + 1;
    iv.e0 = inc0[static_cast<std::size_t>(k)];
    iv.t0 = 1000.0;
    iv.e1 = inc1[static_cast<std::size_t>(k)];
    iv.t1 = 1000.0;
    ref.table.intervals.push_back(iv);
  }
  ref.curve = vecurve::make_effect(vecurve::EffectFamily::log, -1.66, 0.525);
  ref.auc_k = {0.875, 0.765, 0.692, 0.632, 0.580, 0.533,
               0.490, 0.450, 0.413, 0.377, 0.344, 0.312};
  ref.nca_sf_k = {16, 10, 0, 44, 144, 249, 354, 105, 172, 162, 77, 32};
  ref.nca_auc_k = {20, 8, 4, 33, 111, 208, 327, 254, 226, 142, 73, 31};
  ref.total_sf = 1365;
  ref.total_auc = 1437;
  return ref;
}

}  // namespace testutil
