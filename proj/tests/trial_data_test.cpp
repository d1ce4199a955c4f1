#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <random>

#include "test_helpers.hpp"
#include "vecurve/trial_data.hpp"

using namespace vecurve;

namespace {

Subject make_subject(std::string id, int arm, double censor,
                     std::vector<double> events, std::optional<int> vm = std::nullopt) {
  Subject s;
  s.id = std::move(id);
  s.arm = arm;
  s.censor_time = censor;
  s.event_times = std::move(events);
  s.vaccination_month = vm;
  return s;
}

}  // namespace

TEST_CASE("ingest builds subjects from counting-process rows", "[trial_data]") {
  std::vector<CountingProcessRecord> rows = {
      {"s1", 0.0, 5.0, 1, 1, "1", {}},
      {"s1", 5.0, 12.0, 0, 1, "1", {}},
  };
  const TrialDataset ds = ingest_counting_process(rows);
  REQUIRE(ds.subjects.size() == 1);
  CHECK(ds.subjects[0].event_times == std::vector<double>{5.0});
  CHECK(ds.subjects[0].censor_time == 12.0);
  CHECK(ds.subjects[0].arm == 1);
}

TEST_CASE("ingest of an empty stream gives an empty dataset", "[trial_data]") {
  CHECK(ingest_counting_process({}).subjects.empty());
}

TEST_CASE("ingest rejects structural problems", "[trial_data]") {
  SECTION("overlap") {
    std::vector<CountingProcessRecord> rows = {
        {"s1", 0.0, 5.0, 1, 0, "1", {}},
        {"s1", 4.0, 12.0, 0, 0, "1", {}},
    };
    CHECK_THROWS_AS(ingest_counting_process(rows), structural_error);
  }
  SECTION("gap") {
    std::vector<CountingProcessRecord> rows = {
        {"s1", 0.0, 5.0, 1, 0, "1", {}},
        {"s1", 6.0, 12.0, 0, 0, "1", {}},
    };
    CHECK_THROWS_AS(ingest_counting_process(rows), structural_error);
  }
  SECTION("reversed interval") {
    std::vector<CountingProcessRecord> rows = {{"s1", 5.0, 5.0, 0, 0, "1", {}}};
    CHECK_THROWS_AS(ingest_counting_process(rows), structural_error);
  }
  SECTION("bad arm") {
    std::vector<CountingProcessRecord> rows = {{"s1", 0.0, 5.0, 0, 2, "1", {}}};
    CHECK_THROWS_AS(ingest_counting_process(rows), validation_error);
  }
  SECTION("non-finite time") {
    std::vector<CountingProcessRecord> rows = {
        {"s1", 0.0, std::numeric_limits<double>::quiet_NaN(), 0, 0, "1", {}}};
    CHECK_THROWS_AS(ingest_counting_process(rows), validation_error);
  }
}

TEST_CASE("to_counting_process splits at event times", "[trial_data]") {
  TrialDataset ds;
  ds.subjects = {make_subject("a", 0, 10.0, {3.0, 7.0})};
  const auto rows = to_counting_process(ds);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].start == 0.0);
  CHECK(rows[0].stop == 3.0);
  CHECK(rows[0].status == 1);
  CHECK(rows[1].start == 3.0);
  CHECK(rows[1].stop == 7.0);
  CHECK(rows[1].status == 1);
  CHECK(rows[2].start == 7.0);
  CHECK(rows[2].stop == 10.0);
  CHECK(rows[2].status == 0);
}

TEST_CASE("to_counting_process without events emits one censoring record", "[trial_data]") {
  TrialDataset ds;
  ds.subjects = {make_subject("a", 1, 12.0, {})};
  const auto rows = to_counting_process(ds);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].status == 0);
  CHECK(rows[0].stop == 12.0);
}

TEST_CASE("counting-process round trip is the identity", "[trial_data]") {
  const TrialDataset ds = testutil::random_fixture(50, 20240601, 0.3, 0.15, 2);
  CHECK(ingest_counting_process(to_counting_process(ds)) == ds);
}

TEST_CASE("tabulate_incidence computes person-time and counts", "[trial_data]") {
  const std::vector<double> quarters{3.0, 3.0, 3.0, 3.0};

  SECTION("full follow-up") {
    TrialDataset ds;
    ds.subjects = {make_subject("a", 0, 12.0, {})};
    const auto table = tabulate_incidence(ds, quarters);
    for (const auto& iv : table.intervals) {
      CHECK(iv.t0 == 3.0);
      CHECK(iv.e0 == 0.0);
      CHECK(iv.t1 == 0.0);
    }
  }
  SECTION("truncated follow-up") {
    TrialDataset ds;
    ds.subjects = {make_subject("a", 0, 10.0, {})};
    const auto table = tabulate_incidence(ds, quarters);
    CHECK(table.intervals[0].t0 == 3.0);
    CHECK(table.intervals[1].t0 == 3.0);
    CHECK(table.intervals[2].t0 == 3.0);
    CHECK(table.intervals[3].t0 == 1.0);
  }
  SECTION("boundary event goes to the earlier interval") {
    TrialDataset ds;
    ds.subjects = {make_subject("a", 1, 12.0, {3.0, 3.5})};
    const auto table = tabulate_incidence(ds, quarters);
    CHECK(table.intervals[0].e1 == 1.0);
    CHECK(table.intervals[1].e1 == 1.0);
  }
  SECTION("empty delta_times rejected") {
    TrialDataset ds;
    ds.subjects = {make_subject("a", 0, 12.0, {})};
    CHECK_THROWS_AS(tabulate_incidence(ds, {}), validation_error);
  }
}

TEST_CASE("tabulation conserves person-time and events", "[trial_data]") {
  // censor times on a 1/64 grid keep all person-time sums exact in binary
  TrialDataset ds = testutil::random_fixture(80, 77, 0.25, 0.12, 1, 12.0);
  for (auto& s : ds.subjects) s.censor_time = std::ceil(s.censor_time * 64.0) / 64.0;
  const std::vector<double> deltas{3.0, 3.0, 3.0, 3.0};
  const double horizon = 12.0;
  const auto table = tabulate_incidence(ds, deltas);

  double t0 = 0.0, t1 = 0.0, e0 = 0.0, e1 = 0.0;
  for (const auto& iv : table.intervals) {
    t0 += iv.t0;
    t1 += iv.t1;
    e0 += iv.e0;
    e1 += iv.e1;
  }
  double want_t0 = 0.0, want_t1 = 0.0, want_e0 = 0.0, want_e1 = 0.0;
  for (const auto& s : ds.subjects) {
    (s.arm == 0 ? want_t0 : want_t1) += std::min(s.censor_time, horizon);
    for (double t : s.event_times)
      if (t <= horizon) (s.arm == 0 ? want_e0 : want_e1) += 1.0;
  }
  CHECK(t0 == want_t0);
  CHECK(t1 == want_t1);
  CHECK(e0 == want_e0);
  CHECK(e1 == want_e1);
}

TEST_CASE("tabulate_incidence is invariant under subject order", "[trial_data]") {
  TrialDataset ds = testutil::random_fixture(40, 5, 0.3, 0.2);
  for (auto& s : ds.subjects) s.censor_time = std::ceil(s.censor_time * 64.0) / 64.0;
  const auto before = tabulate_incidence(ds, {4.0, 4.0, 4.0});
  std::mt19937 g(99);
  std::shuffle(ds.subjects.begin(), ds.subjects.end(), g);
  const auto after = tabulate_incidence(ds, {4.0, 4.0, 4.0});
  for (std::size_t k = 0; k < before.intervals.size(); ++k) {
    CHECK(before.intervals[k].e0 == after.intervals[k].e0);
    CHECK(before.intervals[k].t0 == after.intervals[k].t0);
    CHECK(before.intervals[k].e1 == after.intervals[k].e1);
    CHECK(before.intervals[k].t1 == after.intervals[k].t1);
  }
}

TEST_CASE("calendar tabulation shifts analysis months", "[trial_data]") {
  SECTION("vaccination in month 1 is the identity") {
    TrialDataset ds;
    ds.subjects = {make_subject("a", 0, 12.0, {0.5, 4.2}, 1)};
    const auto cal = tabulate_calendar_incidence(ds);
    const auto plain = tabulate_incidence(ds, std::vector<double>(12, 1.0));
    for (int m = 0; m < 12; ++m) {
      CHECK(cal.intervals[m].calendar_index == m + 1);
      CHECK(cal.intervals[m].e0 == plain.intervals[m].e0);
      CHECK(cal.intervals[m].t0 == plain.intervals[m].t0);
    }
  }
  SECTION("vaccination in month 12 wraps to month 1") {
    TrialDataset ds;
    ds.subjects = {make_subject("a", 0, 12.0, {0.5, 1.5}, 12)};
    const auto cal = tabulate_calendar_incidence(ds);
    CHECK(cal.intervals[11].e0 == 1.0);  // first analysis month -> December
    CHECK(cal.intervals[0].e0 == 1.0);   // second analysis month -> January
  }
  SECTION("missing vaccination month is rejected") {
    TrialDataset ds;
    ds.subjects = {make_subject("a", 0, 12.0, {})};
    CHECK_THROWS_AS(tabulate_calendar_incidence(ds), validation_error);
  }
  SECTION("control arm required") {
    TrialDataset ds;
    ds.subjects = {make_subject("a", 1, 12.0, {}, 3)};
    CHECK_THROWS_AS(tabulate_calendar_incidence(ds), validation_error);
  }
}

TEST_CASE("calendar incidence is flat for uniform vaccination and constant hazard",
          "[trial_data]") {
  // Symmetry oracle: spreading vaccination months uniformly over the year
  // under a constant hazard must give equal calendar incidences up to Monte
  // Carlo noise.
  const std::size_t n = 6000;
  const double rate = 0.15;
  TrialDataset ds;
  ds.subjects.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Xoshiro256pp rng(derive_stream(404, i));
    Subject s;
    s.id = "u" + std::to_string(i);
    s.arm = 0;
    s.censor_time = 12.0;
    s.vaccination_month = static_cast<int>(i % 12) + 1;
    double t = 0.0;
    while ((t += rng.exponential(rate)) <= 12.0) s.event_times.push_back(t);
    ds.subjects.push_back(std::move(s));
  }
  const auto cal = tabulate_calendar_incidence(ds);
  // Each calendar month holds n person-months, so the incidence-rate MC
  // standard error is sqrt(rate/n).
  const double se = std::sqrt(rate / static_cast<double>(n));
  for (const auto& iv : cal.intervals) {
    CHECK(iv.t0 == static_cast<double>(n));
    CHECK(std::abs(iv.e0 / iv.t0 - rate) < 4.0 * se);
  }
}

TEST_CASE("subject and dataset invariants are enforced", "[trial_data]") {
  CHECK_THROWS_AS(validate_subject(make_subject("a", 0, 0.0, {})), validation_error);
  CHECK_THROWS_AS(validate_subject(make_subject("a", 0, 5.0, {2.0, 2.0})), validation_error);
  CHECK_THROWS_AS(validate_subject(make_subject("a", 0, 5.0, {6.0})), validation_error);
  CHECK_THROWS_AS(validate_subject(make_subject("a", 3, 5.0, {})), validation_error);

  TrialDataset dup;
  dup.subjects = {make_subject("a", 0, 5.0, {}), make_subject("a", 1, 5.0, {})};
  CHECK_THROWS_AS(validate_dataset(dup), validation_error);
}
