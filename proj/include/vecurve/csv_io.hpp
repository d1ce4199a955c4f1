#pragma once

#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "vecurve/common.hpp"
#include "vecurve/trial_data.hpp"

// CSV formats:
//   events:    subject_id,arm,stratum,start,stop,status[,vaccination_month]
//   incidence: calendar_index,delta_time,e0,t0,e1,t1   (calendar_index and
//              the vaccine columns may be empty)
// Lines starting with '#' are treated as comments and skipped.

namespace vecurve {
namespace csv {

inline std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  fields.push_back(cur);
  return fields;
}

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

inline double parse_double(const std::string& s, const std::string& what, int line_no) {
  const std::string t = trim(s);
  if (t.empty())
    throw validation_error("line " + std::to_string(line_no) + ": empty " + what);
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(t.c_str(), &end);
  if (end != t.c_str() + t.size() || errno == ERANGE || !std::isfinite(v))
    throw validation_error("line " + std::to_string(line_no) + ": bad " + what + " '" + t + "'");
  return v;
}

inline int parse_int(const std::string& s, const std::string& what, int line_no) {
  const double v = parse_double(s, what, line_no);
  const int i = static_cast<int>(v);
  if (static_cast<double>(i) != v)
    throw validation_error("line " + std::to_string(line_no) + ": " + what + " must be an integer");
  return i;
}

}  // namespace csv

inline std::vector<CountingProcessRecord> read_events_csv(std::istream& in) {
  std::string line;
  int line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    header = csv::split_line(line);
    break;
  }
  if (header.empty()) throw validation_error("events CSV: missing header");
  const std::vector<std::string> base = {"subject_id", "arm", "stratum", "start", "stop", "status"};
  bool has_vm = header.size() == 7 && csv::trim(header[6]) == "vaccination_month";
  if (header.size() != base.size() && !has_vm)
    throw validation_error("events CSV: expected header subject_id,arm,stratum,start,stop,status[,vaccination_month]");
  for (std::size_t i = 0; i < base.size(); ++i)
    if (csv::trim(header[i]) != base[i])
      throw validation_error("events CSV: unexpected column '" + csv::trim(header[i]) +
                             "', expected '" + base[i] + "'");

  std::vector<CountingProcessRecord> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    const auto f = csv::split_line(line);
    if (f.size() != header.size())
      throw validation_error("line " + std::to_string(line_no) + ": expected " +
                             std::to_string(header.size()) + " fields, got " +
                             std::to_string(f.size()));
    CountingProcessRecord r;
    r.subject_id = csv::trim(f[0]);
    if (r.subject_id.empty())
      throw validation_error("line " + std::to_string(line_no) + ": empty subject_id");
    r.arm = csv::parse_int(f[1], "arm", line_no);
    r.stratum = csv::trim(f[2]);
    r.start = csv::parse_double(f[3], "start", line_no);
    r.stop = csv::parse_double(f[4], "stop", line_no);
    r.status = csv::parse_int(f[5], "status", line_no);
    if (has_vm && !csv::trim(f[6]).empty())
      r.vaccination_month = csv::parse_int(f[6], "vaccination_month", line_no);
    rows.push_back(std::move(r));
  }
  return rows;
}

inline TrialDataset read_events_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw validation_error("cannot open events CSV '" + path + "'");
  return ingest_counting_process(read_events_csv(in));
}

inline void write_events_csv(std::ostream& out, const TrialDataset& ds,
                             const std::string& comment = "") {
  if (!comment.empty()) out << "# " << comment << "\n";
  const auto rows = to_counting_process(ds);
  bool has_vm = false;
  for (const auto& r : rows) has_vm = has_vm || r.vaccination_month.has_value();
  out << "subject_id,arm,stratum,start,stop,status" << (has_vm ? ",vaccination_month" : "") << "\n";
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (const auto& r : rows) {
    out << r.subject_id << ',' << r.arm << ',' << r.stratum << ',' << r.start << ','
        << r.stop << ',' << r.status;
    if (has_vm) {
      out << ',';
      if (r.vaccination_month) out << *r.vaccination_month;
    }
    out << "\n";
  }
}

inline IncidenceTable read_incidence_csv(std::istream& in) {
  std::string line;
  int line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    header = csv::split_line(line);
    break;
  }
  const std::vector<std::string> expect = {"calendar_index", "delta_time", "e0", "t0", "e1", "t1"};
  if (header.size() != expect.size())
    throw validation_error("incidence CSV: expected header calendar_index,delta_time,e0,t0,e1,t1");
  for (std::size_t i = 0; i < expect.size(); ++i)
    if (csv::trim(header[i]) != expect[i])
      throw validation_error("incidence CSV: unexpected column '" + csv::trim(header[i]) + "'");

  IncidenceTable table;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    const auto f = csv::split_line(line);
    if (f.size() != expect.size())
      throw validation_error("line " + std::to_string(line_no) + ": expected 6 fields");
    IncidenceInterval iv;
    if (!csv::trim(f[0]).empty())
      iv.calendar_index = csv::parse_int(f[0], "calendar_index", line_no);
    iv.delta_time = csv::parse_double(f[1], "delta_time", line_no);
    iv.e0 = csv::parse_double(f[2], "e0", line_no);
    iv.t0 = csv::parse_double(f[3], "t0", line_no);
    const bool vac_empty = csv::trim(f[4]).empty() && csv::trim(f[5]).empty();
    if (!vac_empty) {
      iv.e1 = csv::parse_double(f[4], "e1", line_no);
      iv.t1 = csv::parse_double(f[5], "t1", line_no);
    }
    table.intervals.push_back(iv);
  }
  validate_incidence_table(table);
  return table;
}

inline IncidenceTable read_incidence_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw validation_error("cannot open incidence CSV '" + path + "'");
  return read_incidence_csv(in);
}

inline void write_incidence_csv(std::ostream& out, const IncidenceTable& table,
                                const std::string& comment = "") {
  if (!comment.empty()) out << "# " << comment << "\n";
  out << "calendar_index,delta_time,e0,t0,e1,t1\n";
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (const auto& iv : table.intervals) {
    if (iv.calendar_index) out << *iv.calendar_index;
    out << ',' << iv.delta_time << ',' << iv.e0 << ',' << iv.t0 << ',' << iv.e1 << ','
        << iv.t1 << "\n";
  }
}

}  // namespace vecurve
