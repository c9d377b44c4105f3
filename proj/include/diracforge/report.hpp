#pragma once

// Machine-readable run reports. Every record carries a provenance tag and
// (unless report-only) a tolerance; the CSV column contract is
//
//   check_name,equation_ref,value,reference,provenance,tolerance,abs_error,pass
//
// Numbers are printed with %.17g so repeated runs are byte-identical.

#include <string>
#include <utility>
#include <vector>

namespace df {

struct Record {
  std::string name;
  std::string equation_ref;  // identity slug, e.g. "stype-action-identity"
  double value = 0.0;
  double reference = 0.0;
  std::string provenance;  // paper | derived | trivial | measured
  double tolerance = -1.0;  // < 0: report-only (always passes)
  double abs_error = 0.0;
  bool pass = true;
};

Record make_check(std::string name, std::string eq, double value,
                  double reference, std::string provenance, double tolerance);
Record make_info(std::string name, std::string eq, double value,
                 double reference, std::string provenance);

struct RunReport {
  std::string scenario;
  std::vector<Record> records;
  std::vector<std::pair<std::string, std::string>> environment;
  std::string config_echo;

  void add(Record r) { records.push_back(std::move(r)); }
  bool all_passed() const;
  std::size_t failed_count() const;
};

std::string format_double(double v);
// concise %g formatting for labels embedded in record names
std::string format_label(double v);
std::string to_csv(const RunReport& rep);
std::string to_json(const RunReport& rep);

// writes <dir>/<scenario>-report.{csv,json}; format: "csv", "json", "both";
// returns the written paths
std::vector<std::string> write_report_files(const RunReport& rep,
                                            const std::string& dir,
                                            const std::string& format);

}  // namespace df
