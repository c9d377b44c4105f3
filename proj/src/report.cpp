#include "diracforge/report.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace df {

Record make_check(std::string name, std::string eq, double value,
                  double reference, std::string provenance,
                  double tolerance) {
  Record r;
  r.name = std::move(name);
  r.equation_ref = std::move(eq);
  r.value = value;
  r.reference = reference;
  r.provenance = std::move(provenance);
  r.tolerance = tolerance;
  r.abs_error = std::abs(value - reference);
  r.pass = r.abs_error < tolerance;
  return r;
}

Record make_info(std::string name, std::string eq, double value,
                 double reference, std::string provenance) {
  Record r;
  r.name = std::move(name);
  r.equation_ref = std::move(eq);
  r.value = value;
  r.reference = reference;
  r.provenance = std::move(provenance);
  r.tolerance = -1.0;
  r.abs_error = std::abs(value - reference);
  r.pass = true;
  return r;
}

bool RunReport::all_passed() const { return failed_count() == 0; }

std::size_t RunReport::failed_count() const {
  std::size_t n = 0;
  for (const Record& r : records)
    if (!r.pass) ++n;
  return n;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string format_label(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

std::string to_csv(const RunReport& rep) {
  std::ostringstream os;
  os << "# scenario: " << rep.scenario << "\n";
  for (const auto& [k, v] : rep.environment)
    os << "# " << k << ": " << v << "\n";
  os << "check_name,equation_ref,value,reference,provenance,tolerance,"
        "abs_error,pass\n";
  for (const Record& r : rep.records) {
    os << r.name << ',' << r.equation_ref << ',' << format_double(r.value)
       << ',' << format_double(r.reference) << ',' << r.provenance << ','
       << (r.tolerance < 0 ? std::string("none") : format_double(r.tolerance))
       << ',' << format_double(r.abs_error) << ','
       << (r.pass ? "true" : "false") << '\n';
  }
  return os.str();
}

std::string to_json(const RunReport& rep) {
  nlohmann::ordered_json j;
  j["scenario"] = rep.scenario;
  nlohmann::ordered_json env;
  for (const auto& [k, v] : rep.environment) env[k] = v;
  j["environment"] = env;
  j["records"] = nlohmann::ordered_json::array();
  for (const Record& r : rep.records) {
    nlohmann::ordered_json rec;
    rec["check_name"] = r.name;
    rec["equation_ref"] = r.equation_ref;
    rec["value"] = format_double(r.value);
    rec["reference"] = format_double(r.reference);
    rec["provenance"] = r.provenance;
    rec["tolerance"] =
        r.tolerance < 0 ? std::string("none") : format_double(r.tolerance);
    rec["abs_error"] = format_double(r.abs_error);
    rec["pass"] = r.pass;
    j["records"].push_back(rec);
  }
  j["failed"] = rep.failed_count();
  j["config"] = rep.config_echo;
  return j.dump(2) + "\n";
}

std::vector<std::string> write_report_files(const RunReport& rep,
                                            const std::string& dir,
                                            const std::string& format) {
  std::filesystem::create_directories(dir);
  std::vector<std::string> written;
  auto write = [&](const std::string& ext, const std::string& body) {
    const std::string path =
        (std::filesystem::path(dir) / (rep.scenario + "-report." + ext))
            .string();
    std::ofstream out(path, std::ios::binary);
    out << body;
    written.push_back(path);
  };
  if (format == "csv" || format == "both") write("csv", to_csv(rep));
  if (format == "json" || format == "both") write("json", to_json(rep));
  return written;
}

}  // namespace df
