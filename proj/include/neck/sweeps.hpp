#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "neck/geometry.hpp"

namespace neck {

inline constexpr const char* kToolVersion = "neckstokes 1.0.0";
inline constexpr const char* kReportSchema = "neck-rate-report/1";

struct Tolerances {
  double quadrature = 1e-10;
  double residual_slope = 0.25;
  double blowup_slope = 0.05;
  double envelope_slope = 0.1;
};

struct RunConfig {
  nlohmann::json profile_spec = "sym-quadratic";  // name, file path, or inline object
  std::vector<int> alphas{1, 2, 3};
  int m_max = 2;
  std::vector<double> eps{1e-2, 3e-3, 1e-3, 3e-4, 1e-4};
  int n1 = 256;
  int n2 = 64;
  Tolerances tol;
  std::string out_dir = ".";
  std::vector<std::string> formats{"csv"};
};

// Parses and validates a config document; throws ConfigError naming the field.
RunConfig config_from_json(const nlohmann::json& j);
RunConfig load_config(const std::string& path);
nlohmann::json config_to_json(const RunConfig& c);
// Checks eps ordering/span and the derivative cap; throws InputError.
void validate_config(const RunConfig& c);
NeckProfile resolve_profile(const nlohmann::json& spec, double eps);

struct ReportRow {
  std::string check;   // e.g. "residual-decay"
  std::string anchor;  // what the row verifies, or "plumbing"
  std::string profile_id;
  int alpha = 0;
  int m = 0;
  int s = 0;
  std::string window;
  double slope = 0.0;  // measured value (a slope, or an error size for structural rows)
  double predicted = 0.0;
  double tolerance = 0.0;
  bool pass = false;

  bool operator==(const ReportRow& o) const;
};

struct RateReport {
  std::string version = kToolVersion;
  std::string config_hash;
  std::string generated;  // UTC timestamp; not part of the stability contract
  std::vector<ReportRow> rows;

  bool all_pass() const;
  bool operator==(const RateReport& o) const;  // timestamp ignored
};

// Deterministic: rows sorted by (check, profile, alpha, m, s, window).
RateReport run(const RunConfig& config);

std::string config_hash(const RunConfig& c);  // FNV-1a over the canonical config JSON

// CSV columns: check,anchor,profile_id,alpha,m,s,window,slope,predicted,tolerance,pass
std::string report_csv(const RateReport& r);
nlohmann::json report_json(const RateReport& r);
RateReport report_from_json(const nlohmann::json& j);
RateReport parse_report(const std::string& text);  // JSON text
// Writes report.<fmt> under dir; returns the path.
std::string emit(const RateReport& r, const std::string& format, const std::string& dir);

}  // namespace neck
