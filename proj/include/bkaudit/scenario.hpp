#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "bkaudit/quad.hpp"
#include "json.hpp"

namespace bkaudit {

using Json = nlohmann::json;  // std::map backed: keys serialize sorted

inline constexpr int kSchemaVersion = 1;

struct ReparamDecl {
  std::string id;
  std::string diffeo;  // registry id
  std::string space;   // "data" or "model"
  int dim = 0;         // 0: taken from the default forward model
};

// One golden comparison. Exactly one of: value with tol and/or rel_tol, or
// min and/or max bounds. All numbers are decimal strings.
struct Expectation {
  std::string name;  // "<request>.<key>"
  std::string value;
  std::string tol;
  std::string rel_tol;
  std::string min;
  std::string max;
};

// A sweepable parameter: `audit profile` overwrites request[field] and runs
// that request alone, reading its "value" and "err_est".
struct Sweep {
  std::string param;
  std::string request;
  std::string field;
};

struct Scenario {
  int schema = kSchemaVersion;
  std::string id;
  std::string description;
  Json densities = Json::object();  // name -> {kind, params}
  Json forwards = Json::object();   // name -> {kind, ...}
  std::string prior_d, prior_m, forward;
  std::vector<ReparamDecl> reparams;
  std::vector<Json> requests;  // each {name, type, ...}
  QuadratureSpec quad;
  std::vector<Expectation> expected;
  std::vector<Sweep> sweeps;
};

// ValidationError (with line/column for malformed JSON, or naming the
// offending field or ref) on any schema violation.
Scenario parse_scenario(const std::string& text);
Scenario scenario_from_json(const Json& j);
Json scenario_to_json(const Scenario& s);
// Canonical text: sorted keys, two-space indent, trailing newline.
std::string serialize_scenario(const Scenario& s);
// Resolves every ref and checks request fields without running anything.
void validate_scenario(const Scenario& s);

struct RequestResult {
  std::string name;
  std::string type;
  bool ok = true;
  std::string error_kind;
  std::string error;
  std::vector<std::pair<std::string, double>> values;
  std::vector<std::pair<std::string, std::string>> notes;
};

struct Comparison {
  std::string name;
  double observed = 0.0;
  bool missing = false;
  std::string expected;  // as printed, e.g. "0.466667" or ">=0.01"
  std::string tol;
  double delta = 0.0;
  bool pass = false;
};

struct AuditReport {
  std::string id;
  QuadratureSpec quad;
  std::vector<RequestResult> results;
  std::vector<Comparison> comparisons;
  double wall_seconds = 0.0;

  bool all_requests_ok() const;
  bool all_golden_pass() const;
  bool pass() const { return all_requests_ok() && all_golden_pass(); }
  std::optional<double> value(const std::string& dotted) const;
};

// Runs requests in declaration order; request errors are recorded and the
// remaining requests still run.
AuditReport run_scenario(const Scenario& s);
RequestResult run_single_request(const Scenario& s, const Json& request);

struct ProfileRow {
  double param = 0.0;
  double value = 0.0;
  double err_est = 0.0;
};
// steps >= 1; steps == 1 gives the single row at lo. ValidationError for
// an unknown parameter.
std::vector<ProfileRow> run_profile(const Scenario& s, const std::string& param, double lo, double hi,
                                    int steps);

enum class ReportFormat { text, json, csv };
ReportFormat report_format_from_name(const std::string& s);
// Wall time appears only with timing = true, so default output replays
// byte-identically.
std::string render_report(const AuditReport& r, ReportFormat f, bool timing = false);
std::string render_profile(const std::vector<ProfileRow>& rows);

// Fixed, locale-independent number formatting used by all renderers.
std::string format_number(double v);

}  // namespace bkaudit
