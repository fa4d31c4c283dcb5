#include <charconv>
#include <cmath>
#include <sstream>

#include "bkaudit/errors.hpp"
#include "bkaudit/scenario.hpp"

namespace bkaudit {

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (v == 0.0) return "0";  // folds -0
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 10);
  return std::string(buf, r.ptr);
}

ReportFormat report_format_from_name(const std::string& s) {
  if (s == "text") return ReportFormat::text;
  if (s == "json") return ReportFormat::json;
  if (s == "csv") return ReportFormat::csv;
  fail(ErrorKind::ValidationError, "unknown format '" + s + "' (text, json, csv)");
}

namespace {

// JSON numbers cannot hold inf/nan; those go out as strings.
Json num(double v) { return std::isfinite(v) ? Json(v) : Json(format_number(v)); }

std::string quad_line(const QuadratureSpec& q) {
  std::string s = "engine=" + engine_name(q.engine) + " rel_tol=" + format_number(q.rel_tol) +
                  " abs_tol=" + format_number(q.abs_tol) + " max_evals=" + std::to_string(q.max_evals);
  if (q.seed) s += " seed=" + std::to_string(*q.seed);
  return s;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
  return out + "\"";
}

std::string text_report(const AuditReport& r, bool timing) {
  std::ostringstream o;
  o << "scenario: " << r.id << "\n";
  o << "quad: " << quad_line(r.quad) << "\n";
  for (const auto& res : r.results) {
    o << "request " << res.name << " (" << res.type << "): ";
    if (!res.ok) {
      o << "ERROR " << res.error_kind << ": " << res.error << "\n";
      continue;
    }
    o << "ok\n";
    for (const auto& [k, v] : res.values) o << "  " << k << " = " << format_number(v) << "\n";
    for (const auto& [k, v] : res.notes) o << "  " << k << ": " << v << "\n";
  }
  if (!r.comparisons.empty()) o << "golden:\n";
  for (const auto& c : r.comparisons) {
    o << c.name << ": " << (c.missing ? "missing" : format_number(c.observed)) << " " << c.expected << " "
      << format_number(c.delta) << " " << c.tol << " " << (c.pass ? "PASS" : "FAIL") << "\n";
  }
  o << "result: " << (r.pass() ? "PASS" : "FAIL") << "\n";
  if (timing) o << "wall_seconds: " << format_number(r.wall_seconds) << "\n";
  return o.str();
}

std::string json_report(const AuditReport& r, bool timing) {
  Json j;
  j["id"] = r.id;
  Json q = {{"engine", engine_name(r.quad.engine)},
            {"rel_tol", r.quad.rel_tol},
            {"abs_tol", r.quad.abs_tol},
            {"max_evals", r.quad.max_evals}};
  if (r.quad.seed) q["seed"] = *r.quad.seed;
  j["quad"] = q;
  j["results"] = Json::array();
  for (const auto& res : r.results) {
    Json x = {{"name", res.name}, {"type", res.type}, {"ok", res.ok}};
    if (!res.ok) {
      x["error_kind"] = res.error_kind;
      x["error"] = res.error;
    }
    Json vals = Json::object(), notes = Json::object();
    for (const auto& [k, v] : res.values) vals[k] = num(v);
    for (const auto& [k, v] : res.notes) notes[k] = v;
    x["values"] = vals;
    if (!notes.empty()) x["notes"] = notes;
    j["results"].push_back(x);
  }
  j["golden"] = Json::array();
  for (const auto& c : r.comparisons) {
    j["golden"].push_back({{"name", c.name},
                           {"observed", c.missing ? Json(nullptr) : num(c.observed)},
                           {"expected", c.expected},
                           {"delta", num(c.delta)},
                           {"tol", c.tol},
                           {"pass", c.pass}});
  }
  j["pass"] = r.pass();
  if (timing) j["wall_seconds"] = r.wall_seconds;
  return j.dump(2) + "\n";
}

std::string csv_report(const AuditReport& r, bool timing) {
  std::ostringstream o;
  o << "section,name,observed,expected,delta,tol,status\n";
  for (const auto& res : r.results) {
    if (!res.ok) {
      o << "error," << csv_field(res.name) << ",,,,," << csv_field(res.error_kind) << "\n";
      continue;
    }
    for (const auto& [k, v] : res.values) o << "value," << csv_field(res.name + "." + k) << "," << format_number(v) << ",,,,\n";
  }
  for (const auto& c : r.comparisons) {
    o << "golden," << csv_field(c.name) << "," << (c.missing ? "missing" : format_number(c.observed)) << ","
      << csv_field(c.expected) << "," << format_number(c.delta) << "," << c.tol << "," << (c.pass ? "PASS" : "FAIL")
      << "\n";
  }
  o << "result," << csv_field(r.id) << ",,,,," << (r.pass() ? "PASS" : "FAIL") << "\n";
  if (timing) o << "timing,wall_seconds," << format_number(r.wall_seconds) << ",,,,\n";
  return o.str();
}

}  // namespace

std::string render_report(const AuditReport& r, ReportFormat f, bool timing) {
  switch (f) {
    case ReportFormat::json: return json_report(r, timing);
    case ReportFormat::csv: return csv_report(r, timing);
    default: return text_report(r, timing);
  }
}

std::string render_profile(const std::vector<ProfileRow>& rows) {
  std::string s = "param,value,err_est\n";
  for (const auto& r : rows) s += format_number(r.param) + "," + format_number(r.value) + "," + format_number(r.err_est) + "\n";
  return s;
}

}  // namespace bkaudit
