#include <set>

#include "bkaudit/errors.hpp"
#include "bkaudit/registry.hpp"
#include "bkaudit/scenario.hpp"
#include "doctest.h"

using namespace bkaudit;

namespace {

const char* kMinimal = R"({
  "schema": 1,
  "id": "user:small",
  "forwards": {"g": {"kind": "linear", "matrix": [[1, 0], [0, 1], [1, 1]]}},
  "densities": {
    "d": {"kind": "uniform_box", "params": {"center": [0.5, 0.5, 1.0], "half_width": 0.25}},
    "m": {"kind": "uniform_box", "params": {"lo": [0, 0], "hi": [1, 1]}}
  },
  "prior_d": "d", "prior_m": "m", "forward": "g",
  "requests": [
    {"name": "ev", "type": "evidence"},
    {"name": "twice", "type": "combine", "op": "ratio", "a": "ev.value", "b": "ev.value"}
  ],
  "expected": {"twice.value": {"value": "1", "tol": "0"}}
})";

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const AuditError& e) {
    return e.kind();
  }
  return ErrorKind::NonFinite;  // sentinel: nothing thrown
}

std::string message_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const AuditError& e) {
    return e.what();
  }
  return "";
}

Json minimal() { return Json::parse(kMinimal); }

}  // namespace

TEST_CASE("registry shape") {
  const auto& reg = registry();
  CHECK(reg.size() >= 13);
  std::set<std::string> ids;
  for (const auto& s : reg) {
    CHECK(ids.insert(s.id).second);
    CHECK_FALSE(s.expected.empty());
    CHECK_NOTHROW(validate_scenario(s));
  }
  for (const char* id : {"tomo:conditional", "map:lognormal_hyperbolic", "hier:cart", "hier:tan", "hier:square",
                         "hier:decision", "transdim:cart", "transdim:sph", "transdim:flip", "acausal:discrete",
                         "acausal:gaussian", "construct:tube", "construct:transport", "construct:any_evidence"}) {
    CHECK(ids.count(id) == 1);
  }
  CHECK(kind_of([] { find_scenario("nosuch"); }) == ErrorKind::ValidationError);
}

TEST_CASE("canonical round trip") {
  for (const auto& s : registry()) {
    const std::string a = serialize_scenario(s);
    const std::string b = serialize_scenario(parse_scenario(a));
    CHECK(a == b);
    CHECK(a.back() == '\n');
  }
  // key order in the input does not matter
  const Scenario s = parse_scenario(kMinimal);
  Json shuffled = Json::parse(serialize_scenario(s));
  CHECK(serialize_scenario(scenario_from_json(shuffled)) == serialize_scenario(s));
}

TEST_CASE("validation errors") {
  // malformed JSON reports line and column
  const std::string msg = message_of([] { parse_scenario("{\n  \"schema\": 1,\n  \"id\": }"); });
  CHECK(msg.find("line 3") != std::string::npos);
  CHECK(msg.find("column") != std::string::npos);

  Json j = minimal();
  j["quad"] = {{"engine", "monte_carlo"}};
  CHECK(message_of([&] { parse_scenario(j.dump()); }).find("seed is mandatory") != std::string::npos);
  j["quad"]["seed"] = 11;
  CHECK_NOTHROW(parse_scenario(j.dump()));

  j = minimal();
  j["prior_d"] = "missing_density";
  CHECK(message_of([&] { parse_scenario(j.dump()); }).find("missing_density") != std::string::npos);

  j = minimal();
  j["requests"][1]["b"] = "later.value";
  CHECK(message_of([&] { parse_scenario(j.dump()); }).find("later") != std::string::npos);

  j = minimal();
  j["expected"]["twice.value"]["value"] = 1;  // numbers must be decimal strings
  CHECK(kind_of([&] { parse_scenario(j.dump()); }) == ErrorKind::ValidationError);

  j = minimal();
  j["schema"] = 2;
  CHECK(kind_of([&] { parse_scenario(j.dump()); }) == ErrorKind::ValidationError);

  j = minimal();
  j["requests"][0]["type"] = "teleport";
  CHECK(message_of([&] { parse_scenario(j.dump()); }).find("teleport") != std::string::npos);

  j = minimal();
  j["requests"][1]["name"] = "ev";
  CHECK(message_of([&] { parse_scenario(j.dump()); }).find("duplicate") != std::string::npos);

  j = minimal();
  j["densities"]["m"]["params"]["hi"] = {0, 1};
  CHECK(kind_of([&] { parse_scenario(j.dump()); }) == ErrorKind::ValidationError);

  j = minimal();
  j["reparams"] = Json::array({{{"id", "r"}, {"diffeo", "warp"}, {"space", "model"}}});
  CHECK(message_of([&] { parse_scenario(j.dump()); }).find("warp") != std::string::npos);
}

TEST_CASE("running scenarios") {
  const AuditReport r = run_scenario(parse_scenario(kMinimal));
  CHECK(r.pass());
  // feasible set: [0.25, 0.75]^2 cut by 0.75 <= m1 + m2 <= 1.25, two corner
  // triangles of area 1/32 removed; evidence = area / data-box volume
  CHECK(r.value("ev.value").value() == doctest::Approx((0.25 - 2.0 / 32) / 0.125).epsilon(1e-12));
  CHECK_FALSE(r.value("ev.nothing"));

  Json j = minimal();
  j["requests"] = Json::array();
  j.erase("expected");
  const AuditReport empty = run_scenario(parse_scenario(j.dump()));
  CHECK(empty.results.empty());
  CHECK(empty.pass());

  // a golden mismatch fails without stopping, and is printed with its delta
  j = minimal();
  j["expected"]["ev.value"] = {{"value", "3"}, {"tol", "0.1"}};
  const AuditReport bad = run_scenario(parse_scenario(j.dump()));
  CHECK(bad.all_requests_ok());
  CHECK_FALSE(bad.all_golden_pass());
  const std::string text = render_report(bad, ReportFormat::text);
  CHECK(text.find("ev.value: 1.5 3 -1.5 0.1 FAIL\n") != std::string::npos);
  CHECK(text.find("twice.value: 1 1 0 0 PASS\n") != std::string::npos);

  // a request error is recorded and the rest still run
  j = minimal();
  j["requests"].push_back({{"name", "bad"}, {"type", "tail_prob"}, {"case", "square"}, {"sigma", 2.0}, {"threshold", 1.0}});
  j["requests"].push_back({{"name", "after"}, {"type", "evidence"}});
  const AuditReport part = run_scenario(parse_scenario(j.dump()));
  REQUIRE(part.results.size() == 4);
  CHECK_FALSE(part.results[2].ok);
  CHECK(part.results[3].ok);
  CHECK_FALSE(part.pass());
}

TEST_CASE("replay determinism and formats") {
  const Scenario s = find_scenario("hier:cart");
  const AuditReport a = run_scenario(s), b = run_scenario(s);
  for (ReportFormat f : {ReportFormat::text, ReportFormat::json, ReportFormat::csv}) {
    CHECK(render_report(a, f) == render_report(b, f));
  }
  const std::string csv = render_report(a, ReportFormat::csv);
  CHECK(csv.rfind("section,name,observed,expected,delta,tol,status\n", 0) == 0);
  CHECK(csv.find('\r') == std::string::npos);
  CHECK(csv.find("golden,opt.sigma,0.4666666667,0.466667,") != std::string::npos);
  CHECK(Json::parse(render_report(a, ReportFormat::json))["pass"] == true);
  CHECK(render_report(a, ReportFormat::text, true).find("wall_seconds: ") != std::string::npos);
  CHECK(render_report(a, ReportFormat::text).find("wall_seconds") == std::string::npos);
  CHECK(kind_of([] { report_format_from_name("xml"); }) == ErrorKind::ValidationError);

  // the seed is echoed
  Scenario mc = parse_scenario(kMinimal);
  mc.quad.engine = Engine::monte_carlo;
  mc.quad.seed = 42;
  CHECK(render_report(run_scenario(mc), ReportFormat::text).find("seed=42") != std::string::npos);
}

TEST_CASE("number formatting") {
  CHECK(format_number(0.5) == "0.5");
  CHECK(format_number(-0.0) == "0");
  CHECK(format_number(1e-12) == "1e-12");
  CHECK(format_number(2.0 / 3.0) == "0.6666666667");
  CHECK(format_number(INFINITY) == "inf");
  CHECK(format_number(NAN) == "nan");
}

TEST_CASE("profiles") {
  const Scenario tan = find_scenario("hier:tan");
  const auto rows = run_profile(tan, "sigma", 0.1, 2.0, 100);
  REQUIRE(rows.size() == 100);
  CHECK(rows.front().param == 0.1);
  CHECK(rows.back().param == doctest::Approx(2.0).epsilon(1e-15));
  size_t best = 0;
  for (size_t i = 0; i < rows.size(); ++i)
    if (rows[i].value > rows[best].value) best = i;
  // the curve peaks at the optimizer's sigma (grid spacing 0.019)
  CHECK(std::abs(rows[best].param - 1.686727) < 0.02);
  const std::string csv = render_profile(rows);
  CHECK(csv.rfind("param,value,err_est\n", 0) == 0);

  const auto one = run_profile(tan, "sigma", 0.3, 0.9, 1);
  REQUIRE(one.size() == 1);
  CHECK(one[0].param == 0.3);

  CHECK(kind_of([&] { run_profile(tan, "lambda", 0.1, 1.0, 3); }) == ErrorKind::ValidationError);
  CHECK(kind_of([&] { run_profile(tan, "sigma", 0.1, 1.0, 0); }) == ErrorKind::ValidationError);

  // squared case: growth on the branch toward the sigma = d1 singularity
  const auto sq = run_profile(find_scenario("hier:square"), "sigma", 1.2, 1.49, 30);
  for (size_t i = 1; i < sq.size(); ++i) CHECK(sq[i].value > sq[i - 1].value);
}
