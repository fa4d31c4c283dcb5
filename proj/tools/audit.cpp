// audit: run built-in golden cases and user scenario files.
//
// Exit codes: 0 pass, 1 computational or golden failure, 2 usage/validation.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "bkaudit/errors.hpp"
#include "bkaudit/parallel.hpp"
#include "bkaudit/registry.hpp"
#include "bkaudit/scenario.hpp"

using namespace bkaudit;

namespace {

constexpr int kPass = 0, kFail = 1, kUsage = 2;

struct Overrides {
  std::string format = "text";
  std::optional<std::uint64_t> seed;
  std::optional<double> tol;
  bool timing = false;
};

void apply(Scenario& s, const Overrides& o) {
  if (o.seed) s.quad.seed = o.seed;
  if (o.tol) s.quad.rel_tol = *o.tol;
  s.quad.validate();
}

int report(const Scenario& base, const Overrides& o) {
  Scenario s = base;
  apply(s, o);
  const ReportFormat f = report_format_from_name(o.format);
  const AuditReport r = run_scenario(s);
  std::cout << render_report(r, f, o.timing);
  return r.pass() ? kPass : kFail;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::ValidationError, "cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// "<lo>..<hi>"
std::pair<double, double> parse_range(const std::string& s) {
  const auto dots = s.find("..");
  if (dots == std::string::npos) fail(ErrorKind::ValidationError, "range must look like <lo>..<hi>, got '" + s + "'");
  auto num = [&](const std::string& t) {
    size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(t, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != t.size()) fail(ErrorKind::ValidationError, "bad range bound '" + t + "'");
    return v;
  };
  const double lo = num(s.substr(0, dots)), hi = num(s.substr(dots + 2));
  return {lo, hi};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reparameterization audits of Bayesian inversion golden cases"};
  app.require_subcommand(1);
  Overrides o;
  auto common = [&](CLI::App* c) {
    c->add_option("--format", o.format, "text, json or csv")->capture_default_str();
    c->add_option("--seed", o.seed, "override the quadrature seed");
    c->add_option("--tol", o.tol, "override the relative quadrature tolerance");
    c->add_flag("--timing", o.timing, "include wall time in the report");
  };

  std::string id, path, param, range;
  int steps = 0;
  auto* list = app.add_subcommand("list", "list built-in scenario ids");
  list->add_option("--format", o.format, "text, json or csv");
  auto* repro = app.add_subcommand("reproduce", "run a built-in golden case");
  repro->add_option("id", id)->required();
  common(repro);
  auto* run = app.add_subcommand("run", "run a scenario file");
  run->add_option("file", path)->required();
  common(run);
  auto* prof = app.add_subcommand("profile", "sweep one parameter of a built-in case, CSV out");
  prof->add_option("id", id)->required();
  prof->add_option("param", param)->required();
  prof->add_option("range", range, "<lo>..<hi>")->required();
  prof->add_option("steps", steps)->required();
  prof->add_option("--tol", o.tol, "override the relative quadrature tolerance");
  auto* exp = app.add_subcommand("export", "print a built-in case as a scenario file");
  exp->add_option("id", id)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    parallel::configure_from_env();
    if (*list) {
      const ReportFormat f = report_format_from_name(o.format);
      if (f == ReportFormat::json) {
        Json a = Json::array();
        for (const auto& s : registry()) a.push_back({{"id", s.id}, {"description", s.description}});
        std::cout << a.dump(2) << "\n";
      } else if (f == ReportFormat::csv) {
        std::cout << "id,description\n";
        for (const auto& s : registry()) std::cout << s.id << ",\"" << s.description << "\"\n";
      } else {
        for (const auto& s : registry()) std::cout << s.id << "  " << s.description << "\n";
      }
      return kPass;
    }
    if (*repro) return report(find_scenario(id), o);
    if (*run) return report(parse_scenario(read_file(path)), o);
    if (*exp) {
      std::cout << serialize_scenario(find_scenario(id));
      return kPass;
    }
    if (*prof) {
      Scenario s = find_scenario(id);
      apply(s, o);
      const auto [lo, hi] = parse_range(range);
      std::cout << render_profile(run_profile(s, param, lo, hi, steps));
      return kPass;
    }
  } catch (const AuditError& e) {
    std::cerr << "audit: " << e.what() << "\n";
    return e.kind() == ErrorKind::ValidationError ? kUsage : kFail;
  }
  return kUsage;
}
