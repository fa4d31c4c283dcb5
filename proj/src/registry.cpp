#include "bkaudit/registry.hpp"

#include "bkaudit/errors.hpp"

namespace bkaudit {

namespace {

// Shared blocks, spliced into the scenario texts below.
const std::string kHierSetup = R"("forwards": {"hier": {"kind": "linear", "matrix": [[0, 1], [1, 0], [0.5, 0]]}},
  "densities": {
    "data": {"kind": "uniform_box", "params": {"center": [1.5, 1.1, 0.9], "half_width": 0.4666666666666667}},
    "model": {"kind": "uniform_box", "params": {"lo": [-5, -5], "hi": [5, 5]}}
  },
  "prior_d": "data", "prior_m": "model", "forward": "hier",
  "reparams": [
    {"id": "cubic_m", "diffeo": "odd_cubic", "space": "model"},
    {"id": "tan_d", "diffeo": "tan_axis0", "space": "data"}
  ],
  "sweeps": {"sigma": {"request": "ev", "field": "sigma"}},
  "quad": {"engine": "adaptive_subdivision", "rel_tol": 1e-6, "abs_tol": 1e-12, "max_evals": 4000000},)";

const std::string kTransdimSetup = R"("forwards": {"G2": {"kind": "linear", "matrix": [[2, 1], [4, 2], [1, 0]]}},
  "densities": {
    "data": {"kind": "uniform_box", "params": {"center": [3.1, 5.8, 1.1], "half_width": 0.4}},
    "model": {"kind": "uniform_box", "params": {"lo": [0, 0], "hi": [2, 2]}}
  },
  "prior_d": "data", "prior_m": "model", "forward": "G2",
  "reparams": [{"id": "cubic_m", "diffeo": "odd_cubic", "space": "model"}],
  "quad": {"engine": "adaptive_subdivision", "rel_tol": 1e-6, "abs_tol": 1e-10, "max_evals": 2000000},)";

const std::string kModelAudit = R"({"name": "audit_m", "type": "audit", "reparam": "cubic_m", "region": "feasible"})";

const std::string kScenarios[] = {
    R"({"schema": 1, "id": "tomo:conditional",
  "description": "two-station travel times: conditioning on v2 = v1 versus s2 = s1",
  "forwards": {"tt": {"kind": "linear_reciprocal", "matrix": [[1, 1], [1, 0]]}},
  "densities": {
    "data": {"kind": "uniform_box", "params": {"lo": [1.3, 0.6666666666666666], "hi": [1.5, 0.7407407407407407]}},
    "vel": {"kind": "uniform_box", "params": {"lo": [1, 1], "hi": [2, 2]}}
  },
  "prior_d": "data", "prior_m": "vel", "forward": "tt",
  "reparams": [{"id": "slowness", "diffeo": "reciprocal", "space": "model"}],
  "quad": {"engine": "adaptive_subdivision", "rel_tol": 1e-6, "abs_tol": 1e-10, "max_evals": 2000000},
  "requests": [
    {"name": "cond", "type": "conditional", "study": "tomography", "grid": 200},
    {"name": "audit_m", "type": "audit", "reparam": "slowness", "region": {"lo": [1.3, 1.15], "hi": [1.55, 1.85]}}
  ],
  "expected": {
    "cond.velocity_flatness": {"max": "1e-9"},
    "cond.slowness_slope": {"value": "2", "tol": "0.001"},
    "cond.disagreement": {"min": "0.01"},
    "audit_m.pass": {"value": "true", "tol": "0"}
  }})",

    R"({"schema": 1, "id": "map:lognormal_hyperbolic",
  "description": "MAP point of a log-normal pair under the hyperbolic map u = ln(T/rho)/2, v = sqrt(T rho) of its arguments",
  "forwards": {"id2": {"kind": "linear", "matrix": [[1, 0], [0, 1]]}},
  "densities": {
    "f": {"kind": "lognormal_product", "params": {"mu": [1, 1], "sigma": [1, 1]}},
    "data": {"kind": "gaussian_diag", "params": {"mean": [1.5, 1.5], "sd": [1, 1]}}
  },
  "prior_d": "data", "prior_m": "f", "forward": "id2",
  "reparams": [{"id": "hyp", "diffeo": "hyperbolic_Trho", "space": "model"}],
  "requests": [
    {"name": "mode", "type": "mode", "density": "f", "box": {"lo": [0.05, 0.05], "hi": [5, 5]}, "reparam": "hyp"},
    {"name": "audit_m", "type": "audit", "reparam": "hyp", "region": {"lo": [0.01, 0.01], "hi": [10, 10]}}
  ],
  "expected": {
    "mode.argmax_0": {"value": "1", "tol": "0.001"},
    "mode.argmax_1": {"value": "1", "tol": "0.001"},
    "mode.back_mapped_0": {"value": "1.6487", "tol": "0.001"},
    "mode.back_mapped_1": {"value": "1.6487", "tol": "0.001"},
    "mode.value": {"value": "0.0585", "tol": "0.0005"},
    "mode.back_value": {"value": "0.0456", "tol": "0.0005"},
    "mode.pass": {"value": "false", "tol": "0"},
    "audit_m.pass": {"value": "true", "tol": "0"}
  }})",

    R"({"schema": 1, "id": "hier:cart",
  "description": "noise scale maximizing the evidence, first datum as is",
  )" + kHierSetup + R"(
  "requests": [
    {"name": "opt", "type": "optimize", "case": "cart"},
    {"name": "ev", "type": "evidence", "study": "hier", "case": "cart", "sigma": 0.4666666666666667},
    {"name": "ev_geom", "type": "evidence"},
    {"name": "agree", "type": "combine", "op": "abs_diff", "a": "ev.value", "b": "ev_geom.value"},
    )" + kModelAudit + R"(,
    {"name": "audit_d", "type": "audit", "reparam": "tan_d", "region": "feasible"}
  ],
  "expected": {
    "opt.sigma": {"value": "0.466667", "tol": "1e-5"},
    "opt.closed_form_delta": {"value": "0", "tol": "1e-12"},
    "opt.boundary_singular": {"value": "false", "tol": "0"},
    "agree.value": {"max": "1e-12"},
    "audit_m.pass": {"value": "true", "tol": "0"},
    "audit_d.pass": {"value": "false", "tol": "0"}
  }})",

    R"({"schema": 1, "id": "hier:tan",
  "description": "noise scale maximizing the evidence, first datum through tan",
  )" + kHierSetup + R"(
  "requests": [
    {"name": "opt", "type": "optimize", "case": "tan"},
    {"name": "ev", "type": "evidence", "study": "hier", "case": "tan", "sigma": 1.02932},
    )" + kModelAudit + R"(
  ],
  "expected": {
    "opt.sigma": {"value": "1.02932", "tol": "0.001"},
    "opt.boundary_singular": {"value": "false", "tol": "0"},
    "audit_m.pass": {"value": "true", "tol": "0"}
  }})",

    R"({"schema": 1, "id": "hier:square",
  "description": "noise scale maximizing the evidence, first datum squared",
  )" + kHierSetup + R"(
  "requests": [
    {"name": "opt", "type": "optimize", "case": "square"},
    {"name": "ev", "type": "evidence", "study": "hier", "case": "square", "sigma": 1.0},
    )" + kModelAudit + R"(
  ],
  "expected": {
    "opt.sigma": {"value": "1.5", "tol": "1e-6"},
    "opt.boundary_singular": {"value": "true", "tol": "0"},
    "audit_m.pass": {"value": "true", "tol": "0"}
  }})",

    R"({"schema": 1, "id": "hier:decision",
  "description": "P(m2 > 1.6) under the evidence-optimal noise scale of each case",
  )" + kHierSetup + R"(
  "requests": [
    {"name": "ev", "type": "evidence", "study": "hier", "case": "cart", "sigma": 0.4666666666666667},
    {"name": "case1", "type": "tail_prob", "case": "cart", "sigma": "optimal", "threshold": 1.6},
    {"name": "case2", "type": "tail_prob", "case": "tan", "sigma": "optimal", "threshold": 1.6},
    )" + kModelAudit + R"(,
    {"name": "audit_d", "type": "audit", "reparam": "tan_d", "region": "feasible"}
  ],
  "expected": {
    "case1.tail": {"value": "0", "tol": "0"},
    "case1.m2_upper": {"value": "1.566667", "tol": "1e-6"},
    "case2.tail": {"value": "0.107", "tol": "0.002"},
    "case2.norm_const": {"value": "1.689", "tol": "0.005"},
    "audit_m.pass": {"value": "true", "tol": "0"},
    "audit_d.pass": {"value": "false", "tol": "0"}
  }})",

    R"({"schema": 1, "id": "transdim:cart",
  "description": "one versus two parameters, Cartesian data",
  )" + kTransdimSetup + R"(
  "sweeps": {"sigma": {"request": "k1", "field": "sigma"}},
  "requests": [
    {"name": "k1", "type": "evidence", "study": "transdim", "coords": "cart", "k": 1},
    {"name": "k2", "type": "evidence", "study": "transdim", "coords": "cart", "k": 2},
    {"name": "bf", "type": "bayes_factor", "num": "k2", "den": "k1"},
    {"name": "aic", "type": "transdim", "quantity": "aic", "coords": "cart"},
    )" + kModelAudit + R"(
  ],
  "expected": {
    "k1.value": {"value": "0.146484375", "tol": "1e-9"},
    "k2.value": {"value": "0.234375", "tol": "1e-9"},
    "bf.factor": {"value": "2.133333", "tol": "1e-6"},
    "audit_m.pass": {"value": "true", "tol": "0"}
  }})",

    R"({"schema": 1, "id": "transdim:sph",
  "description": "one versus two parameters, data in spherical coordinates",
  )" + kTransdimSetup + R"(
  "requests": [
    {"name": "k1", "type": "evidence", "study": "transdim", "coords": "sph", "k": 1},
    {"name": "k2", "type": "evidence", "study": "transdim", "coords": "sph", "k": 2},
    {"name": "bf", "type": "bayes_factor", "num": "k2", "den": "k1"},
    {"name": "closed", "type": "transdim", "quantity": "closed_form",
     "quad": {"engine": "adaptive_subdivision", "rel_tol": 1e-9, "abs_tol": 1e-12, "max_evals": 20000000}},
    )" + kModelAudit + R"(
  ],
  "expected": {
    "k1.value": {"value": "6.101638896038931", "tol": "1e-9"},
    "k2.value": {"value": "4.1939554541015625", "rel_tol": "1e-4"},
    "bf.factor": {"value": "0.68734901", "tol": "1e-4"},
    "closed.log_args_positive": {"value": "true", "tol": "0"},
    "closed.rel_diff": {"max": "1e-5"},
    "audit_m.pass": {"value": "true", "tol": "0"}
  }})",

    R"({"schema": 1, "id": "transdim:flip",
  "description": "Bayes factors in both data coordinate systems",
  )" + kTransdimSetup + R"(
  "requests": [
    {"name": "flip", "type": "transdim", "quantity": "flip"},
    )" + kModelAudit + R"(
  ],
  "expected": {
    "flip.cart_factor": {"value": "2.133333", "tol": "1e-6"},
    "flip.sph_factor": {"value": "0.68734901", "tol": "1e-4"},
    "flip.flip": {"value": "true", "tol": "0"},
    "audit_m.pass": {"value": "true", "tol": "0"}
  }})",

    R"({"schema": 1, "id": "acausal:discrete",
  "description": "posterior of discrete prior widths depends on the forward coefficient",
  "forwards": {"k1": {"kind": "linear", "matrix": [[1]]}},
  "densities": {
    "data": {"kind": "gaussian_diag", "params": {"mean": [0], "sd": [1]}},
    "model": {"kind": "gaussian_diag", "params": {"mean": [0], "sd": [1]}}
  },
  "prior_d": "data", "prior_m": "model", "forward": "k1",
  "reparams": [{"id": "cubic_m", "diffeo": "odd_cubic", "space": "model"}],
  "requests": [
    {"name": "h1", "type": "hyper_table", "variant": "discrete", "k": 1},
    {"name": "h2", "type": "hyper_table", "variant": "discrete", "k": 2},
    {"name": "shift", "type": "combine", "op": "max_abs_diff",
     "a": ["h1.lambda_1", "h1.delta_1"], "b": ["h2.lambda_1", "h2.delta_1"]},
    {"name": "audit_m", "type": "audit", "reparam": "cubic_m"}
  ],
  "expected": {
    "shift.value": {"min": "0.001"},
    "h1.quad_max_diff": {"max": "1e-4"},
    "h2.quad_max_diff": {"max": "1e-4"},
    "audit_m.pass": {"value": "true", "tol": "0"}
  }})",

    R"({"schema": 1, "id": "acausal:gaussian",
  "description": "posterior mode of continuous prior widths depends on the forward coefficient",
  "forwards": {"k1": {"kind": "linear", "matrix": [[1]]}},
  "densities": {
    "data": {"kind": "gaussian_diag", "params": {"mean": [1], "sd": [1]}},
    "model": {"kind": "gaussian_diag", "params": {"mean": [1], "sd": [1]}}
  },
  "prior_d": "data", "prior_m": "model", "forward": "k1",
  "reparams": [{"id": "cubic_m", "diffeo": "odd_cubic", "space": "model"}],
  "requests": [
    {"name": "g1", "type": "hyper_table", "variant": "gaussian", "k": 1},
    {"name": "g2", "type": "hyper_table", "variant": "gaussian", "k": 2},
    {"name": "shift", "type": "combine", "op": "max_abs_diff", "a": ["g1.lambda", "g1.delta"], "b": ["g2.lambda", "g2.delta"]},
    {"name": "audit_m", "type": "audit", "reparam": "cubic_m"}
  ],
  "expected": {
    "shift.value": {"min": "0.05"},
    "g1.quad_rel_diff": {"max": "1e-6"},
    "g2.quad_rel_diff": {"max": "1e-6"},
    "audit_m.pass": {"value": "true", "tol": "0"}
  }})",

    R"({"schema": 1, "id": "construct:tube",
  "description": "Gaussian tube around a line with a prescribed naive submanifold integral",
  "forwards": {"line": {"kind": "linear", "matrix": [[0.2]], "offset": [0.4]}},
  "densities": {
    "tube": {"kind": "tube", "params": {"n": 2, "k": 1, "forward": "line", "sigma": 0.05, "amplitude": 1}},
    "data": {"kind": "gaussian_diag", "params": {"mean": [0.5], "sd": [0.1]}},
    "model": {"kind": "uniform_box", "params": {"lo": [0], "hi": [1]}}
  },
  "prior_d": "data", "prior_m": "model", "forward": "line",
  "reparams": [{"id": "cubic_m", "diffeo": "odd_cubic", "space": "model"}],
  "quad": {"engine": "adaptive_subdivision", "rel_tol": 1e-9, "abs_tol": 1e-12, "max_evals": 20000000},
  "requests": [
    {"name": "tube", "type": "construct", "what": "tube", "n": 2, "k": 1, "forward": "line", "target": 0.3,
     "mass_sigma": 0.05},
    {"name": "slice", "type": "conditional", "density": "tube", "point": [0.5, 0], "direction": [0, 1], "at": [0.5]},
    {"name": "audit_m", "type": "audit", "reparam": "cubic_m"}
  ],
  "expected": {
    "tube.rel_err": {"max": "0.02"},
    "tube.volume": {"value": "1.019803902718557", "tol": "1e-9"},
    "tube.mass": {"value": "1", "tol": "0.002"},
    "slice.value_0": {"value": "7.978845608028654", "rel_tol": "1e-6"},
    "audit_m.pass": {"value": "true", "tol": "0"}
  }})",

    R"({"schema": 1, "id": "construct:transport",
  "description": "triangular transport of the uniform square onto 4uv",
  "forwards": {"id2": {"kind": "linear", "matrix": [[1, 0], [0, 1]]}},
  "densities": {
    "u": {"kind": "uniform_box", "params": {"lo": [0, 0], "hi": [1, 1]}},
    "uv": {"kind": "power_product", "params": {"powers": [1, 1]}}
  },
  "prior_d": "uv", "prior_m": "u", "forward": "id2",
  "reparams": [{"id": "cubic_m", "diffeo": "odd_cubic", "space": "model"}],
  "requests": [
    {"name": "map", "type": "construct", "what": "transport", "f": "u", "g": "uv", "grid": 50},
    {"name": "audit_m", "type": "audit", "reparam": "cubic_m"}
  ],
  "expected": {
    "map.sup_err": {"max": "0.005"},
    "map.ks": {"max": "0.001"},
    "audit_m.pass": {"value": "true", "tol": "0"}
  }})",

    R"({"schema": 1, "id": "construct:any_evidence",
  "description": "data reparameterizations giving the two-parameter Cartesian case prescribed evidences",
  )" + kTransdimSetup + R"(
  "requests": [
    {"name": "low", "type": "construct", "what": "any_evidence", "target": 0.05,
     "quad": {"engine": "tensor_gauss", "rel_tol": 1e-4, "abs_tol": 1e-10, "max_evals": 20000000}},
    {"name": "high", "type": "construct", "what": "any_evidence", "target": 0.5,
     "quad": {"engine": "tensor_gauss", "rel_tol": 1e-4, "abs_tol": 1e-10, "max_evals": 20000000}},
    )" + kModelAudit + R"(
  ],
  "expected": {
    "low.base": {"value": "0.145263671875", "tol": "1e-9"},
    "low.rel_err": {"max": "0.02"},
    "high.rel_err": {"max": "0.02"},
    "audit_m.pass": {"value": "true", "tol": "0"}
  }})",
};

}  // namespace

const std::vector<Scenario>& registry() {
  static const std::vector<Scenario> all = [] {
    std::vector<Scenario> out;
    for (const auto& text : kScenarios) out.push_back(parse_scenario(text));
    return out;
  }();
  return all;
}

const Scenario& find_scenario(const std::string& id) {
  for (const auto& s : registry())
    if (s.id == id) return s;
  fail(ErrorKind::ValidationError, "unknown scenario id '" + id + "' (see `audit list`)");
}

}  // namespace bkaudit
