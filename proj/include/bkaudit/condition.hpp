#pragma once

#include <optional>
#include <string>
#include <vector>

#include "bkaudit/coords.hpp"
#include "bkaudit/density.hpp"
#include "bkaudit/geometry.hpp"
#include "bkaudit/quad.hpp"

namespace bkaudit {

// Map from model space to data space.
struct ForwardModel {
  std::string name;
  int m_dim = 0;
  int d_dim = 0;
  VectorField map;
  std::optional<Matrix> linear_matrix;

  Point operator()(const Point& m) const;
  bool is_linear() const { return linear_matrix.has_value(); }
};

ForwardModel linear_forward(const Matrix& G, const std::string& name = "linear");
ForwardModel general_forward(const std::string& name, int m_dim, int d_dim, VectorField map);
// Forward model seen from reparameterized model coordinates: g o t^-1.
ForwardModel in_model_coords(const ForwardModel& fm, const Diffeo& t);
// Forward model seen through reparameterized data coordinates: t o g.
ForwardModel in_data_coords(const ForwardModel& fm, const Diffeo& t);
// g o h for a model-side pre-map h.
ForwardModel after(const ForwardModel& fm, const Diffeo& h);

// Unnormalized posterior over m: prior_d(g(m)) * prior_m(m).
Density graph_posterior(const Density& prior_d, const Density& prior_m, const ForwardModel& fm);

// x(t) = point + t * direction.
struct AffineLine {
  Point point;
  Point direction;
  Point at(double t) const { return point + t * direction; }
};

// Parameter interval of the line inside a box; nullopt if it misses.
std::optional<Interval> line_box_interval(const AffineLine& line, const Box& b);

// Naive conditional: p evaluated along the line, renormalized in the line
// parameter. Deliberately depends on how the line is parameterized.
Density restrict_to_affine(const Density& p, const AffineLine& line, const QuadratureSpec& q = {});

// Conditional from epsilon-tubes around the line, tubes being Euclidean in the
// coordinates y = thickening(x). Cross-sectional averages are extrapolated to
// eps -> 0 with a Richardson (Neville) tableau in eps. The result is an
// unnormalized density in the line parameter on `range`.
Density tube_limit_conditional(const Density& p, const AffineLine& line, const Interval& range,
                               const Diffeo& thickening, const std::vector<double>& eps_sequence,
                               const QuadratureSpec& q = {});

// Limit value at one line parameter (throws NoConvergence when the last two
// tableau diagonals differ by more than 1e-4 relative).
double tube_limit_value(const Density& p, const AffineLine& line, double t, const Diffeo& thickening,
                        const std::vector<double>& eps_sequence, const QuadratureSpec& q);

// max |log(c1/c2)| over an n-point midpoint grid on `domain`, after both are
// normalized on `domain`. Infinite if exactly one of them vanishes somewhere.
double disagreement_score(const Density& c1, const Density& c2, const Interval& domain, int n = 200,
                          const QuadratureSpec& q = {});

// Two-station travel-time toy: velocities v, slownesses s = 1/v, data
// d = G s with G = [[1,1],[1,0]], uniform priors on a data box and a velocity box.
struct TomographyCase {
  Box data_box = Box(make_point({1.30, 1.0 / 1.5}), make_point({1.50, 1.0 / 1.35}));
  Box v_box = Box(make_point({1.0, 1.0}), make_point({2.0, 2.0}));
  Matrix G = (Matrix(2, 2) << 1.0, 1.0, 1.0, 0.0).finished();
};

struct TomographyConditionals {
  Density velocity_route;   // conditional on v2 = v1, in v1
  Density slowness_route;   // conditional on s2 = s1, mapped back to v1
  Interval feasible;        // v1 values with g(v1, v1) in the data box
};

TomographyConditionals tomography_conditionals(const TomographyCase& c = {}, const QuadratureSpec& q = {});

// Closed-form feasible v1 interval on the line v2 = v1.
Interval tomography_feasible_interval(const TomographyCase& c = {});

}  // namespace bkaudit
