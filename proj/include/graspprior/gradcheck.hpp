#pragma once

#include <cstdint>
#include <string>

#include "graspprior/geometry.hpp"

namespace graspprior
{

struct GradcheckOptions
{
  std::uint64_t seed = 0;
  int cases_per_shape = 100;
  double step = 1e-5;
  double tolerance = 1e-3;
  int resolution = 64;
  /// Test hook: scales every analytic gradient by 1.01 before comparison.
  bool corrupt_gradient = false;
};

struct GradcheckReport
{
  int cases = 0;           ///< per check, summed over shapes
  int rejected = 0;        ///< random draws discarded as degenerate
  double max_rel_pcr = 0.0;
  double max_rel_objective = 0.0;
  bool pass = true;
  /// JSON description of the worst failing case; empty when everything passed.
  std::string offending_case;
};

/// Relative error |analytic - fd| / max(|fd|, 1e-6) in the Euclidean norm.
double relative_error(const Vec7& analytic, const Vec7& fd);

/// Compares pcr_value_and_grad and objective_grad against central differences on random
/// non-degenerate cases over sphere, box and cylinder grids. A case is non-degenerate when
/// every stencil point keeps both contacts in the same grid cells, keeps the hinge
/// activity of both contacts, and stays collision-free.
GradcheckReport run_gradcheck(const GradcheckOptions& options);

}  // namespace graspprior
