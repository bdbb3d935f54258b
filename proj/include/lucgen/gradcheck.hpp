#pragma once

#include <functional>

#include "lucgen/params.hpp"

namespace lucgen::num {

// Verifies analytic gradients against central finite differences.
//
// Call with `params` whose gradient slots already hold the analytic gradient
// of `loss` at the current values. Every coordinate is perturbed by +-h, the
// loss re-evaluated, and the relative error
//     |g_analytic - g_numeric| / max(1, |g_numeric|)
// computed; the maximum over all coordinates is returned. `loss` must be a
// deterministic pure function of the parameter values (freeze any noise
// draws before calling).
double grad_check(const std::function<double(const ParamSet&)>& loss,
                  ParamSet& params, double h);

} // namespace lucgen::num
