#include "lucgen/gradcheck.hpp"

#include <cmath>

#include "lucgen/errors.hpp"

namespace lucgen::num {

double grad_check(const std::function<double(const ParamSet&)>& loss,
                  ParamSet& params, double h) {
    if (!(h > 0.0)) throw PreconditionError("grad_check: step must be positive");
    const std::size_t n = params.coord_count();
    double worst = 0.0;
    for (std::size_t c = 0; c < n; ++c) {
        const double saved = params.get_coord(c);
        params.set_coord(c, saved + h);
        const double up = loss(params);
        params.set_coord(c, saved - h);
        const double down = loss(params);
        params.set_coord(c, saved);
        ensure_finite(up, "grad_check loss");
        ensure_finite(down, "grad_check loss");
        const double numeric = (up - down) / (2.0 * h);
        const double analytic = params.grad_coord(c);
        const double rel = std::fabs(analytic - numeric) /
                           std::max(1.0, std::fabs(numeric));
        if (rel > worst) worst = rel;
    }
    return worst;
}

} // namespace lucgen::num
