#include "qsflow/oracles.hpp"

#include <cmath>
#include <string>

namespace qsflow {
namespace oracles {

double schwarzschild_lapse(double m, double r, int ambient_dim) {
    if (ambient_dim < 3)
        fail(ErrorCode::invalid_argument, "schwarzschild_lapse: ambient dimension must be >= 3");
    if (!(m > 0.0))
        fail(ErrorCode::invalid_argument, "schwarzschild_lapse: mass must be positive");
    const double w = 1.0 - 2.0 * m / std::pow(r, ambient_dim - 2);
    if (!(w > 0.0))
        fail(ErrorCode::domain_failure,
             "schwarzschild_lapse: r = " + std::to_string(r) + " is inside the horizon");
    return 1.0 / std::sqrt(w);
}

double sphere_flow_radius(double r0, double t, int ambient_dim) {
    if (!(r0 > 0.0) || t < 0.0)
        fail(ErrorCode::invalid_argument, "sphere_flow_radius: need r0 > 0 and t >= 0");
    return r0 * std::exp(t / (ambient_dim - 2));
}

double SphereBandOracle::radius(double t) const {
    return mode == BandMode::distance ? r0 + t : sphere_flow_radius(r0, t, ambient_dim);
}

SphereBandOracle::Fields SphereBandOracle::fields(double t) const {
    const int n = ambient_dim;
    const double r = radius(t);
    Fields f;
    f.g_scale = r * r;
    f.K = 0.5 * (n - 1) * (n - 2) / (r * r);
    if (mode == BandMode::distance) {
        f.eta = 1.0;
        f.H1 = (n - 1) / r;
        f.h1sq = (n - 1) / (r * r);
        f.H1p = -f.h1sq;
    } else {
        // 1/f on a round sphere is r/(n-2); in flow time H1 is constant
        f.eta = r / (n - 2);
        f.H1 = static_cast<double>(n - 1) / (n - 2);
        f.h1sq = f.H1 * f.H1 / (n - 1); // (n-1) kappa^2 eta^2 with kappa = 1/r
        f.H1p = 0.0;
    }
    return f;
}

} // namespace oracles
} // namespace qsflow
