#pragma once

#include "qsflow/errors.hpp"

namespace qsflow {
namespace oracles {

// Closed-form references on concentric spheres, exposed in the library
// surface so the verify command can run them end to end.

// u = (1 - 2m / r^{n-2})^{-1/2}; solves the rotationally symmetric reduction
// u' = (n-2)(u - u^3) / (2r) along the distance band r = r0 + t.
double schwarzschild_lapse(double m, double r, int ambient_dim = 3);

// radius of the round solution of the H/R flow: r0 e^{t/(n-2)}
double sphere_flow_radius(double r0, double t, int ambient_dim = 3);

enum class BandMode { distance, hr_flow };

struct SphereBandOracle {
    int ambient_dim = 3;
    double r0 = 1.0;
    BandMode mode = BandMode::distance;

    struct Fields {
        double g_scale; // g_t = g_scale * round unit metric
        double H1;
        double h1sq;
        double K;
        double H1p;
        double eta;
    };
    Fields fields(double t) const;
    double radius(double t) const;
};

} // namespace oracles
} // namespace qsflow
