#pragma once

#include <array>
#include <memory>
#include <string>
#include <vector>

#include "qsflow/grid.hpp"

namespace qsflow {

// Star-shaped hypersurface given as a radial graph rho(omega) * omega over the
// sphere grid, about the star center.
struct RadialSurface {
    std::shared_ptr<const SphereGrid> grid;
    ScalarField rho;
    std::array<double, 4> center{0.0, 0.0, 0.0, 0.0}; // first ambient_dim entries used

    void check_valid() const; // rho finite and strictly positive
};

RadialSurface make_sphere(std::shared_ptr<const SphereGrid> grid, double radius);
// spheroid with equatorial semi-axis a (multiplicity n-1) and polar semi-axis c
RadialSurface make_ellipsoid(std::shared_ptr<const SphereGrid> grid, double a, double c);
// rho = base * (1 + amplitude * T_mode(cos theta)), smooth axisymmetric bump
RadialSurface make_perturbed_sphere(std::shared_ptr<const SphereGrid> grid, double base,
                                    double amplitude, int mode);

// Extrinsic geometry of a leaf. Outward orientation: the unit sphere has
// H = n-1. The Gauss value 2K is the enforced identity H^2 - |h|^2, not an
// independent computation.
struct LeafGeometry {
    MetricField first_form;  // g
    MetricField second_form; // h, same component layout as g
    std::vector<double> normal; // 3 per node; axisymmetric: (e_perp, e_axis, 0) meridian components
    ScalarField mean_curvature;      // H = tr_g h
    ScalarField second_form_norm2;   // |h|^2
    ScalarField scalar2;             // 2K = H^2 - |h|^2
    ScalarField radial_projection;   // <nu, omega> = 1/v, v the graph gradient factor
    // principal curvatures per node: full2d ascending pair; axisymmetric
    // (meridian, parallel) with the parallel one carrying multiplicity n-2
    std::vector<double> kappa;

    std::size_t node_count() const { return mean_curvature.size(); }
    int ambient_dim() const { return first_form.grid->ambient_dim(); }

    // all n-1 principal curvatures at a node, ascending
    void principal_curvatures(std::size_t node, std::vector<double>& out) const;
    double kappa_min() const; // over all nodes and directions
    double kappa_max() const;
};

LeafGeometry forms_from_radial(const RadialSurface& surface);

// Geometry of an axisymmetric immersion given by its meridian curve
// (perp, axial) sampled at the grid colatitudes. Used by the flow-band
// recording, which follows normal-flow material points off the radial rays.
LeafGeometry forms_from_meridian(const std::shared_ptr<const SphereGrid>& grid,
                                 const std::vector<double>& perp,
                                 const std::vector<double>& axial);

// (max rho - min rho) / mean rho; arithmetic node mean
double roundness(const RadialSurface& surface);

double mean_radius(const RadialSurface& surface);

// Intrinsic scalar curvature (as 2K = R) of an axisymmetric leaf metric,
// computed from the metric alone via the warped-profile formula. Used as the
// independent cross-check of the Gauss identity.
ScalarField intrinsic_scalar2_axisymmetric(const MetricField& g);

// Intrinsic 2K of a full2d metric by the Brioschi formula. The formula
// divides by det(g)^2 ~ sin^4(theta), so its truncation error grows like
// (dtheta / sin theta)^2 toward the poles; rows with theta closer than
// pole_margin (radians) to a pole are copied from the nearest computed row
// and the result is only quantitative on the interior belt.
ScalarField intrinsic_scalar2_full2d(const MetricField& g, double pole_margin = 0.4);

// Snapshot file: one header line (mode, n, resolutions, center), then one rho
// value per line in row-major node order, >= 12 significant digits.
void save_surface(const RadialSurface& surface, const std::string& path);
RadialSurface load_surface(const std::string& path);

} // namespace qsflow
