#pragma once

#include <optional>
#include <string>
#include <vector>

#include "qsflow/quasispherical.hpp"

namespace qsflow {

// Mass diagnostics along a band. m(t) = integral of (H_eta - H_u) dsigma_t
// interpolates between the Brown-York-type value at the inner boundary and
// the ADM limit; its derivative is the dissipation
// d(t) = -integral of K (eta - u)^2 u^{-1} dsigma_t <= 0.
struct MassSeries {
    int ambient_dim = 3;
    std::vector<double> t;
    std::vector<double> area_radius;
    std::vector<double> m;
    std::vector<double> dissipation;
    std::vector<double> m_dot; // discrete derivative of m
    double brown_york_raw = 0.0;
    std::optional<double> brown_york_normalized; // raw / 8 pi when n = 3
    std::optional<double> adm_estimate;
    std::vector<double> junction_jump; // |m_left - m_right| at each junction
};

MassSeries mass_function(const FoliationRecord& record, const LapseSolution& solution);

struct MonotonicityReport {
    bool pass = false;
    double tau_mono = 0.0;          // 1e-6 |m(t0)| + 1e-10
    double max_positive_jump = 0.0; // max over k of m_{k+1} - m_k
    double max_rel_mismatch = 0.0;  // of discrete dm/dt vs dissipation at midpoints
    double dissipation_floor = 0.0; // intervals with |d| below this are skipped
    std::size_t intervals_checked = 0;
};

MonotonicityReport monotonicity_report(const MassSeries& series, double mismatch_tol = 0.05,
                                       double dissipation_floor = 1e-6);

struct BrownYork {
    double raw = 0.0; // integral of (H_hat - H) dsigma
    std::optional<double> normalized;
};

BrownYork brown_york(const ScalarField& H_hat, const ScalarField& H, const MetricField& metric,
                     int ambient_dim);

// Extrapolated limit of m(t): fit m = m_inf + a / r over the last third of the
// band (r the area radius). Requires outer radius >= 10x inner and a monotone
// tail. Returns m_inf / 8 pi for n = 3, raw m_inf otherwise.
double adm_estimate(const MassSeries& series);

// CSV columns: t, area_radius, m, dissipation, m_discrete_derivative
void export_mass_csv(const MassSeries& series, const std::string& path);

} // namespace qsflow
