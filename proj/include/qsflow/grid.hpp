#pragma once

#include <memory>
#include <span>
#include <vector>

#include "qsflow/errors.hpp"

namespace qsflow {

enum class GridMode { full2d, axisymmetric };

// Staggered colatitude grid on S^{n-1} with midpoint quadrature weights.
// Nodes sit at theta_i = (i + 1/2) * pi / ntheta, so no node touches a pole.
//
// full2d:        the 2-sphere (ambient n = 3), nodes (theta_i, phi_j) in
//                row-major order, phi_j = 2*pi*j / nphi.
// axisymmetric:  fields depend on theta only; one node per colatitude ring,
//                each ring carrying the volume of its S^{n-2} fiber.
class SphereGrid {
public:
    static std::shared_ptr<const SphereGrid> full2d(int ntheta, int nphi);
    static std::shared_ptr<const SphereGrid> axisymmetric(int ambient_dim, int ntheta);

    GridMode mode() const { return mode_; }
    int ambient_dim() const { return dim_; }
    int ntheta() const { return ntheta_; }
    int nphi() const { return nphi_; }
    std::size_t node_count() const { return weight_.size(); }

    double dtheta() const { return dtheta_; }
    double dphi() const { return dphi_; }
    double theta(int i) const { return theta_[i]; }
    double phi(int j) const { return dphi_ * j; }
    double sin_theta(int i) const { return sin_theta_[i]; }
    double cos_theta(int i) const { return cos_theta_[i]; }

    std::size_t node(int i, int j) const {
        return static_cast<std::size_t>(i) * nphi_ + j;
    }
    int row_of(std::size_t node) const {
        return mode_ == GridMode::full2d ? static_cast<int>(node / nphi_)
                                         : static_cast<int>(node);
    }
    int col_of(std::size_t node) const {
        return mode_ == GridMode::full2d ? static_cast<int>(node % nphi_) : 0;
    }

    // Round quadrature weights; sum converges to |S^{n-1}| under refinement.
    std::span<const double> weights() const { return weight_; }
    double total_weight() const;

    // Volume of the unit S^{n-2} fiber (axisymmetric bookkeeping).
    double fiber_volume() const { return fiber_volume_; }

    bool same_layout(const SphereGrid& other) const;

protected:
    SphereGrid() = default;

private:
    GridMode mode_ = GridMode::axisymmetric;
    int dim_ = 3;
    int ntheta_ = 0;
    int nphi_ = 0; // 1 for axisymmetric so node(i, 0) works uniformly
    double dtheta_ = 0.0;
    double dphi_ = 0.0;
    double fiber_volume_ = 0.0;
    std::vector<double> theta_, sin_theta_, cos_theta_;
    std::vector<double> weight_;
};

double unit_sphere_volume(int dim); // |S^{dim-1}|

struct ScalarField {
    std::shared_ptr<const SphereGrid> grid;
    std::vector<double> values;

    ScalarField() = default;
    ScalarField(std::shared_ptr<const SphereGrid> g, std::vector<double> v)
        : grid(std::move(g)), values(std::move(v)) {}

    static ScalarField constant(std::shared_ptr<const SphereGrid> g, double value);

    std::size_t size() const { return values.size(); }
    double operator[](std::size_t i) const { return values[i]; }
    double& operator[](std::size_t i) { return values[i]; }

    double min() const;
    double max() const;
    bool finite() const;
};

// Leaf metric on the sphere grid, in angular coordinates.
// full2d: per node the symmetric 2x2 (tt, tp, pp) = (g_theta_theta, g_theta_phi, g_phi_phi).
// axisymmetric: tt = g_theta_theta, pp = coefficient of the round S^{n-2} block; tp unused.
struct MetricField {
    std::shared_ptr<const SphereGrid> grid;
    std::vector<double> tt, tp, pp;

    static MetricField round_metric(std::shared_ptr<const SphereGrid> g, double radius = 1.0);

    std::size_t size() const { return tt.size(); }
    bool positive_definite() const;
    // sqrt(det g) / sqrt(det round) at a node
    double volume_ratio(std::size_t node) const;
};

// dsigma quadrature weights: w_i * sqrt(det g)/sqrt(det round).
std::vector<double> dsigma_weights(const MetricField& g);

// integral of `field` against the metric volume form
double integrate(const ScalarField& field, const MetricField& metric);

// Divergence-form Laplace-Beltrami operator assembled on the grid.
//
// Built from the Dirichlet energy, so the stiffness matrix S is symmetric
// positive semi-definite with exactly vanishing row sums: constants are
// annihilated to rounding and sum_i (S u)_i = 0 for any u. The operator is
// Delta u = -(S u) / m with m the dsigma weights, hence self-adjoint in the
// discrete dsigma inner product.
class LaplaceBeltrami {
public:
    explicit LaplaceBeltrami(const MetricField& metric);

    // Refill coefficients for a new metric on the same grid (pattern reused).
    void rebuild(const MetricField& metric);

    const SphereGrid& grid() const { return *grid_; }
    const std::vector<double>& dsigma() const { return mass_; }

    void apply_stiffness(std::span<const double> u, std::span<double> out) const;
    void apply(std::span<const double> u, std::span<double> out) const; // Delta u
    ScalarField apply(const ScalarField& u) const;

    std::span<const double> stiffness_diagonal() const { return diag_; }

private:
    void build_pattern();

    std::shared_ptr<const SphereGrid> grid_;
    std::vector<double> mass_;

    // symmetric CSR, off-diagonal entries only; diagonal kept separately as
    // the negative row sum so constants are killed exactly
    std::vector<int> row_ptr_, col_;
    std::vector<double> val_;
    std::vector<double> diag_;

    // assembly slots (pattern fixed per grid)
    struct Face {
        int a, b;
        int slot_ab, slot_ba;
    };
    struct Cross {
        int up, dn, left, right;
        int slot[8];
    };
    std::vector<Face> theta_faces_, phi_faces_;
    std::vector<Cross> cross_; // full2d only, one per node
};

} // namespace qsflow
