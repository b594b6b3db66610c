#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "qsflow/grid.hpp"

using namespace qsflow;
constexpr double pi = std::numbers::pi;

namespace {

// smooth positive axisymmetric test metric (not a surface metric)
MetricField wavy_metric_axi(std::shared_ptr<const SphereGrid> g) {
    MetricField m;
    const int nt = g->ntheta();
    m.tt.resize(nt);
    m.pp.resize(nt);
    for (int i = 0; i < nt; ++i) {
        const double th = g->theta(i), s = g->sin_theta(i);
        m.tt[i] = 1.0 + 0.3 * std::cos(2.0 * th);
        m.pp[i] = s * s * (1.2 + 0.2 * std::cos(th) * std::cos(th));
    }
    m.grid = std::move(g);
    return m;
}

MetricField wavy_metric_full(std::shared_ptr<const SphereGrid> g) {
    MetricField m;
    const std::size_t n = g->node_count();
    m.tt.resize(n);
    m.tp.resize(n);
    m.pp.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        const int i = g->row_of(k), j = g->col_of(k);
        const double th = g->theta(i), ph = g->phi(j), s = g->sin_theta(i);
        m.tt[k] = 1.0 + 0.2 * std::sin(th) * std::cos(ph);
        m.pp[k] = s * s * (1.0 + 0.2 * std::sin(th) * std::sin(ph));
        m.tp[k] = 0.1 * s * s * std::sin(th) * std::sin(ph); // vanishes fast at poles
    }
    m.grid = std::move(g);
    return m;
}

double linf_vs_eigen(const ScalarField& lap, const ScalarField& u, double eigen) {
    double e = 0.0;
    for (std::size_t k = 0; k < u.size(); ++k)
        e = std::max(e, std::abs(lap[k] - eigen * u[k]));
    return e;
}

ScalarField cos_theta_field(std::shared_ptr<const SphereGrid> g) {
    ScalarField f(g, std::vector<double>(g->node_count()));
    for (std::size_t k = 0; k < f.size(); ++k) f[k] = g->cos_theta(g->row_of(k));
    return f;
}

} // namespace

TEST_CASE("grid construction and quadrature weights") {
    auto g = SphereGrid::full2d(64, 128);
    CHECK(g->node_count() == 8192);
    CHECK(std::abs(g->total_weight() - 4.0 * pi) < 1e-3 * 4.0 * pi);

    auto a3 = SphereGrid::axisymmetric(3, 256);
    CHECK(a3->node_count() == 256);
    CHECK(std::abs(a3->total_weight() - 4.0 * pi) < 1e-4 * 4.0 * pi);

    auto a4 = SphereGrid::axisymmetric(4, 128);
    CHECK(std::abs(a4->total_weight() - 2.0 * pi * pi) < 1e-3 * 2.0 * pi * pi);

    // |S^4| = 8 pi^2 / 3
    auto a5 = SphereGrid::axisymmetric(5, 128);
    CHECK(std::abs(a5->total_weight() - 8.0 * pi * pi / 3.0) < 1e-3 * 8.0 * pi * pi / 3.0);

    for (double w : g->weights()) CHECK(w > 0.0);
    for (int i = 0; i < a3->ntheta(); ++i) {
        CHECK(a3->theta(i) > 0.0);
        CHECK(a3->theta(i) < pi);
    }
}

TEST_CASE("grid resolution preconditions") {
    CHECK_THROWS_AS((void)SphereGrid::full2d(4, 128), Error);
    CHECK_THROWS_AS((void)SphereGrid::full2d(64, 6), Error);
    CHECK_THROWS_AS((void)SphereGrid::full2d(64, 127), Error); // odd nphi
    CHECK_THROWS_AS((void)SphereGrid::axisymmetric(2, 64), Error);
    CHECK_THROWS_AS((void)SphereGrid::axisymmetric(3, 4), Error);
}

TEST_CASE("quadrature converges at second order") {
    double err[2];
    int idx = 0;
    for (int nt : {64, 128}) {
        auto g = SphereGrid::axisymmetric(3, nt);
        err[idx++] = std::abs(g->total_weight() - 4.0 * pi);
    }
    CHECK(err[0] / err[1] > 3.0);
}

TEST_CASE("integrate against leaf metrics") {
    auto g = SphereGrid::axisymmetric(3, 256);
    const ScalarField one = ScalarField::constant(g, 1.0);

    const MetricField round = MetricField::round_metric(g);
    CHECK(integrate(one, round) == doctest::Approx(4.0 * pi).epsilon(1e-3));

    const MetricField scaled = MetricField::round_metric(g, 2.0);
    CHECK(integrate(one, scaled) == doctest::Approx(16.0 * pi).epsilon(1e-3));

    const ScalarField h = ScalarField::constant(g, 2.0); // H of the unit sphere
    CHECK(integrate(h, round) == doctest::Approx(8.0 * pi).epsilon(1e-3));

    auto other = SphereGrid::axisymmetric(3, 128);
    const ScalarField wrong = ScalarField::constant(other, 1.0);
    CHECK_THROWS_AS((void)integrate(wrong, round), Error);
}

TEST_CASE("laplacian annihilates constants exactly") {
    for (bool full : {false, true}) {
        auto g = full ? SphereGrid::full2d(32, 64)
                      : std::shared_ptr<const SphereGrid>(SphereGrid::axisymmetric(4, 64));
        const MetricField m = full ? wavy_metric_full(g) : wavy_metric_axi(g);
        LaplaceBeltrami op(m);
        const ScalarField c = ScalarField::constant(g, 1.0);
        const ScalarField lap = op.apply(c);
        for (std::size_t k = 0; k < lap.size(); ++k) CHECK(lap[k] == 0.0);
    }
}

TEST_CASE("laplacian eigenfunction refinement: cos theta on round spheres") {
    // Delta cos(theta) = -2 cos(theta) on the unit 2-sphere
    for (bool full : {false, true}) {
        double err[3];
        int idx = 0;
        for (int nt : {32, 64, 128}) {
            auto g = full ? SphereGrid::full2d(nt, 2 * nt)
                          : std::shared_ptr<const SphereGrid>(SphereGrid::axisymmetric(3, nt));
            LaplaceBeltrami op(MetricField::round_metric(g));
            const ScalarField u = cos_theta_field(g);
            err[idx++] = linf_vs_eigen(op.apply(u), u, -2.0);
        }
        CHECK(err[0] / err[1] > 3.0);
        CHECK(err[1] / err[2] > 3.0);
        CHECK(err[2] < 2e-3);
    }

    // metric scaling: radius r sphere has eigenvalue -2 / r^2
    auto g = SphereGrid::axisymmetric(3, 128);
    LaplaceBeltrami op(MetricField::round_metric(g, 3.0));
    const ScalarField u = cos_theta_field(g);
    CHECK(linf_vs_eigen(op.apply(u), u, -2.0 / 9.0) < 2e-4);
}

TEST_CASE("laplacian is self-adjoint and conservative in the dsigma inner product") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    for (bool full : {true, false}) {
        auto g = full ? SphereGrid::full2d(24, 48)
                      : std::shared_ptr<const SphereGrid>(SphereGrid::axisymmetric(3, 48));
        const MetricField m = full ? wavy_metric_full(g) : wavy_metric_axi(g);
        LaplaceBeltrami op(m);
        const auto& w = op.dsigma();

        ScalarField u(g, std::vector<double>(g->node_count()));
        ScalarField v(g, std::vector<double>(g->node_count()));
        for (std::size_t k = 0; k < u.size(); ++k) {
            u[k] = dist(rng);
            v[k] = dist(rng);
        }
        const ScalarField Lu = op.apply(u), Lv = op.apply(v);

        double a = 0.0, b = 0.0, scale = 0.0, div = 0.0;
        for (std::size_t k = 0; k < u.size(); ++k) {
            a += Lu[k] * v[k] * w[k];
            b += u[k] * Lv[k] * w[k];
            scale += std::abs(Lu[k] * v[k]) * w[k];
            div += Lu[k] * w[k]; // discrete divergence theorem
        }
        CHECK(std::abs(a - b) < 1e-12 * std::max(scale, 1.0));
        CHECK(std::abs(div) < 1e-11 * std::max(scale, 1.0));
    }
}

TEST_CASE("laplacian rejects an indefinite metric") {
    auto g = SphereGrid::axisymmetric(3, 32);
    MetricField m = MetricField::round_metric(g);
    m.pp[5] = -1.0;
    CHECK_THROWS_AS((void)LaplaceBeltrami(m), Error);
}
