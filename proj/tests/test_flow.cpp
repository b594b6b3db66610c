#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cmath>
#include <random>

#include "qsflow/flow.hpp"
#include "qsflow/oracles.hpp"

using namespace qsflow;

TEST_CASE("speed function values") {
    const std::array<double, 2> k11{1.0, 1.0};
    CHECK(speed_f(k11) == doctest::Approx(1.0).epsilon(1e-15));

    const std::array<double, 2> k22{2.0, 2.0};
    CHECK(speed_f(k22) == doctest::Approx(2.0).epsilon(1e-15)); // degree-one homogeneity

    const std::array<double, 3> boundary{2.0, 2.0, -1.0};
    CHECK(speed_f(boundary) == doctest::Approx(0.0).epsilon(1e-15));

    const std::array<double, 3> inside{2.0, 2.0, -0.5};
    CHECK(speed_f(inside) == doctest::Approx(8.0 / 7.0).epsilon(1e-15));

    const std::array<double, 2> bad{-1.0, -1.0};
    CHECK_THROWS_AS((void)speed_f(bad), Error);
}

TEST_CASE("cone classification with margins") {
    ConeMargins m;
    const std::array<double, 2> in{1.0, 1.0};
    CHECK(cone_check(in, &m) == ConeClass::inside);
    CHECK(m.trace == doctest::Approx(2.0));
    CHECK(m.quad == doctest::Approx(2.0));

    const std::array<double, 3> bd{2.0, 2.0, -1.0};
    CHECK(cone_check(bd, &m) == ConeClass::boundary);
    CHECK(m.trace == doctest::Approx(3.0));
    CHECK(m.quad == doctest::Approx(0.0));

    const std::array<double, 2> out{1.0, -2.0};
    CHECK(cone_check(out, &m) == ConeClass::outside);
    CHECK(m.trace == doctest::Approx(-1.0));
    CHECK(m.quad == doctest::Approx(-4.0));

    AdmissibleCone cone{4};
    CHECK(cone.contains(std::array<double, 3>{1.0, 1.0, 1.0}));
    CHECK(!cone.contains(std::array<double, 3>{2.0, 2.0, -1.0}));
}

TEST_CASE("cone properties: contains positive cone, symmetric, convex") {
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> pos(0.01, 3.0), any(-2.0, 2.0);
    for (int trial = 0; trial < 2000; ++trial) {
        const int d = 2 + static_cast<int>(rng() % 3);
        std::vector<double> a(d), b(d);
        for (int i = 0; i < d; ++i) a[i] = pos(rng);
        CHECK(cone_check(a) == ConeClass::inside); // positive cone inside

        for (int i = 0; i < d; ++i) {
            a[i] = any(rng);
            b[i] = any(rng);
        }
        std::vector<double> ap = a;
        std::swap(ap[0], ap[d - 1]); // permutation symmetry
        CHECK(cone_check(a) == cone_check(ap));

        if (cone_check(a) == ConeClass::inside && cone_check(b) == ConeClass::inside) {
            std::vector<double> mid(d);
            for (int i = 0; i < d; ++i) mid[i] = 0.5 * (a[i] + b[i]);
            CHECK(cone_check(mid) != ConeClass::outside); // convexity
        }
    }
}

TEST_CASE("speed function is homogeneous, monotone, concave (sampled)") {
    std::mt19937_64 rng(12345);
    std::uniform_real_distribution<double> box(-1.0, 1.0), cd(0.1, 10.0);
    for (int d = 2; d <= 4; ++d) {
        int got = 0;
        std::vector<double> k(d), kc(d);
        while (got < 500) {
            for (int i = 0; i < d; ++i) k[i] = box(rng);
            ConeMargins m;
            cone_check(k, &m);
            if (!(m.trace > 0.1) || !(m.quad > 0.02 * m.trace * m.trace)) continue;
            ++got;
            const double f0 = speed_f(k);
            CHECK(f0 > 0.0);

            const double c = cd(rng);
            for (int i = 0; i < d; ++i) kc[i] = c * k[i];
            CHECK(speed_f(kc) == doctest::Approx(c * f0).epsilon(1e-12));

            // monotonicity: forward differences positive
            for (int i = 0; i < d; ++i) {
                kc = k;
                kc[i] += 1e-6;
                const double fp = speed_f(kc);
                kc[i] -= 2e-6;
                CHECK((fp - speed_f(kc)) / 2e-6 > 0.0);
            }

            // concavity along random segments inside the cone
            std::vector<double> k2(d);
            for (int i = 0; i < d; ++i) k2[i] = box(rng);
            ConeMargins m2;
            cone_check(k2, &m2);
            if (m2.trace > 0.1 && m2.quad > 0.02 * m2.trace * m2.trace) {
                std::vector<double> mid(d);
                for (int i = 0; i < d; ++i) mid[i] = 0.5 * (k[i] + k2[i]);
                CHECK(speed_f(mid) >= 0.5 * (f0 + speed_f(k2)) - 1e-12);
            }
        }
    }
}

TEST_CASE("flow_step: euler update of a sphere") {
    auto g = SphereGrid::axisymmetric(3, 64);

    // 1/f = r on spheres, so one step moves the radius by dt * r
    const RadialSurface s1 = flow_step(make_sphere(g, 1.0), 1e-3);
    for (double v : s1.rho.values) CHECK(v == doctest::Approx(1.001).epsilon(1e-12));

    const RadialSurface s2 = flow_step(make_sphere(g, 2.0), 0.01);
    for (double v : s2.rho.values) CHECK(v == doctest::Approx(2.02).epsilon(1e-12));

    // inadmissible input: deep-necked surface falls outside the cone in n=3
    const RadialSurface bad = make_perturbed_sphere(g, 1.0, 0.8, 2);
    CHECK_THROWS_AS((void)flow_step(bad, 1e-3), Error);
}

TEST_CASE("run_flow: sphere follows r0 e^t") {
    auto g = SphereGrid::axisymmetric(3, 48);
    FlowControls fc;
    fc.t_max = 0.5;
    fc.record_dt = 0.1;
    const FlowTrajectory tr = run_flow(make_sphere(g, 1.0), fc);
    REQUIRE(tr.leaves.size() > 2);
    CHECK(tr.reached_convexity);
    CHECK(*tr.t_convex == 0.0);
    for (const auto& leaf : tr.leaves) {
        const double expect = oracles::sphere_flow_radius(1.0, leaf.t);
        CHECK(mean_radius(leaf.surface) == doctest::Approx(expect).epsilon(1e-3));
    }
    CHECK(roundness(tr.leaves.back().surface) < 1e-10);

    // times strictly increasing
    for (std::size_t k = 1; k < tr.leaves.size(); ++k)
        CHECK(tr.leaves[k].t > tr.leaves[k - 1].t);
}

TEST_CASE("run_flow: ellipsoid is already convex; flow rounds it") {
    auto g = SphereGrid::axisymmetric(3, 48);
    FlowControls fc;
    fc.until_convex = true;
    const FlowTrajectory tr = run_flow(make_ellipsoid(g, 1.0, 1.5), fc);
    CHECK(tr.reached_convexity);
    CHECK(*tr.t_convex == 0.0);

    FlowControls fc2;
    fc2.t_max = 1.5;
    fc2.record_dt = 0.5;
    const FlowTrajectory tr2 = run_flow(make_ellipsoid(g, 1.0, 1.5), fc2);
    CHECK(roundness(tr2.leaves.back().surface) <
          0.2 * roundness(tr2.leaves.front().surface));
}

TEST_CASE("run_flow: non-convex admissible dumbbell in R^4 reaches convexity") {
    auto g = SphereGrid::axisymmetric(4, 64);
    const RadialSurface dumbbell = make_perturbed_sphere(g, 1.3, 0.3 / 1.3, 2);
    const LeafGeometry geo = forms_from_radial(dumbbell);
    CHECK(geo.kappa_min() < 0.0); // genuinely non-convex start

    std::vector<double> kap;
    for (std::size_t k = 0; k < geo.node_count(); ++k) {
        geo.principal_curvatures(k, kap);
        CHECK(cone_check(kap) == ConeClass::inside);
    }

    FlowControls fc;
    fc.until_convex = true;
    fc.record_dt = 0.05;
    const FlowTrajectory tr = run_flow(dumbbell, fc);
    CHECK(tr.reached_convexity);
    CHECK(*tr.t_convex > 0.0);
    CHECK(forms_from_radial(tr.leaves.back().surface).kappa_min() > tau_convex);
}

TEST_CASE("run_flow rejects inadmissible initial data with the first bad node") {
    auto g = SphereGrid::axisymmetric(3, 64);
    const RadialSurface bad = make_perturbed_sphere(g, 1.0, 0.8, 2);
    FlowControls fc;
    fc.t_max = 0.1;
    try {
        (void)run_flow(bad, fc);
        CHECK(false);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::domain_failure);
        CHECK(std::string(e.what()).find("node") != std::string::npos);
    }
}
