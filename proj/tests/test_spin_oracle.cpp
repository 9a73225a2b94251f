#include "doctest.h"

#include <cmath>

#include "wiresoup/spin_oracle.hpp"

using namespace wiresoup;

namespace {

SpinSpec constant_spec(const Graph& g, std::uint32_t N, double J, std::vector<double> field = {}) {
    return {N, std::vector<double>(g.num_edges(), J), std::move(field)};
}

}  // namespace

TEST_CASE("sphere moments") {
    CHECK(sphere_moment(3, {}) == doctest::Approx(1.0));
    CHECK(sphere_moment(2, {1}) == doctest::Approx(0.5));
    CHECK(sphere_moment(3, {1}) == doctest::Approx(1.0 / 3.0));
    CHECK(sphere_moment(3, {2}) == doctest::Approx(1.0 / 5.0));
    CHECK(sphere_moment(1, {4}) == doctest::Approx(1.0));
    // E[φ1^2 φ2^2] on S^2 is 1/15
    CHECK(sphere_moment(3, {1, 1}) == doctest::Approx(1.0 / 15.0));
    for (std::uint32_t N = 1; N <= 5; ++N) {
        double total = 0.0;
        for (std::uint32_t i = 0; i < N; ++i) {
            std::vector<std::uint32_t> h(N, 0);
            h[i] = 1;
            total += sphere_moment(N, h);
        }
        CHECK(total == doctest::Approx(1.0).epsilon(1e-14));
    }
    CHECK(sphere_moment_full(3, {1, 1, 0}) == 0.0);
    CHECK(sphere_moment_full(3, {2, 2, 0}) == doctest::Approx(1.0 / 15.0));
    CHECK_THROWS_AS(sphere_moment(2, {1, 1, 1}), std::invalid_argument);
}

TEST_CASE("single edge closed forms") {
    const auto g = single_edge_graph();
    for (double J : {0.0, 0.1, 0.3, 0.7}) {
        CHECK(spin_partition_exact(g, constant_spec(g, 1, J)).value == doctest::Approx(std::cosh(2 * J)).epsilon(1e-12));
        CHECK(spin_partition_exact(g, constant_spec(g, 2, J)).value ==
              doctest::Approx(std::cyl_bessel_i(0.0, 2 * J)).epsilon(1e-10));
        const double n3 = J == 0.0 ? 1.0 : std::sinh(2 * J) / (2 * J);
        CHECK(spin_partition_exact(g, constant_spec(g, 3, J)).value == doctest::Approx(n3).epsilon(1e-10));
        // <cos θ0 sin θ0 cos θ1 sin θ1> = I_2(2J) / (8 I_0(2J))
        const double corr = std::cyl_bessel_i(2.0, 2 * J) / (8 * std::cyl_bessel_i(0.0, 2 * J));
        CHECK(spin_correlation_exact(g, constant_spec(g, 2, J), {0, 1}).value ==
              doctest::Approx(corr).epsilon(1e-9).scale(1e-3));
        CHECK(spin_series(g, constant_spec(g, 2, J), {0, 1}).value /
                  spin_series(g, constant_spec(g, 2, J)).value ==
              doctest::Approx(corr).epsilon(1e-9).scale(1e-3));
    }
}

TEST_CASE("single site with boundary closed forms") {
    const auto g = build_hypercubic_with_boundary(0, 1);
    for (double J : {0.15, 0.25}) {
        // two boundary edges: exponent 2√2 J (cos θ + sin θ) = 4J cos(θ - π/4)
        const double Z = std::cyl_bessel_i(0.0, 4 * J);
        CHECK(spin_partition_exact(g, constant_spec(g, 2, J)).value == doctest::Approx(Z).epsilon(1e-10));
        CHECK(spin_series(g, constant_spec(g, 2, J)).value == doctest::Approx(Z).epsilon(1e-10));
        const double c = 0.5 * std::cyl_bessel_i(2.0, 4 * J) / Z;
        CHECK(spin_correlation_exact(g, constant_spec(g, 2, J), {0}).value == doctest::Approx(c).epsilon(1e-9));
        CHECK(spin_correlation_exact(g, constant_spec(g, 1, J), {}).value == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("series agrees with quadrature at N = 2") {
    for (auto name : {"path2", "triangle", "square"}) {
        const auto g = fixture_graph(name);
        for (double J : {0.1, 0.3}) {
            const auto spec = constant_spec(g, 2, J);
            CHECK(spin_series(g, spec).value == doctest::Approx(spin_quadrature(g, spec).value).epsilon(1e-9));
            const std::vector<VertexId> sites{0, g.num_interior() - 1};
            CHECK(spin_series(g, spec, sites).value ==
                  doctest::Approx(spin_quadrature(g, spec, sites).value).epsilon(1e-8).scale(1e-3));
        }
    }
    const auto b = build_hypercubic_with_boundary(0, 2);
    const auto spec = constant_spec(b, 2, 0.2);
    CHECK(spin_series(b, spec, {0}).value == doctest::Approx(spin_quadrature(b, spec, {0}).value).epsilon(1e-9));
}

TEST_CASE("rotating the boundary vector leaves Z unchanged") {
    const auto g = build_hypercubic_with_boundary(0, 2);
    const double s2 = std::sqrt(2.0), s3 = std::sqrt(3.0);
    CHECK(spin_partition_exact(g, constant_spec(g, 2, 0.2, {s2, 0.0})).value ==
          doctest::Approx(spin_partition_exact(g, constant_spec(g, 2, 0.2)).value).epsilon(1e-10));
    CHECK(spin_series(g, constant_spec(g, 3, 0.2, {s3, 0.0, 0.0})).value ==
          doctest::Approx(spin_series(g, constant_spec(g, 3, 0.2)).value).epsilon(1e-10));
    CHECK_THROWS_AS(spin_partition_exact(g, constant_spec(g, 2, 0.2, {1.0})), std::invalid_argument);
}

TEST_CASE("input validation") {
    const auto g = single_edge_graph();
    CHECK_THROWS_AS(spin_partition_exact(g, constant_spec(g, 0, 0.1)), std::invalid_argument);
    CHECK_THROWS_AS(spin_correlation_exact(g, constant_spec(g, 1, 0.1), {0}), std::invalid_argument);
    CHECK_THROWS_AS(spin_partition_exact(g, {2, {0.1, 0.2}, {}}), std::invalid_argument);
    CHECK_THROWS_AS(spin_partition_exact(build_hypercubic(1, 2), constant_spec(build_hypercubic(1, 2), 2, 0.1)),
                    std::length_error);
    CHECK(relative_difference(0.0, 0.0) == 0.0);
    CHECK(relative_difference(1.0, 1.1) == doctest::Approx(0.1 / 1.1));
}

TEST_CASE("spin and wire partition functions agree on fixtures") {
    for (auto name : {"single_edge", "path2", "triangle", "square"})
        for (std::uint32_t N : {1u, 2u, 3u})
            for (double J : {0.1, 0.3}) {
                const auto r = verify_equivalence_Z(fixture_graph(name), N, J);
                INFO(r.instance << " spin " << r.lhs << " wire " << r.rhs);
                CHECK(r.pass());
                CHECK(r.rhs_error / r.rhs < 1e-8);
            }
}

TEST_CASE("spin and wire correlations agree at diagonal sites") {
    for (double J : {0.2, 0.3}) {
        auto r = verify_equivalence_corr(single_edge_graph(), 2, J, {0, 1});
        INFO(r.instance << " spin " << r.lhs << " wire " << r.rhs);
        CHECK(r.pass());
        r = verify_equivalence_corr(square_graph(), 2, J, {0, 2});
        INFO(r.instance << " spin " << r.lhs << " wire " << r.rhs);
        CHECK(r.pass());
        r = verify_equivalence_corr(square_graph(), 3, J, {0, 2});
        INFO(r.instance << " spin " << r.lhs << " wire " << r.rhs);
        CHECK(r.pass());
    }
}

TEST_CASE("boundary identities") {
    for (std::uint32_t d : {1u, 2u})
        for (double J : {0.25, 0.15})
            for (std::uint32_t N : {2u, 3u}) {
                const auto [z, c] = verify_boundary_identity(build_hypercubic_with_boundary(0, d), N, J, 0);
                INFO(z.instance << " spin " << z.lhs << " wire " << z.rhs);
                INFO(c.instance << " spin " << c.lhs << " wire " << c.rhs);
                CHECK(z.pass());
                CHECK(c.pass());
            }
}

TEST_CASE("XY Metropolis matches the single-site closed form") {
    const auto g = build_hypercubic_with_boundary(0, 1);
    const double J = 0.25;
    const double exact = 0.5 * std::cyl_bessel_i(2.0, 4 * J) / std::cyl_bessel_i(0.0, 4 * J);
    XYSettings s;
    s.seed = 7;
    s.sweeps = 200000;
    s.burn_in = 2000;
    const auto r = xy_metropolis(g, J, 0, s);
    CHECK(std::abs(r.phi12.mean - exact) < 4 * r.phi12.error);
    CHECK(std::abs(r.half_cos2.mean - exact) < 4 * r.half_cos2.error);
    CHECK(r.acceptance > 0.2);
    CHECK(r.acceptance < 0.9);
    const auto again = xy_metropolis(g, J, 0, s);
    CHECK(again.phi12.mean == r.phi12.mean);
}
