#include "doctest.h"

#include <cmath>

#include "wiresoup/pd.hpp"

using namespace wiresoup;

TEST_CASE("stick breaking") {
    std::mt19937_64 rng(1);
    for (double theta : {0.01, 0.5, 1.0, 3.0}) {
        for (int i = 0; i < 200; ++i) {
            const auto p = stick_breaking_sample(theta, rng);
            CHECK(p.total() == doctest::Approx(1.0).epsilon(1e-12));
            CHECK(std::is_sorted(p.parts.begin(), p.parts.end(), std::greater<>()));
            for (double z : p.parts) CHECK(z > 0.0);
            CHECK(p.generation.size() == p.parts.size());
        }
    }
    // θ → 0: the first stick takes nearly everything
    double first = 0.0;
    for (int i = 0; i < 1000; ++i) first += stick_breaking_sample(1e-3, rng).parts[0];
    CHECK(first / 1000 > 0.99);

    for (double theta : {1.0, 2.5}) {
        std::vector<double> y;
        for (int i = 0; i < 100000; ++i) y.push_back(stick_breaking_sample(theta, rng).generation[0]);
        const auto est = iid_mean(y);
        CHECK(std::abs(est.mean - 1.0 / (1.0 + theta)) < 3 * est.error);
    }
    CHECK_THROWS_AS(stick_breaking_sample(0.0, rng), std::invalid_argument);
}

TEST_CASE("m_theta closed form") {
    CHECK(m_theta(SetPartition{{{0, 1}}}, 1.0) == doctest::Approx(0.5));
    CHECK(m_theta(SetPartition{{{0, 1, 2, 3}}}, 1.0) == doctest::Approx(0.25));
    CHECK(m_theta(SetPartition{{{0, 1}}}, 2.0) == doctest::Approx(1.0 / 3.0));
    CHECK(m_theta(SetPartition{{{0}, {1}}}, 1.0) == doctest::Approx(0.5));
    for (double theta : {0.3, 1.0, 2.0, 3.0, 7.5})
        for (std::uint32_t k = 1; k <= 5; ++k) {
            double total = 0.0;
            for (const auto& X : enumerate_set_partitions(k)) total += m_theta(X, theta);
            CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
        }
}

TEST_CASE("even partition probability") {
    CHECK(m_theta_even(1, 1.0) == doctest::Approx(0.5));
    CHECK(m_theta_even(2, 1.0) == doctest::Approx(3.0 / 8.0));
    CHECK(m_theta_even(1, 2.0) == doctest::Approx(1.0 / 3.0));
    for (std::uint32_t k = 1; k <= 6; ++k) {
        double df = 1.0, fact = 1.0;
        for (std::uint32_t i = 1; i <= k; ++i) {
            df *= 2.0 * i - 1;
            fact *= i;
        }
        CHECK(m_theta_even(k, 1.0) == doctest::Approx(df / (std::pow(2.0, k) * fact)).epsilon(1e-12));
    }
    for (double theta : {0.5, 1.0, 2.0, 3.0, 4.5})
        for (std::uint32_t k = 1; k <= 3; ++k) {
            double total = 0.0;
            for (const auto& X : enumerate_even_partitions(2 * k)) total += m_theta(X, theta);
            CHECK(m_theta_even(k, theta) == doctest::Approx(total).epsilon(1e-12));
        }
}

TEST_CASE("induced partitions of uniform points") {
    std::mt19937_64 rng(2);
    for (int i = 0; i < 100; ++i) CHECK(sample_induced_partition(1.0, 1, rng).blocks.size() == 1);
    const int n = 100000;
    double same = 0.0, even = 0.0;
    for (int i = 0; i < n; ++i) {
        same += sample_induced_partition(1.0, 2, rng).blocks.size() == 1;
        even += sample_induced_partition(1.0, 4, rng).is_even();
    }
    same /= n;
    even /= n;
    CHECK(std::abs(same - 0.5) < 3 * std::sqrt(0.25 / n));
    CHECK(std::abs(even - 3.0 / 8) < 3 * std::sqrt(3.0 / 8 * 5.0 / 8 / n));
}

TEST_CASE("Φ series") {
    for (double theta : {0.5, 1.0, 2.0, 3.0}) {
        CHECK(phi_series(0.0, theta).value == 1.0);
        CHECK(phi_series(1.3, theta).value == phi_series(-1.3, theta).value);
        for (std::uint32_t k = 1; k <= 3; ++k) {
            // 2k-th derivative at 0 against the even partition sum
            double fact = 1.0;
            for (std::uint32_t i = 1; i <= 2 * k; ++i) fact *= i;
            CHECK(fact * phi_coefficient(k, theta) == doctest::Approx(m_theta_even(k, theta)).epsilon(1e-12));
        }
        const auto s = phi_series(2.0, theta);
        CHECK(s.remainder < 1e-14 * s.value);
    }
    // θ = 2: Z is uniform-like in the first stick; compare against direct summation
    double direct = 0.0;
    for (int n = 0; n < 60; ++n)
        direct += std::exp(std::lgamma(n + 1.0) - std::lgamma(n + 1.0) - std::lgamma(2.0 * n + 2.0)) * std::pow(1.5, 2 * n);
    CHECK(phi_series(1.5, 2.0).value == doctest::Approx(direct).epsilon(1e-13));

    std::mt19937_64 rng(3);
    const auto mc = phi_monte_carlo(1.0, 1.0, 20000, rng);
    CHECK(std::abs(mc.mean - phi_series(1.0, 1.0).value) < 3 * mc.error);
}

TEST_CASE("split-merge events") {
    std::mt19937_64 rng(4);
    IntervalPartition one;
    one.parts = {1.0};
    int tries = 0;
    while (!split_merge_step(one, 2.0, 1.0, rng)) ++tries;
    CHECK(tries < 100);
    REQUIRE(one.parts.size() == 2);
    CHECK(one.total() == doctest::Approx(1.0).epsilon(1e-15));

    // the split point of (1.0) is uniform: the smaller part is uniform on (0, 1/2)
    std::vector<double> smaller;
    for (int i = 0; i < 20000; ++i) {
        IntervalPartition p;
        p.parts = {1.0};
        while (!split_merge_step(p, 2.0, 1.0, rng)) {
        }
        smaller.push_back(p.parts[1]);
    }
    const auto est = iid_mean(smaller);
    CHECK(std::abs(est.mean - 0.25) < 3 * est.error);

    auto p = stick_breaking_sample(1.0, rng);
    for (int i = 0; i < 5000; ++i) {
        split_merge_step(p, 2.0, 1.0, rng);
        CHECK(p.total() == doctest::Approx(1.0).epsilon(1e-12));
    }
    CHECK_THROWS_AS(split_merge_step(p, 0.0, 1.0, rng), std::invalid_argument);
}

TEST_CASE("split-merge keeps PD(α/2)") {
    std::mt19937_64 rng(5);
    for (double alpha : {2.0, 4.0}) {
        const double theta = alpha / 2;
        const int n = 4000;
        std::vector<double> after;
        for (int i = 0; i < n; ++i) {
            auto p = stick_breaking_sample(theta, rng);
            for (int e = 0; e < 300; ++e) split_merge_step(p, alpha, 1.0, rng);
            after.push_back(same_block_probability(p));
        }
        const auto est = iid_mean(after);
        CHECK(std::abs(est.mean - 1.0 / (1.0 + theta)) < 3 * est.error);
    }
}
