#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "rdd/stats.hpp"

using namespace rdd;

TEST_CASE("normal raw moments") {
    auto [b2, b3, b4] = moments_b234(0.0, 1.0);
    CHECK(b2 == doctest::Approx(1.0));
    CHECK(b3 == doctest::Approx(0.0));
    CHECK(b4 == doctest::Approx(3.0));

    auto [c2, c3, c4] = moments_b234(1.0, 1.0);
    CHECK(c2 == doctest::Approx(2.0));
    CHECK(c3 == doctest::Approx(4.0));
    CHECK(c4 == doctest::Approx(10.0));
}

TEST_CASE("raw moments agree with Monte-Carlo draws") {
    Rng rng(11);
    Welford m2, m3, m4;
    const uint64_t trials = 1000000;
    for (uint64_t i = 0; i < trials; ++i) {
        double x = 0.7 + 1.3 * rng.gaussian();
        m2.add(x * x);
        m3.add(x * x * x);
        m4.add(x * x * x * x);
    }
    auto [b2, b3, b4] = moments_b234(0.7, 1.3);
    CHECK(std::abs(m2.mean() - b2) / b2 < 0.01);
    CHECK(std::abs(m3.mean() - b3) / std::abs(b3) < 0.01);
    CHECK(std::abs(m4.mean() - b4) / b4 < 0.01);
}

TEST_CASE("closed-form variance of z") {
    CHECK(closed_form_var_z(1) == doctest::Approx(2.0));
    CHECK(closed_form_var_z(10) == doctest::Approx(0.02));
    for (int n = 1; n < 100; ++n) {
        CHECK(closed_form_var_z(n + 1) < closed_form_var_z(n));
    }
}

TEST_CASE("closed-form variance of y and the ordering") {
    CHECK(closed_form_var_y(1, 1.0, 1.0) == doctest::Approx(6.0));
    CHECK(closed_form_var_y(4, 2.0, 1.0) == doctest::Approx(4.125));
    CHECK(closed_form_var_y(7, 0.0, 1.0) == doctest::Approx(closed_form_var_z(7)));
    Rng rng(3);
    for (int i = 0; i < 200; ++i) {
        int n = 1 + static_cast<int>(rng.uniform_int(50));
        double mu = rng.uniform(-3, 3);
        double sigma = rng.uniform(0.1, 3.0);
        CHECK(closed_form_var_y(n, mu, sigma) >= closed_form_var_z(n));
    }
}

TEST_CASE("z statistic point values") {
    std::vector<double> at_mean = {1.0, 1.0, 1.0};
    CHECK(z_statistic(at_mean, 1.0, 0.5) == 0.0);
    std::vector<double> one_sigma = {1.7};
    CHECK(z_statistic(one_sigma, 1.0, 0.7) == doctest::Approx(1.0));
    CHECK_THROWS_AS(z_statistic(one_sigma, 1.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(z_statistic(one_sigma, 1.0, -1.0), std::invalid_argument);
}

TEST_CASE("z is an unbiased estimator of 1/n") {
    // Mean of n=5 draws, 1e5 trials: MC mean of z within 3 SE of 0.2.
    Rng rng(21);
    const int n = 5;
    McResult res = mc_oracle(100000, rng, [&](Rng& r) {
        double acc = 0;
        for (int i = 0; i < n; ++i) acc += 1.0 + r.gaussian();
        std::vector<double> mean = {acc / n};
        return z_statistic(mean, 1.0, 1.0);
    });
    CHECK(std::abs(res.mean - 0.2) <= 3.0 * res.se);
}

TEST_CASE("y statistic point values") {
    CHECK(y_statistic_population(0.0, 0.0, 1.0) == 0.0);
    CHECK(y_statistic_population(1.5, 1.0, 1.0) == doctest::Approx(1.25));
    CHECK_THROWS_AS(y_statistic_population(1.0, 1.0, 0.0), std::invalid_argument);
}

TEST_CASE("y matches its closed-form mean and variance at n=2") {
    Rng rng(22);
    const int n = 2;
    Welford acc;
    for (int t = 0; t < 100000; ++t) {
        double s = 0;
        for (int i = 0; i < n; ++i) s += 1.0 + rng.gaussian();
        acc.add(y_statistic_population(s / n, 1.0, 1.0));
    }
    CHECK(std::abs(acc.mean() - 0.5) <= 3.0 * acc.se());
    // Var = 2/4 + 4/2 = 2.5 within 5%
    CHECK(std::abs(acc.variance() - 2.5) / 2.5 < 0.05);
}

TEST_CASE("concentration epsilon closed form") {
    // Independently evaluated with 30-digit arithmetic.
    CHECK(concentration_epsilon(10, 0.1) == doctest::Approx(0.26133064035023487).epsilon(1e-12));
    CHECK(concentration_epsilon(5, 0.05) == doctest::Approx(0.84992933758238).epsilon(1e-12));
    CHECK(concentration_epsilon(50, 0.1) == doctest::Approx(0.036910178867636).epsilon(1e-12));
    for (int n = 1; n < 200; ++n) {
        CHECK(concentration_epsilon(n + 1, 0.1) < concentration_epsilon(n, 0.1));
    }
    CHECK_THROWS_AS(concentration_epsilon(10, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(concentration_epsilon(10, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(concentration_epsilon(10, -0.5), std::invalid_argument);
}

TEST_CASE("mc_oracle of a constant has zero variance") {
    Rng rng(1);
    McResult res = mc_oracle(1000, rng, [](Rng&) { return 4.2; });
    CHECK(res.mean == doctest::Approx(4.2));
    CHECK(res.variance == 0.0);
    CHECK(res.trials == 1000);
}

TEST_CASE("mc_oracle recovers standard normal moments") {
    Rng rng(2);
    McResult res = mc_oracle(1000000, rng, [](Rng& r) { return r.gaussian(); });
    CHECK(std::abs(res.mean) <= 3.0 * res.se);
    CHECK(std::abs(res.variance - 1.0) < 0.01);
}

TEST_CASE("mc_oracle recovers chi-squared(1) moments") {
    Rng rng(3);
    McResult res = mc_oracle(1000000, rng, [](Rng& r) {
        double g = r.gaussian();
        return g * g;
    });
    CHECK(std::abs(res.mean - 1.0) < 0.01);
    CHECK(std::abs(res.variance - 2.0) / 2.0 < 0.02);
}

TEST_CASE("welford matches two-pass statistics") {
    Rng rng(9);
    for (int trial = 0; trial < 20; ++trial) {
        size_t n = 2 + rng.uniform_int(2000);
        std::vector<double> xs(n);
        for (auto& x : xs) x = rng.uniform(-50, 50) + 100.0 * rng.gaussian();
        Welford acc;
        for (double x : xs) acc.add(x);

        double mean = 0;
        for (double x : xs) mean += x;
        mean /= static_cast<double>(n);
        double var = 0;
        for (double x : xs) var += (x - mean) * (x - mean);
        var /= static_cast<double>(n - 1);

        CHECK(std::abs(acc.mean() - mean) <= 1e-9 * std::max(1.0, std::abs(mean)));
        CHECK(std::abs(acc.variance() - var) <= 1e-9 * std::max(1.0, var));
    }
}

TEST_CASE("rng streams are reproducible and restorable") {
    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
    Rng c(42);
    for (int i = 0; i < 37; ++i) c.gaussian();
    Rng d = Rng::restore(c.seed(), c.counter());
    for (int i = 0; i < 50; ++i) CHECK(c.gaussian() == d.gaussian());
    // distinct seeds diverge
    Rng e(43);
    CHECK(Rng(42).next_u64() != e.next_u64());
}
