#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "minmax/montecarlo.hpp"
#include "oracles.hpp"

using namespace minmax;
using Catch::Approx;

TEST_CASE("estimate: zero covariance gives the deterministic statistic") {
    GaussianMatrixSpec spec = GaussianMatrixSpec::zero({2, 3});
    spec.mean << 1, 5, 2, 0, 4, 3;
    const auto stats = estimate_min_sum_topk(spec, 2, 100, {1, 0});
    CHECK(stats.mean == 7.0);  // min(row sums of top-2) = min(9, 7)
    CHECK(stats.stderr_of_mean == 0.0);
    CHECK(stats.min == stats.max);
}

TEST_CASE("estimate: scalar spec mean within 4 standard errors") {
    GaussianMatrixSpec spec = GaussianMatrixSpec::iid({1, 1});
    spec.mean[0] = 0.7;
    const auto stats = estimate_min_sum_topk(spec, 1, 20000, {2, 0});
    CHECK(std::abs(stats.mean - 0.7) <= 4.0 * stats.stderr_of_mean);
}

TEST_CASE("estimate: E max of two iid standard normals is 1/sqrt(pi)") {
    const auto spec = GaussianMatrixSpec::iid({1, 2});
    const auto stats = estimate_min_sum_topk(spec, 1, 100000, {3, 0});
    const double closed_form = 1.0 / std::sqrt(M_PI);
    // independent quadrature oracle: E max = int z d/dz[Phi(z)^2]
    const double quadrature = oracles::simpson(
        [](double z) { return 2.0 * z * oracles::normal_cdf(z) * oracles::normal_pdf(z); },
        -10.0, 10.0, 4000);
    CHECK(quadrature == Approx(closed_form).margin(1e-9));
    CHECK(std::abs(stats.mean - closed_form) <= 4.0 * stats.stderr_of_mean);
}

TEST_CASE("minmax sample: determinism and agreement with the estimator") {
    const auto spec = GaussianMatrixSpec::iid({1, 3});
    const auto a = minmax_sample(spec, 5000, {5, 1});
    const auto b = minmax_sample(spec, 5000, {5, 1});
    CHECK(a.values == b.values);

    const auto stats = estimate_min_sum_topk(spec, 1, 5000, {5, 1});
    CHECK(stats_of(a.values).mean == Approx(stats.mean).margin(1e-12));

    GaussianMatrixSpec constant = GaussianMatrixSpec::zero({2, 2});
    constant.mean << 3, 1, 2, 0;
    const auto c = minmax_sample(constant, 10, {6, 0});
    for (const double v : c.values) CHECK(v == 2.0);
}

TEST_CASE("ks distance: examples") {
    EmpiricalSample a{{1.0, 2.0, 3.0}, {}};
    CHECK(ks_distance(a, a) == 0.0);
    EmpiricalSample zero{{0.0}, {}};
    EmpiricalSample one{{1.0}, {}};
    CHECK(ks_distance(zero, one) == 1.0);
    EmpiricalSample b{{1.5, 2.5, 3.5}, {}};
    CHECK(ks_distance(a, b) == Approx(1.0 / 3.0).margin(1e-15));
    CHECK_THROWS_AS(ks_distance(a, EmpiricalSample{}), std::domain_error);
}

TEST_CASE("ks distance: symmetry, triangle, monotone invariance") {
    std::mt19937_64 gen(17);
    std::normal_distribution<double> normal(0.0, 1.0);
    auto draw = [&](std::size_t count, double shift) {
        EmpiricalSample s;
        s.values.resize(count);
        for (auto& v : s.values) v = normal(gen) + shift;
        std::sort(s.values.begin(), s.values.end());
        return s;
    };
    for (int trial = 0; trial < 20; ++trial) {
        const auto a = draw(200, 0.0);
        const auto b = draw(150, 0.3);
        const auto c = draw(170, -0.2);
        CHECK(ks_distance(a, b) == ks_distance(b, a));
        CHECK(ks_distance(a, b) <= ks_distance(a, c) + ks_distance(c, b) + 1e-12);

        auto transform = [](EmpiricalSample s) {
            for (auto& v : s.values) v = std::atan(v) + 2.0 * v;
            return s;
        };
        CHECK(ks_distance(transform(a), transform(b)) == ks_distance(a, b));
    }
}

TEST_CASE("levy concentration: examples and density oracle") {
    EmpiricalSample constant{{2.0, 2.0, 2.0}, {}};
    CHECK(levy_concentration(constant, 0.01) == 1.0);
    CHECK(levy_concentration(constant, 10.0) == 1.0);

    EmpiricalSample split{{0.0, 10.0}, {}};
    CHECK(levy_concentration(split, 1.0) == 0.5);
    CHECK_THROWS_AS(levy_concentration(split, 0.0), std::domain_error);

    // standard normal: levy(eps) ~ 2*eps*phi(0) = eps*sqrt(2/pi)
    const std::uint64_t reps = 1000000;
    std::vector<double> values(reps);
    auto eng = rng::engine_for({99, 0});
    rng::fill_normals(eng, values);
    std::sort(values.begin(), values.end());
    const EmpiricalSample normal_sample{std::move(values), {99, 0}};
    const double eps = 0.05;
    const double expected = eps * std::sqrt(2.0 / M_PI);
    CHECK(levy_concentration(normal_sample, eps) ==
          Approx(expected).margin(4.0 * std::sqrt(expected / static_cast<double>(reps)) + 1e-4));
}

TEST_CASE("sharpness constructions collapse as stated") {
    const auto columns = sharpness_columns_spec(3, 4);
    CHECK_NOTHROW(columns.validate());
    const auto column_draws = sample(columns, {7, 0}, 50);
    for (const auto& draw : column_draws) {
        for (int i2 = 1; i2 < 4; ++i2) CHECK(draw.col(i2) == draw.col(0));
        for (int k = 1; k <= 4; ++k)
            CHECK(min_sum_topk(draw, k) == Approx(k * draw.col(0).minCoeff()).margin(1e-12));
    }

    const auto rows = sharpness_rows_spec(3, 6, 2);
    CHECK_NOTHROW(rows.validate());
    const auto row_draws = sample(rows, {8, 0}, 50);
    for (const auto& draw : row_draws) {
        const double reduced_max = draw.row(0).head(3).maxCoeff();
        CHECK(min_sum_topk(draw, 2) == Approx(2.0 * reduced_max).margin(1e-12));
    }
    CHECK_THROWS_AS(sharpness_rows_spec(2, 5, 2), std::domain_error);
}

TEST_CASE("assumption (A) probe") {
    CHECK(assumption_A_check(GaussianMatrixSpec::iid({3, 3}), 10000, {11, 0}));
    CHECK_FALSE(assumption_A_check(sharpness_columns_spec(2, 3), 100, {12, 0}));
    CHECK_FALSE(assumption_A_check(GaussianMatrixSpec::zero({2, 2}), 10, {13, 0}));
}
