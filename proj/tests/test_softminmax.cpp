#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "minmax/softminmax.hpp"
#include "oracles.hpp"

using namespace minmax;
using Catch::Approx;

namespace {

Matrix random_matrix(std::mt19937_64& gen, int n, int m, double scale = 1.0) {
    std::normal_distribution<double> normal(0.0, scale);
    Matrix x(n, m);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j) x(i, j) = normal(gen);
    return x;
}

}  // namespace

TEST_CASE("log_esym matches direct enumeration on tiny inputs") {
    // y = (1,2,3), k = 2: e_2 = 1*2 + 1*3 + 2*3 = 11
    const std::vector<double> logy = {std::log(1.0), std::log(2.0), std::log(3.0)};
    const auto table = log_esym(logy, 2);
    CHECK(table.full[0] == 0.0);
    CHECK(std::exp(table.full[1]) == Approx(6.0).epsilon(1e-12));
    CHECK(std::exp(table.full[2]) == Approx(11.0).epsilon(1e-12));
}

TEST_CASE("log_esym constant vector gives C(m,k)*c^k") {
    const int m = 7, k = 3;
    const double c = 1.7;
    const std::vector<double> logy(m, std::log(c));
    const auto table = log_esym(logy, k);
    const double expected = std::exp(log_binomial(m, k)) * std::pow(c, k);
    CHECK(std::exp(table.full[static_cast<std::size_t>(k)]) ==
          Approx(expected).epsilon(1e-12));
}

TEST_CASE("log_esym full and leave-out tables match brute-force subsets") {
    std::mt19937_64 gen(71);
    std::normal_distribution<double> normal(0.0, 1.0);
    const int m = 10, k = 4;
    std::vector<double> logy(m);
    for (auto& v : logy) v = normal(gen);

    Matrix row(1, m);
    for (int l = 0; l < m; ++l) row(0, l) = logy[static_cast<std::size_t>(l)];

    const auto table = log_esym(logy, k);
    for (int j = 0; j <= k; ++j) {
        const double brute = static_cast<double>(oracles::row_subset_sum(row, 0, 1.0, j));
        CHECK(std::exp(table.full[static_cast<std::size_t>(j)]) ==
              Approx(brute).epsilon(1e-10));
    }
    // leave-one-out tables are full tables of the reduced vector
    for (int drop = 0; drop < m; ++drop) {
        std::vector<double> reduced;
        for (int l = 0; l < m; ++l)
            if (l != drop) reduced.push_back(logy[static_cast<std::size_t>(l)]);
        const auto direct = log_esym(reduced, k - 1, false);
        for (int j = 0; j <= k - 1; ++j)
            CHECK(table.leave_one[static_cast<std::size_t>(drop)][static_cast<std::size_t>(j)] ==
                  Approx(direct.full[static_cast<std::size_t>(j)]).margin(1e-10));
    }
    CHECK_THROWS_AS(log_esym(logy, m + 1), std::domain_error);
}

TEST_CASE("f_value degenerate 1x1 equals the entry") {
    Matrix x(1, 1);
    x << 1.37;
    CHECK(f_value(x, {2.0, 0.7, 1}) == Approx(1.37).margin(1e-12));
}

TEST_CASE("f_value constant matrix closed form") {
    const int n = 4, m = 6, k = 2;
    const double c = -0.8, beta = 1.3, delta = 0.6;
    const Matrix x = Matrix::Constant(n, m, c);
    const double expected =
        k * c + log_binomial(m, k) / beta - std::log(static_cast<double>(n)) / (beta * delta);
    CHECK(f_value(x, {beta, delta, k}) == Approx(expected).epsilon(1e-12));
}

TEST_CASE("f_value matches exp-domain brute force") {
    std::mt19937_64 gen(12);
    const Matrix x = random_matrix(gen, 2, 3);
    const double got = f_value(x, {1.0, 1.0, 2});
    const double brute = oracles::f_bruteforce(x, 1.0, 1.0, 2);
    CHECK(got == Approx(brute).epsilon(1e-10));
    Matrix bad = x;
    bad(0, 0) = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(f_value(bad, {1.0, 1.0, 2}), std::domain_error);
}

TEST_CASE("min_sum_topk basic cases") {
    Matrix x(1, 3);
    x << 5, 1, 3;
    CHECK(min_sum_topk(x, 1) == 5.0);
    CHECK(min_sum_topk(x, 2) == 8.0);
    CHECK(min_sum_topk(x, 3) == 9.0);

    Matrix y(2, 2);
    y << 1, 2, 3, 0;
    CHECK(min_sum_topk(y, 1) == 2.0);

    std::mt19937_64 gen(5);
    const Matrix z = random_matrix(gen, 1, 8);
    std::vector<double> sorted(z.data(), z.data() + 8);
    std::sort(sorted.begin(), sorted.end());
    for (int k = 1; k <= 8; ++k) {
        double expect = 0.0;
        for (int h = 8 - k; h < 8; ++h) expect += sorted[static_cast<std::size_t>(h)];
        CHECK(min_sum_topk(z, k) == Approx(expect).margin(1e-12));
    }
}

TEST_CASE("weight tables: k = m collapses to the single full subset") {
    std::mt19937_64 gen(31);
    const Matrix x = random_matrix(gen, 3, 4);
    const auto table = weight_tables(x, {1.5, 0.8, 4});
    for (int i1 = 0; i1 < 3; ++i1) {
        for (int i2 = 0; i2 < 4; ++i2) CHECK(table.singles(i1, i2) == Approx(1.0).margin(1e-12));
        for (int a = 0; a < 4; ++a)
            for (int b = 0; b < 4; ++b)
                CHECK(table.pairs[static_cast<std::size_t>(i1)](a, b) ==
                      Approx(1.0).margin(1e-12));
    }
}

TEST_CASE("weight tables at the symmetric point") {
    const int n = 3, m = 5, k = 2;
    const Matrix x = Matrix::Zero(n, m);
    const auto table = weight_tables(x, {2.0, 0.5, k});
    for (int i1 = 0; i1 < n; ++i1) {
        CHECK(table.q[i1] == Approx(static_cast<double>(n)).epsilon(1e-12));
        for (int i2 = 0; i2 < m; ++i2)
            CHECK(table.singles(i1, i2) ==
                  Approx(static_cast<double>(k) / m).epsilon(1e-12));
    }
}

TEST_CASE("subset weight identities hold on random draws") {
    std::mt19937_64 gen(99);
    std::uniform_int_distribution<int> dim(1, 6);
    std::uniform_real_distribution<double> par(0.3, 2.5);
    for (int trial = 0; trial < 50; ++trial) {
        const int n = dim(gen), m = dim(gen);
        std::uniform_int_distribution<int> kd(1, m);
        const SmoothParams params{par(gen), par(gen), kd(gen)};
        const Matrix x = random_matrix(gen, n, m);
        const auto table = weight_tables(x, params);

        double inv_q_sum = 0.0;
        for (int i1 = 0; i1 < n; ++i1) {
            CHECK(table.q[i1] >= 1.0 - 1e-12);
            inv_q_sum += std::exp(-table.log_q[i1]);
            CHECK(table.singles.row(i1).sum() ==
                  Approx(static_cast<double>(params.k)).margin(1e-10));
            for (int i2 = 0; i2 < m; ++i2) {
                CHECK(table.singles(i1, i2) >= 0.0);
                CHECK(table.singles(i1, i2) <= 1.0 + 1e-12);
                // sum_{j2 != i2} p^{i2,j2} = (k-1) p^{i2}
                double pair_sum = 0.0;
                for (int j2 = 0; j2 < m; ++j2)
                    if (j2 != i2) pair_sum += table.pairs[static_cast<std::size_t>(i1)](i2, j2);
                CHECK(pair_sum ==
                      Approx((params.k - 1.0) * table.singles(i1, i2)).margin(1e-10));
                for (int j2 = 0; j2 < m; ++j2) {
                    const double cap = std::min(table.singles(i1, i2), table.singles(i1, j2));
                    CHECK(table.pairs[static_cast<std::size_t>(i1)](i2, j2) <= cap + 1e-12);
                }
            }
        }
        CHECK(inv_q_sum == Approx(1.0).margin(1e-10));
    }
}

TEST_CASE("weights, gradient, q match brute-force enumeration") {
    std::mt19937_64 gen(2024);
    const int n = 2, m = 5, k = 2;
    const SmoothParams params{1.1, 0.9, k};
    const Matrix x = random_matrix(gen, n, m);
    const auto table = weight_tables(x, params);
    for (int i1 = 0; i1 < n; ++i1) {
        CHECK(table.q[i1] ==
              Approx(oracles::q_bruteforce(x, i1, params.beta, params.delta, k)).epsilon(1e-10));
        for (int i2 = 0; i2 < m; ++i2) {
            CHECK(table.singles(i1, i2) ==
                  Approx(oracles::p_single_bruteforce(x, i1, i2, params.beta, k)).epsilon(1e-10));
            for (int j2 = 0; j2 < m; ++j2)
                CHECK(table.pairs[static_cast<std::size_t>(i1)](i2, j2) ==
                      Approx(oracles::p_pair_bruteforce(x, i1, i2, j2, params.beta, k))
                          .epsilon(1e-10));
        }
    }
    const Matrix grad = gradient(x, params);
    const Matrix grad_bf = oracles::gradient_bruteforce(x, params.beta, params.delta, k);
    CHECK((grad - grad_bf).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("gradient of the 1x1 surrogate is 1") {
    Matrix x(1, 1);
    x << -4.2;
    const Matrix grad = gradient(x, {3.0, 0.5, 1});
    CHECK(grad(0, 0) == Approx(1.0).margin(1e-12));
}

TEST_CASE("gradient at the symmetric point is k/(m n)") {
    const int n = 4, m = 3, k = 2;
    const Matrix grad = gradient(Matrix::Zero(n, m), {1.0, 1.0, k});
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j)
            CHECK(grad(i, j) == Approx(static_cast<double>(k) / (m * n)).epsilon(1e-12));
}

TEST_CASE("gradient matches central finite differences") {
    std::mt19937_64 gen(404);
    const SmoothParams params{1.3, 0.7, 2};
    const Matrix x = random_matrix(gen, 2, 4);
    const Matrix grad = gradient(x, params);
    const Matrix fd = oracles::fd_gradient(
        [&](const Matrix& p) { return f_value(p, params); }, x);
    CHECK((grad - fd).cwiseAbs().maxCoeff() < 1e-7);
}

TEST_CASE("hessian structure: zero row sums, signs, symmetry, brute force") {
    std::mt19937_64 gen(515);
    std::uniform_int_distribution<int> dim(1, 5);
    std::uniform_real_distribution<double> par(0.3, 2.0);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = dim(gen), m = dim(gen);
        std::uniform_int_distribution<int> kd(1, m);
        const SmoothParams params{par(gen), par(gen), kd(gen)};
        const Matrix x = random_matrix(gen, n, m);
        const Matrix h = hessian(x, params);
        const MatrixShape shape{n, m};

        CHECK((h - h.transpose()).cwiseAbs().maxCoeff() < 1e-12);
        for (Eigen::Index a = 0; a < h.rows(); ++a)
            CHECK(std::abs(h.row(a).sum()) < 1e-10);
        for (int i1 = 0; i1 < n; ++i1)
            for (int i2 = 0; i2 < m; ++i2)
                for (int j1 = 0; j1 < n; ++j1)
                    for (int j2 = 0; j2 < m; ++j2) {
                        const double v = h(shape.flat(i1, i2), shape.flat(j1, j2));
                        if (i1 != j1) CHECK(v >= -1e-12);
                        if (i1 == j1 && i2 != j2) CHECK(v <= 1e-12);
                    }

        const Matrix brute = oracles::hessian_bruteforce(x, params.beta, params.delta, params.k);
        CHECK((h - brute).cwiseAbs().maxCoeff() < 1e-10);
    }
}

TEST_CASE("hessian matches finite differences of the gradient") {
    std::mt19937_64 gen(616);
    const SmoothParams params{0.9, 1.4, 2};
    const Matrix x = random_matrix(gen, 2, 3);
    const Matrix h = hessian(x, params);
    const Matrix fd = oracles::fd_hessian(
        [&](const Matrix& p) { return gradient(p, params); }, x);
    CHECK((h - fd).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("hessian abs off-diagonal sum obeys the closed-form bound") {
    Matrix single(1, 1);
    single << 0.3;
    const auto degenerate = hessian_abs_offdiag_sum(single, {1.0, 1.0, 1});
    CHECK(degenerate.sum == 0.0);
    CHECK(degenerate.bound == 0.0);

    std::mt19937_64 gen(717);
    std::uniform_real_distribution<double> par(0.3, 2.5);
    for (int trial = 0; trial < 25; ++trial) {
        const SmoothParams params{par(gen), par(gen), 2};
        const Matrix x = random_matrix(gen, 3, 4);
        const auto result = hessian_abs_offdiag_sum(x, params);
        CHECK(result.sum <= result.bound + 1e-10);
    }
}

TEST_CASE("hessian abs sum at the symmetric point matches hand evaluation") {
    const int n = 3, m = 4, k = 2;
    const SmoothParams params{1.2, 0.8, k};
    const auto result = hessian_abs_offdiag_sum(Matrix::Zero(n, m), params);

    // p = k/m, pair weight k(k-1)/(m(m-1)), q = n everywhere.
    const double p = static_cast<double>(k) / m;
    const double ppair = static_cast<double>(k) * (k - 1) / (m * (m - 1.0));
    const double cross = params.beta * params.delta * p * p / (n * n) * (m * m * n * (n - 1.0));
    const double same_entry =
        params.beta / n *
        std::abs(params.delta * p * p * (1.0 / n - 1.0) + ppair - p * p);
    const double same = same_entry * n * m * (m - 1.0);
    CHECK(result.sum == Approx(cross + same).epsilon(1e-10));
}

TEST_CASE("sandwich inequality and shift covariance on random draws") {
    std::mt19937_64 gen(818);
    std::uniform_int_distribution<int> dim(1, 8);
    std::uniform_real_distribution<double> par(0.2, 3.0);
    std::uniform_real_distribution<double> shift(-2.0, 2.0);
    for (int trial = 0; trial < 1000; ++trial) {
        const int n = dim(gen), m = dim(gen);
        std::uniform_int_distribution<int> kd(1, m);
        const SmoothParams params{par(gen), par(gen), kd(gen)};
        const Matrix x = random_matrix(gen, n, m, 1.5);
        const double f = f_value(x, params);
        const double hard = min_sum_topk(x, params.k);
        const double slack = 1e-9 * (1.0 + std::abs(hard));
        CHECK(f - sandwich_width_lower(m, params) <= hard + slack);
        CHECK(hard <= f + sandwich_width_upper(n, params) + slack);

        const double c = shift(gen);
        const double shifted = f_value((x.array() + c).matrix(), params);
        CHECK(shifted == Approx(f + params.k * c).margin(1e-10 * (1.0 + std::abs(f))));
    }
}

TEST_CASE("surrogate converges to the hard statistic along a beta ladder") {
    std::mt19937_64 gen(919);
    const Matrix x = random_matrix(gen, 4, 5);
    const int k = 2;
    const double hard = min_sum_topk(x, k);
    double previous_envelope = std::numeric_limits<double>::infinity();
    for (const double beta : {1.0, 10.0, 100.0, 1000.0}) {
        const SmoothParams params{beta, 0.7, k};
        const double envelope =
            sandwich_width_lower(5, params) + sandwich_width_upper(4, params);
        CHECK(std::abs(f_value(x, params) - hard) <= envelope + 1e-9);
        CHECK(envelope < previous_envelope);
        previous_envelope = envelope;
    }
    CHECK(previous_envelope < 1e-2);
}

TEST_CASE("gradient mass equals k and entries stay within [0,1]") {
    std::mt19937_64 gen(111);
    std::uniform_int_distribution<int> dim(1, 7);
    std::uniform_real_distribution<double> par(0.3, 2.5);
    for (int trial = 0; trial < 100; ++trial) {
        const int n = dim(gen), m = dim(gen);
        std::uniform_int_distribution<int> kd(1, m);
        const SmoothParams params{par(gen), par(gen), kd(gen)};
        const Matrix grad = gradient(random_matrix(gen, n, m), params);
        CHECK(grad.minCoeff() >= 0.0);
        CHECK(grad.maxCoeff() <= 1.0 + 1e-12);
        CHECK(grad.sum() == Approx(static_cast<double>(params.k)).margin(1e-10));
    }
}

TEST_CASE("composed second derivative sum obeys the stated bound") {
    std::mt19937_64 gen(222);
    std::uniform_int_distribution<int> dim(1, 5);
    std::uniform_real_distribution<double> par(0.3, 2.0);
    for (int trial = 0; trial < 25; ++trial) {
        const int n = dim(gen), m = dim(gen);
        std::uniform_int_distribution<int> kd(1, m);
        const SmoothParams params{par(gen), par(gen), kd(gen)};
        const Matrix x = random_matrix(gen, n, m);
        // g(t) = sin(t): |g'| <= 1, |g''| <= 1, evaluated exactly at f(x)
        const double f = f_value(x, params);
        const double computed = composed_hessian_abs_sum(x, params, std::cos(f), -std::sin(f));
        CHECK(computed <= composed_hessian_bound(params, 1.0, 1.0) + 1e-10);
    }
}
