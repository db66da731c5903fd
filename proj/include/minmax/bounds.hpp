#pragma once

// Closed-form comparison bounds for min-sum-top-k statistics of Gaussian
// matrices, the optimal surrogate parameters behind them, order-statistic
// bounds via the deterministic matrix lift, and the constant-free shape
// values used in Kolmogorov-distance scaling studies.

#include <cmath>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "minmax/covlab.hpp"
#include "minmax/softminmax.hpp"

namespace minmax {

struct BoundReport {
    double value = 0.0;
    std::map<std::string, double> components;
    std::optional<SmoothParams> params_used;
};

namespace detail {

inline void check_gordon_args(int n, int m, int k, double gamma) {
    if (n < 1 || m < 1) throw std::domain_error("bound: n and m must be >= 1");
    if (k < 1 || k > m) throw std::domain_error("bound: k must lie in [1, m]");
    if (!(gamma >= 0.0)) throw std::domain_error("bound: gamma must be nonnegative");
}

}  // namespace detail

// sqrt(gamma*k) * [ sqrt(k*(1-1/n)*(2-1/m)*log n) + sqrt((1-k/m)*log C(m,k)) ]
inline BoundReport gordon_bound(int n, int m, int k, double gamma) {
    detail::check_gordon_args(n, m, k, gamma);
    const double a_n = 1.0 - 1.0 / static_cast<double>(n);
    const double row_term =
        std::sqrt(k * a_n * (2.0 - 1.0 / m) * std::log(static_cast<double>(n)));
    const double subset_term =
        std::sqrt((1.0 - static_cast<double>(k) / m) * log_binomial(m, k));
    BoundReport report;
    report.components["sqrt_gamma_k"] = std::sqrt(gamma * k);
    report.components["row_term"] = row_term;
    report.components["subset_term"] = subset_term;
    report.value = std::sqrt(gamma * k) * (row_term + subset_term);
    return report;
}

// The (beta, delta) minimizing the pre-optimization expression
//   (beta*k/(4m))*(m - k + a_n*(2m-1)*k*delta)*gamma
//     + log(n)/(beta*delta) + log C(m,k)/beta.
// Degenerate branches: n = 1 fixes delta = 1 (the row minimum is trivial);
// k = m has no finite beta optimizer (the statistic is linear in x), so beta
// is capped at 1e6 and delta keeps beta*delta on the optimal hyperbola.
inline SmoothParams optimal_smooth_params(int n, int m, int k, double gamma) {
    detail::check_gordon_args(n, m, k, gamma);
    if (!(gamma > 0.0))
        throw std::domain_error("optimal_smooth_params: gamma = 0 is degenerate (bound is 0)");
    constexpr double kBetaCap = 1e6;
    const double a_n = 1.0 - 1.0 / static_cast<double>(n);
    const double log_n = std::log(static_cast<double>(n));

    SmoothParams params;
    params.k = k;
    if (k == m) {
        params.beta = kBetaCap;
        if (n == 1) {
            params.delta = 1.0;
        } else {
            const double beta_delta =
                2.0 * std::sqrt(log_n / (a_n * (2.0 * m - 1.0) * m * gamma));
            params.delta = beta_delta / params.beta;
        }
        return params;
    }
    const double log_binom = log_binomial(m, k);
    params.beta = 2.0 * std::sqrt(m * log_binom / ((m - k) * static_cast<double>(k) * gamma));
    if (n == 1) {
        params.delta = 1.0;
    } else {
        params.delta =
            std::sqrt((m - k) * log_n / (k * a_n * (2.0 * m - 1.0) * log_binom));
    }
    return params;
}

// The expression optimal_smooth_params minimizes; at the returned parameters
// it reproduces gordon_bound(n, m, k, gamma).value.
inline double interpolation_bound_expression(int n, int m, int k, double gamma,
                                             const SmoothParams& params) {
    const double a_n = 1.0 - 1.0 / static_cast<double>(n);
    return params.beta * k / (4.0 * m) *
               (m - k + a_n * (2.0 * m - 1.0) * k * params.delta) * gamma +
           std::log(static_cast<double>(n)) / (params.beta * params.delta) +
           log_binomial(m, k) / params.beta;
}

// sqrt(gamma) * ( sqrt(2 log C(d,h)) + sqrt(log h) ), with the weaker
// explicit form sqrt(gamma) * ( sqrt(2h(1+log(d/h))) + sqrt(log h) ).
inline BoundReport order_stat_bound(int d, int h, double gamma) {
    if (d < 1 || h < 1 || h > d) throw std::domain_error("order_stat_bound: need 1 <= h <= d");
    if (!(gamma >= 0.0)) throw std::domain_error("order_stat_bound: gamma must be nonnegative");
    const double tight = std::sqrt(gamma) * (std::sqrt(2.0 * log_binomial(d, h)) +
                                             std::sqrt(std::log(static_cast<double>(h))));
    const double weak =
        std::sqrt(gamma) *
        (std::sqrt(2.0 * h * (1.0 + std::log(static_cast<double>(d) / h))) +
         std::sqrt(std::log(static_cast<double>(h))));
    BoundReport report;
    report.value = tight;
    report.components["tight"] = tight;
    report.components["weak"] = weak;
    return report;
}

// All h-subsets of {0,...,d-1} in lexicographic order.
inline std::vector<std::vector<int>> h_subsets_lex(int d, int h) {
    std::vector<std::vector<int>> out;
    std::vector<int> idx(static_cast<std::size_t>(h));
    for (int i = 0; i < h; ++i) idx[static_cast<std::size_t>(i)] = i;
    for (;;) {
        out.push_back(idx);
        int pos = h - 1;
        while (pos >= 0 && idx[static_cast<std::size_t>(pos)] == d - h + pos) --pos;
        if (pos < 0) break;
        ++idx[static_cast<std::size_t>(pos)];
        for (int j = pos + 1; j < h; ++j)
            idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
    }
    return out;
}

// Applies the lift to one realized vector: row r lists the coordinates of
// the r-th h-subset, so min-max of the result is the h-th smallest entry.
inline Matrix order_stat_lift_apply(const Vector& x, int h) {
    const int d = static_cast<int>(x.size());
    const auto subsets = h_subsets_lex(d, h);
    Matrix lifted(static_cast<Eigen::Index>(subsets.size()), h);
    for (std::size_t r = 0; r < subsets.size(); ++r)
        for (int c = 0; c < h; ++c)
            lifted(static_cast<Eigen::Index>(r), c) = x[subsets[r][static_cast<std::size_t>(c)]];
    return lifted;
}

// Lifts the law of a d-vector (a 1 x d spec) to the C(d,h) x h matrix law
// whose min-max is the h-th order statistic; covariance and mean are the
// pullbacks along the subset index map.
inline GaussianMatrixSpec order_stat_lift(const GaussianMatrixSpec& vec, int h,
                                          std::uint64_t max_rows = 1000000) {
    vec.shape.validate();
    if (vec.shape.n != 1) throw std::domain_error("order_stat_lift: expected a 1 x d vector spec");
    const int d = vec.shape.m;
    if (h < 1 || h > d) throw std::domain_error("order_stat_lift: need 1 <= h <= d");
    const double rows = std::exp(log_binomial(d, h));
    if (rows > static_cast<double>(max_rows) * (1.0 + 1e-9))
        throw std::length_error("order_stat_lift: C(d,h) exceeds the configured row cap");

    const auto subsets = h_subsets_lex(d, h);
    const int n_rows = static_cast<int>(subsets.size());
    GaussianMatrixSpec lifted;
    lifted.shape = MatrixShape{n_rows, h};
    const int size = lifted.shape.entry_count();
    lifted.mean.resize(size);
    lifted.cov.resize(size, size);
    auto source = [&](int r, int c) { return subsets[static_cast<std::size_t>(r)]
                                                    [static_cast<std::size_t>(c)]; };
    for (int r = 0; r < n_rows; ++r)
        for (int c = 0; c < h; ++c)
            lifted.mean[lifted.shape.flat(r, c)] = vec.mean[source(r, c)];
    for (int r = 0; r < n_rows; ++r)
        for (int c = 0; c < h; ++c)
            for (int r2 = 0; r2 < n_rows; ++r2)
                for (int c2 = 0; c2 < h; ++c2)
                    lifted.cov(lifted.shape.flat(r, c), lifted.shape.flat(r2, c2)) =
                        vec.cov(source(r, c), source(r2, c2));
    return lifted;
}

struct ComparisonWitness {
    bool holds = true;
    int a = -1;  // flat entry indices of the first violating pair
    int b = -1;
    double gamma_x = 0.0;
    double gamma_y = 0.0;

    explicit operator bool() const noexcept { return holds; }
};

// Monotone comparison condition: gamma^X <= gamma^Y on same-row pairs and
// gamma^X >= gamma^Y on cross-row pairs.
inline ComparisonWitness comparison_condition(const GaussianMatrixSpec& x,
                                              const GaussianMatrixSpec& y) {
    if (!(x.shape == y.shape)) throw std::domain_error("comparison_condition: shape mismatch");
    const int size = x.shape.entry_count();
    for (int a = 0; a < size; ++a)
        for (int b = 0; b < size; ++b) {
            const double gx = increment_variance(x, a, b);
            const double gy = increment_variance(y, a, b);
            const bool same_row = x.shape.unflat(a).first == x.shape.unflat(b).first;
            const bool ok = same_row ? (gx <= gy) : (gx >= gy);
            if (!ok) return ComparisonWitness{false, a, b, gx, gy};
        }
    return ComparisonWitness{};
}

namespace detail {

inline void check_shape_logs(int n, int m, double delta_hat) {
    if (!(delta_hat >= 0.0)) throw std::domain_error("theorem bound: Delta must be nonnegative");
    if (m < 2 || n * m < 2)
        throw std::domain_error("theorem bound: need m >= 2 so that log m and log nm are positive");
}

}  // namespace detail

// Constant-free shape value max(1, alpha^2, log p_nm, log(1/Delta))^{1/3}
// * n^{2/3} (log nm)^{1/3} Delta^{1/3}, with p_nm = n / log(nm). Used only in
// scaling fits; the absolute constant is never asserted.
inline BoundReport theorem3a_bound(double delta_hat, double alpha_nm, int n, int m) {
    detail::check_shape_logs(n, m, delta_hat);
    BoundReport report;
    if (delta_hat == 0.0) return report;
    const double log_nm = std::log(static_cast<double>(n) * m);
    const double p_nm = static_cast<double>(n) / log_nm;
    const double head = std::max({1.0, alpha_nm * alpha_nm, std::log(p_nm),
                                  std::log(1.0 / delta_hat)});
    report.components["max_term"] = head;
    report.components["p_nm"] = p_nm;
    report.value = std::cbrt(head) * std::pow(static_cast<double>(n), 2.0 / 3.0) *
                   std::cbrt(log_nm) * std::cbrt(delta_hat);
    return report;
}

// Constant-free shape value n^{2/3} (log m)^{1/3} (log nm)^{1/3} Delta^{1/3}.
inline BoundReport theorem3b_bound(double delta_hat, int n, int m) {
    detail::check_shape_logs(n, m, delta_hat);
    BoundReport report;
    if (delta_hat == 0.0) return report;
    report.value = std::pow(static_cast<double>(n), 2.0 / 3.0) *
                   std::cbrt(std::log(static_cast<double>(m))) *
                   std::cbrt(std::log(static_cast<double>(n) * m)) * std::cbrt(delta_hat);
    return report;
}

}  // namespace minmax
