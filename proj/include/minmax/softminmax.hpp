#pragma once

// The smooth surrogate for the min-sum-of-top-k statistic: a doubly tempered
// log-sum-exp over row subsets, with exact subset weights, gradient and
// Hessian. The subset sums are elementary symmetric polynomials of
// y_l = exp(beta * x_{i1,l}); everything runs in log domain via an O(m k)
// recurrence so that beta up to ~1e3 stays finite. Leave-one-out and
// leave-two-out tables are recomputed on reduced index sets instead of by
// division, which is unstable when one y dominates.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "minmax/covlab.hpp"

namespace minmax {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

inline double log_add(double a, double b) noexcept {
    if (a == kNegInf) return b;
    if (b == kNegInf) return a;
    const double hi = std::max(a, b);
    const double lo = std::min(a, b);
    return hi + std::log1p(std::exp(lo - hi));
}

struct SmoothParams {
    double beta = 1.0;
    double delta = 1.0;
    int k = 1;

    void validate(int m) const {
        if (!(beta > 0.0) || !(delta > 0.0))
            throw std::domain_error("SmoothParams: beta and delta must be positive");
        if (k < 1 || k > m) throw std::domain_error("SmoothParams: k must lie in [1, m]");
    }
};

namespace detail {

// log e_j(y over kept indices), j = 0..kmax, with y_l = exp(logy[l]).
// skip1/skip2 remove indices (leave-one-out / leave-two-out variants).
inline std::vector<double> log_esym_dp(std::span<const double> logy, int kmax, int skip1 = -1,
                                       int skip2 = -1) {
    std::vector<double> e(static_cast<std::size_t>(kmax) + 1, kNegInf);
    e[0] = 0.0;
    for (int t = 0; t < static_cast<int>(logy.size()); ++t) {
        if (t == skip1 || t == skip2) continue;
        for (int j = kmax; j >= 1; --j) e[j] = log_add(e[j], logy[t] + e[j - 1]);
    }
    return e;
}

}  // namespace detail

// Log-domain elementary symmetric polynomial values for one row, with
// leave-out variants used by the subset weights.
struct LogEsymTable {
    int m = 0;
    int k = 0;
    std::vector<double> full;                    // j = 0..k: log e_j(y)
    std::vector<std::vector<double>> leave_one;  // [i]: log e_j(y \ i), j = 0..k
    std::vector<double> leave_two;               // pair (i<j): log e_{k-2}(y \ {i,j})

    [[nodiscard]] int pair_index(int i, int j) const noexcept {
        // i < j, row-major over the strict upper triangle
        return i * m - i * (i + 1) / 2 + (j - i - 1);
    }
};

inline LogEsymTable log_esym(std::span<const double> logy, int k, bool leave_outs = true) {
    const int m = static_cast<int>(logy.size());
    if (k > m) throw std::domain_error("log_esym: k must not exceed m");
    if (k < 0) throw std::domain_error("log_esym: k must be nonnegative");
    LogEsymTable table;
    table.m = m;
    table.k = k;
    table.full = detail::log_esym_dp(logy, k);
    if (!leave_outs) return table;

    table.leave_one.resize(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) table.leave_one[static_cast<std::size_t>(i)] =
        detail::log_esym_dp(logy, k, i);

    if (k >= 2) {
        table.leave_two.assign(static_cast<std::size_t>(m) * (m - 1) / 2, kNegInf);
        for (int i = 0; i < m; ++i)
            for (int j = i + 1; j < m; ++j)
                table.leave_two[static_cast<std::size_t>(table.pair_index(i, j))] =
                    detail::log_esym_dp(logy, k - 2, i, j)[static_cast<std::size_t>(k - 2)];
    }
    return table;
}

namespace detail {

inline void check_finite(const Matrix& x) {
    if (!x.allFinite()) throw std::domain_error("softminmax: input entries must be finite");
}

// log S_{i1} = log sum over k-subsets L of exp(beta * sum_{l in L} x_{i1,l}).
inline Vector log_row_subset_sums(const Matrix& x, const SmoothParams& p) {
    const int n = static_cast<int>(x.rows());
    const int m = static_cast<int>(x.cols());
    Vector logs(n);
    std::vector<double> logy(static_cast<std::size_t>(m));
    for (int i1 = 0; i1 < n; ++i1) {
        for (int l = 0; l < m; ++l) logy[static_cast<std::size_t>(l)] = p.beta * x(i1, l);
        logs[i1] = detail::log_esym_dp(logy, p.k)[static_cast<std::size_t>(p.k)];
    }
    return logs;
}

}  // namespace detail

// The surrogate itself: -(1/(beta*delta)) log sum_{l1} S_{l1}^{-delta}.
inline double f_value(const Matrix& x, const SmoothParams& params) {
    params.validate(static_cast<int>(x.cols()));
    detail::check_finite(x);
    const Vector logs = detail::log_row_subset_sums(x, params);
    double acc = kNegInf;
    for (Eigen::Index i1 = 0; i1 < logs.size(); ++i1) acc = log_add(acc, -params.delta * logs[i1]);
    return -acc / (params.beta * params.delta);
}

// Hard statistic: min over rows of (sum of the k largest row entries).
inline double min_sum_topk(const Matrix& x, int k) {
    const int m = static_cast<int>(x.cols());
    if (k < 1 || k > m) throw std::domain_error("min_sum_topk: k must lie in [1, m]");
    double best = std::numeric_limits<double>::infinity();
    std::vector<double> row(static_cast<std::size_t>(m));
    for (Eigen::Index i1 = 0; i1 < x.rows(); ++i1) {
        for (int l = 0; l < m; ++l) row[static_cast<std::size_t>(l)] = x(i1, l);
        std::nth_element(row.begin(), row.begin() + (m - k), row.end());
        double s = 0.0;
        for (int l = m - k; l < m; ++l) s += row[static_cast<std::size_t>(l)];
        best = std::min(best, s);
    }
    return best;
}

inline double min_max(const Matrix& x) { return min_sum_topk(x, 1); }

// Subset weights at a point: singles p_{i1}^{i2}, pairs p_{i1}^{i2,j2},
// tempered row weights q_{i1}. Pair diagonals store p_{i1}^{i2,i2}=p_{i1}^{i2}.
struct SubsetWeightTable {
    Matrix singles;              // n x m
    Matrix log_singles;          // n x m
    std::vector<Matrix> pairs;   // per row: m x m, symmetric
    Vector q;                    // may overflow to +inf for extreme beta spreads
    Vector log_q;
    Vector log_row_sum;          // log S_{i1}
};

inline SubsetWeightTable weight_tables(const Matrix& x, const SmoothParams& params,
                                       bool with_pairs = true) {
    const int n = static_cast<int>(x.rows());
    const int m = static_cast<int>(x.cols());
    params.validate(m);
    detail::check_finite(x);

    SubsetWeightTable table;
    table.singles.resize(n, m);
    table.log_singles.resize(n, m);
    if (with_pairs) table.pairs.assign(static_cast<std::size_t>(n), Matrix::Zero(m, m));
    table.log_row_sum.resize(n);

    std::vector<double> logy(static_cast<std::size_t>(m));
    for (int i1 = 0; i1 < n; ++i1) {
        for (int l = 0; l < m; ++l) logy[static_cast<std::size_t>(l)] = params.beta * x(i1, l);
        const LogEsymTable esym = log_esym(logy, params.k, true);
        const double log_ek = esym.full[static_cast<std::size_t>(params.k)];
        table.log_row_sum[i1] = log_ek;

        for (int i2 = 0; i2 < m; ++i2) {
            const double log_p = std::min(
                logy[static_cast<std::size_t>(i2)] +
                    esym.leave_one[static_cast<std::size_t>(i2)]
                                  [static_cast<std::size_t>(params.k - 1)] -
                    log_ek,
                0.0);
            table.log_singles(i1, i2) = log_p;
            table.singles(i1, i2) = std::exp(log_p);
        }
        if (with_pairs) {
            Matrix& pm = table.pairs[static_cast<std::size_t>(i1)];
            for (int i2 = 0; i2 < m; ++i2) pm(i2, i2) = table.singles(i1, i2);
            if (params.k >= 2) {
                for (int i2 = 0; i2 < m; ++i2)
                    for (int j2 = i2 + 1; j2 < m; ++j2) {
                        const double log_p =
                            logy[static_cast<std::size_t>(i2)] + logy[static_cast<std::size_t>(j2)] +
                            esym.leave_two[static_cast<std::size_t>(esym.pair_index(i2, j2))] -
                            log_ek;
                        pm(i2, j2) = pm(j2, i2) = std::exp(std::min(log_p, 0.0));
                    }
            }
        }
    }

    // q_{i1} = sum_{l1} (S_{i1} / S_{l1})^delta, assembled in log domain.
    table.q.resize(n);
    table.log_q.resize(n);
    for (int i1 = 0; i1 < n; ++i1) {
        double acc = kNegInf;
        for (int l1 = 0; l1 < n; ++l1)
            acc = log_add(acc, params.delta * (table.log_row_sum[i1] - table.log_row_sum[l1]));
        table.log_q[i1] = acc;
        table.q[i1] = std::exp(acc);
    }
    return table;
}

// Entry (i1,i2) of the gradient is p_{i1}^{i2} / q_{i1}; total mass is k.
inline Matrix gradient(const Matrix& x, const SmoothParams& params) {
    const SubsetWeightTable table = weight_tables(x, params, false);
    Matrix grad(x.rows(), x.cols());
    for (Eigen::Index i1 = 0; i1 < x.rows(); ++i1)
        for (Eigen::Index i2 = 0; i2 < x.cols(); ++i2)
            grad(i1, i2) = std::exp(table.log_singles(i1, i2) - table.log_q[i1]);
    return grad;
}

namespace detail {

inline double hessian_entry(const SubsetWeightTable& t, double beta, double delta, int i1, int i2,
                            int j1, int j2) {
    const double ga = t.singles(i1, i2) * std::exp(-t.log_q[i1]);
    const double gb = t.singles(j1, j2) * std::exp(-t.log_q[j1]);
    double value = delta * ga * gb;
    if (i1 == j1) {
        const double inv_q = std::exp(-t.log_q[i1]);
        const double pp = t.singles(i1, i2) * t.singles(i1, j2);
        const double pair = t.pairs[static_cast<std::size_t>(i1)](i2, j2);
        value += inv_q * (-(1.0 + delta) * pp + pair);
    }
    return beta * value;
}

}  // namespace detail

// Full (nm) x (nm) Hessian of f, flat row-major entry indexing.
inline Matrix hessian(const Matrix& x, const SmoothParams& params) {
    const int n = static_cast<int>(x.rows());
    const int m = static_cast<int>(x.cols());
    const SubsetWeightTable table = weight_tables(x, params, true);
    const MatrixShape shape{n, m};
    Matrix h(n * m, n * m);
    for (int i1 = 0; i1 < n; ++i1)
        for (int i2 = 0; i2 < m; ++i2)
            for (int j1 = 0; j1 < n; ++j1)
                for (int j2 = 0; j2 < m; ++j2)
                    h(shape.flat(i1, i2), shape.flat(j1, j2)) =
                        detail::hessian_entry(table, params.beta, params.delta, i1, i2, j1, j2);
    return h;
}

struct HessianAbsSum {
    double sum = 0.0;    // sum over distinct entry pairs of |H|
    double bound = 0.0;  // beta*(k/m)*(m - k + a_n*(2m-1)*k*delta), a_n = 1 - 1/n
};

inline double hessian_offdiag_abs_bound(int n, int m, const SmoothParams& params) {
    const double a_n = 1.0 - 1.0 / static_cast<double>(n);
    const double k = static_cast<double>(params.k);
    return params.beta * (k / m) * (m - k + a_n * (2.0 * m - 1.0) * k * params.delta);
}

inline HessianAbsSum hessian_abs_offdiag_sum(const Matrix& x, const SmoothParams& params) {
    const int n = static_cast<int>(x.rows());
    const int m = static_cast<int>(x.cols());
    const Matrix h = hessian(x, params);
    double sum = 0.0;
    for (Eigen::Index a = 0; a < h.rows(); ++a)
        for (Eigen::Index b = 0; b < h.cols(); ++b)
            if (a != b) sum += std::abs(h(a, b));
    return HessianAbsSum{sum, hessian_offdiag_abs_bound(n, m, params)};
}

// Second derivatives of g(f(x)) summed in absolute value (diagonal included),
// for scalar g with |g'| and |g''| evaluated at f(x); paired with the closed
// form k^2*||g''|| + 2*beta*k*(1+delta*k)*||g'||.
inline double composed_hessian_abs_sum(const Matrix& x, const SmoothParams& params,
                                       double g_prime, double g_second) {
    const Matrix grad = gradient(x, params);
    const Matrix hess = hessian(x, params);
    const Eigen::Map<const Vector> flat_grad(grad.data(), grad.size());
    double sum = 0.0;
    const MatrixShape shape{static_cast<int>(x.rows()), static_cast<int>(x.cols())};
    for (int i1 = 0; i1 < shape.n; ++i1)
        for (int i2 = 0; i2 < shape.m; ++i2)
            for (int j1 = 0; j1 < shape.n; ++j1)
                for (int j2 = 0; j2 < shape.m; ++j2) {
                    const int a = shape.flat(i1, i2);
                    const int b = shape.flat(j1, j2);
                    sum += std::abs(g_second * grad(i1, i2) * grad(j1, j2) +
                                    g_prime * hess(a, b));
                }
    return sum;
}

inline double composed_hessian_bound(const SmoothParams& params, double norm_g_prime,
                                     double norm_g_second) {
    const double k = static_cast<double>(params.k);
    return k * k * norm_g_second + 2.0 * params.beta * k * (1.0 + params.delta * k) * norm_g_prime;
}

inline double log_binomial(int m, int k) {
    if (k < 0 || k > m) throw std::domain_error("log_binomial: k must lie in [0, m]");
    return std::lgamma(m + 1.0) - std::lgamma(k + 1.0) - std::lgamma(m - k + 1.0);
}

// Additive half-widths of the surrogate sandwich:
//   f - log_binom(m,k)/beta <= min_sum_topk <= f + log(n)/(beta*delta).
inline double sandwich_width_lower(int m, const SmoothParams& params) {
    return log_binomial(m, params.k) / params.beta;
}

inline double sandwich_width_upper(int n, const SmoothParams& params) {
    return std::log(static_cast<double>(n)) / (params.beta * params.delta);
}

}  // namespace minmax
