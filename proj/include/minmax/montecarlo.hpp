#pragma once

// Empirical certification machinery: expectation estimators for min-sum-top-k
// statistics, exact two-sample Kolmogorov distance, the empirical Levy
// (anti-concentration) function, the duplicated-column/row sharpness
// constructions, and the min-max uniqueness probe.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "minmax/covlab.hpp"
#include "minmax/parallel.hpp"
#include "minmax/softminmax.hpp"

namespace minmax {

template <class S>
concept MatrixSampler = requires(const S& sampler, std::uint64_t rep) {
    { sampler(rep) } -> std::convertible_to<Matrix>;
};

struct SampleStats {
    std::uint64_t count = 0;
    double mean = 0.0;
    double stderr_of_mean = 0.0;
    double min = 0.0;
    double max = 0.0;
};

inline SampleStats stats_of(const std::vector<double>& values) {
    SampleStats stats;
    stats.count = values.size();
    if (values.empty()) return stats;
    double acc = 0.0;
    stats.min = values.front();
    stats.max = values.front();
    for (const double v : values) {
        acc += v;
        stats.min = std::min(stats.min, v);
        stats.max = std::max(stats.max, v);
    }
    stats.mean = acc / static_cast<double>(values.size());
    if (values.size() >= 2) {
        double ss = 0.0;
        for (const double v : values) ss += (v - stats.mean) * (v - stats.mean);
        const double sd = std::sqrt(ss / static_cast<double>(values.size() - 1));
        stats.stderr_of_mean = sd / std::sqrt(static_cast<double>(values.size()));
    }
    return stats;
}

struct EmpiricalSample {
    std::vector<double> values;  // nondecreasing
    SeedSpec seed;
};

template <MatrixSampler S>
EmpiricalSample min_sum_topk_sample(const S& sampler, int k, std::uint64_t reps,
                                    SeedSpec provenance = {}) {
    if (reps == 0) throw std::domain_error("min_sum_topk_sample: reps must be positive");
    EmpiricalSample sample;
    sample.seed = provenance;
    sample.values =
        per_rep_values(reps, [&](std::uint64_t rep) { return min_sum_topk(sampler(rep), k); });
    std::sort(sample.values.begin(), sample.values.end());
    return sample;
}

template <MatrixSampler S>
EmpiricalSample minmax_sample(const S& sampler, std::uint64_t reps, SeedSpec provenance = {}) {
    return min_sum_topk_sample(sampler, 1, reps, provenance);
}

inline EmpiricalSample minmax_sample(const GaussianMatrixSpec& spec, std::uint64_t reps,
                                     SeedSpec seed) {
    return minmax_sample(GaussianSampler(spec, seed), reps, seed);
}

inline SampleStats estimate_min_sum_topk(const GaussianMatrixSpec& spec, int k,
                                         std::uint64_t reps, SeedSpec seed) {
    const GaussianSampler sampler(spec, seed);
    return stats_of(
        per_rep_values(reps, [&](std::uint64_t rep) { return min_sum_topk(sampler(rep), k); }));
}

// Exact two-sample Kolmogorov statistic. All values equal to the current
// merge point are consumed on both sides before the gap is evaluated.
inline double ks_distance(const EmpiricalSample& a, const EmpiricalSample& b) {
    if (a.values.empty() || b.values.empty())
        throw std::domain_error("ks_distance: samples must be nonempty");
    const double na = static_cast<double>(a.values.size());
    const double nb = static_cast<double>(b.values.size());
    std::size_t i = 0, j = 0;
    double best = 0.0;
    while (i < a.values.size() || j < b.values.size()) {
        double point;
        if (i == a.values.size())
            point = b.values[j];
        else if (j == b.values.size())
            point = a.values[i];
        else
            point = std::min(a.values[i], b.values[j]);
        while (i < a.values.size() && a.values[i] == point) ++i;
        while (j < b.values.size() && b.values[j] == point) ++j;
        best = std::max(best, std::abs(static_cast<double>(i) / na -
                                       static_cast<double>(j) / nb));
    }
    return best;
}

// Two-sample KS sampling noise scale for equal-size samples.
inline double ks_noise(std::uint64_t reps) {
    return 1.36 * std::sqrt(2.0 / static_cast<double>(reps));
}

// Empirical Levy concentration function: sup_x P(|Y - x| <= eps). On a sorted
// sample the supremum is attained by windows whose left edge sits on a data
// point, so a single sweep is exact.
inline double levy_concentration(const EmpiricalSample& sample, double eps) {
    if (!(eps > 0.0)) throw std::domain_error("levy_concentration: eps must be positive");
    if (sample.values.empty())
        throw std::domain_error("levy_concentration: sample must be nonempty");
    const auto& v = sample.values;
    std::size_t best = 0;
    std::size_t hi = 0;
    for (std::size_t lo = 0; lo < v.size(); ++lo) {
        if (hi < lo) hi = lo;
        while (hi < v.size() && v[hi] <= v[lo] + 2.0 * eps) ++hi;
        best = std::max(best, hi - lo);
    }
    return static_cast<double>(best) / static_cast<double>(v.size());
}

// Duplicated-column construction: m copies of one standard n-vector, so the
// min-sum-top-k statistic collapses to k times the row-wise minimum.
inline GaussianMatrixSpec sharpness_columns_spec(int n, int m) {
    MatrixShape shape{n, m};
    shape.validate();
    GaussianMatrixSpec spec;
    spec.shape = shape;
    spec.mean = Vector::Zero(shape.entry_count());
    spec.cov.setZero(shape.entry_count(), shape.entry_count());
    for (int i1 = 0; i1 < n; ++i1)
        for (int i2 = 0; i2 < m; ++i2)
            for (int j2 = 0; j2 < m; ++j2)
                spec.cov(shape.flat(i1, i2), shape.flat(i1, j2)) = 1.0;
    return spec;
}

// Duplicated-row construction: n identical rows, each row k copies of one
// standard (m/k)-vector, so min-sum-top-k collapses to k times the maximum of
// the reduced vector.
inline GaussianMatrixSpec sharpness_rows_spec(int n, int m, int k) {
    MatrixShape shape{n, m};
    shape.validate();
    if (k < 1 || m % k != 0)
        throw std::domain_error("sharpness_rows_spec: m must be divisible by k");
    const int reduced = m / k;
    GaussianMatrixSpec spec;
    spec.shape = shape;
    spec.mean = Vector::Zero(shape.entry_count());
    spec.cov.setZero(shape.entry_count(), shape.entry_count());
    for (int i1 = 0; i1 < n; ++i1)
        for (int j1 = 0; j1 < n; ++j1)
            for (int i2 = 0; i2 < m; ++i2)
                for (int j2 = 0; j2 < m; ++j2)
                    if (i2 % reduced == j2 % reduced)
                        spec.cov(shape.flat(i1, i2), shape.flat(j1, j2)) = 1.0;
    return spec;
}

// Samples the spec and reports whether the min-max argument was unique (up to
// `tol`) in every replication; a heuristic gate for experiments that assume
// almost-sure uniqueness.
inline bool assumption_A_check(const GaussianMatrixSpec& spec, std::uint64_t reps, SeedSpec seed,
                               double tol = 1e-9) {
    const GaussianSampler sampler(spec, seed);
    const std::vector<double> ties = per_rep_values(reps, [&](std::uint64_t rep) {
        const Matrix draw = sampler(rep);
        const double value = min_max(draw);
        int hits = 0;
        for (Eigen::Index i = 0; i < draw.rows(); ++i)
            for (Eigen::Index j = 0; j < draw.cols(); ++j)
                if (std::abs(draw(i, j) - value) <= tol) ++hits;
        return hits > 1 ? 1.0 : 0.0;
    });
    for (const double tie : ties)
        if (tie != 0.0) return false;
    return true;
}

}  // namespace minmax
