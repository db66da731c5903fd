#pragma once

// Lead-lag illustration: a 4-dimensional correlated Brownian motion
// (B1, B2, Btilde1, Btilde2) observed on two asynchronous grids, the lagged
// cross-covariance statistics U_1, U_2 over a lag grid, the matrix of
// sqrt(N)|U_i(theta)|, its column-matched Gaussian counterpart, and the
// Kolmogorov-distance convergence experiment over a resolution ladder.
//
// W_theta(t) = Btilde(t - theta), so one simulated path of Btilde on the
// union of all shifted grids serves every lag; lag columns stay dependent.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "minmax/covlab.hpp"
#include "minmax/montecarlo.hpp"
#include "minmax/parallel.hpp"

namespace minmax {

struct LeadLagConfig {
    double T = 1.0;
    double b = 1.0;   // B-grid density: |T_B| = floor(b*N) + 1
    double w = 1.0;   // W-grid density: |T_W| = floor(w*N) + 1
    int N = 1;
    std::vector<double> thetas;          // lag grid, |thetas| = m >= 2
    Eigen::Matrix4d corr = Eigen::Matrix4d::Identity();  // increment correlation
    bool allow_lead_lag_corr = false;    // permit corr(B_i, Btilde_i) != 0

    [[nodiscard]] int b_intervals() const { return static_cast<int>(std::floor(b * N)); }
    [[nodiscard]] int w_intervals() const { return static_cast<int>(std::floor(w * N)); }
    [[nodiscard]] int lag_count() const { return static_cast<int>(thetas.size()); }

    [[nodiscard]] double b_time(int i) const { return i * T / (b * N); }
    [[nodiscard]] double w_time(int j) const { return j * T / (w * N); }

    static std::vector<double> default_thetas(int m, double horizon) {
        std::vector<double> out(static_cast<std::size_t>(m));
        for (int c = 0; c < m; ++c)
            out[static_cast<std::size_t>(c)] =
                -horizon / 4.0 + c * (horizon / 2.0) / (m - 1);
        return out;
    }

    void validate() const {
        if (!(T > 0.0) || !(b > 0.0) || !(w > 0.0))
            throw std::domain_error("LeadLagConfig: T, b, w must be positive");
        if (N < 1) throw std::domain_error("LeadLagConfig: N must be >= 1");
        if (b_intervals() < 1 || w_intervals() < 1)
            throw std::domain_error("LeadLagConfig: grids must contain at least one interval");
        if (thetas.size() < 2) throw std::domain_error("LeadLagConfig: need at least two lags");
        if ((corr - corr.transpose()).cwiseAbs().maxCoeff() != 0.0)
            throw std::domain_error("LeadLagConfig: corr must be symmetric");
        for (int i = 0; i < 4; ++i)
            if (corr(i, i) != 1.0)
                throw std::domain_error("LeadLagConfig: corr must have unit diagonal");
        if (!allow_lead_lag_corr && (corr(0, 2) != 0.0 || corr(1, 3) != 0.0))
            throw std::domain_error(
                "LeadLagConfig: corr(B_i, Btilde_i) must vanish unless allow_lead_lag_corr");
        cholesky_psd(Matrix(corr));
    }
};

struct GridObservation {
    std::vector<double> thetas;
    Matrix db;               // 2 x b_intervals: increments of (B1, B2)
    std::vector<Matrix> dw;  // per lag: 2 x w_intervals: increments of W_theta = Btilde(.-theta)
};

// One replication of the 4-dimensional path, observed through increments on
// the two grids. The path is built on the sorted union of every needed time
// (including shifted ones, possibly negative) and anchored at Z(0) = 0.
inline GridObservation simulate_paths(const LeadLagConfig& config, SeedSpec seed,
                                      std::uint64_t rep = 0) {
    config.validate();
    const int ib = config.b_intervals();
    const int iw = config.w_intervals();
    const int m = config.lag_count();

    std::vector<double> times;
    times.reserve(static_cast<std::size_t>(ib + 1) + static_cast<std::size_t>(m) * (iw + 1) + 1);
    times.push_back(0.0);
    for (int i = 0; i <= ib; ++i) times.push_back(config.b_time(i));
    for (int c = 0; c < m; ++c)
        for (int j = 0; j <= iw; ++j)
            times.push_back(config.w_time(j) - config.thetas[static_cast<std::size_t>(c)]);
    std::sort(times.begin(), times.end());
    times.erase(std::unique(times.begin(), times.end()), times.end());

    const auto zero_pos = std::lower_bound(times.begin(), times.end(), 0.0);
    const Eigen::Index zero_index = zero_pos - times.begin();

    const CholeskyFactor corr_factor = cholesky_psd(Matrix(config.corr));
    const Eigen::Index count = static_cast<Eigen::Index>(times.size());
    Matrix path(4, count);
    auto eng = rng::engine_for(seed, rep);
    Eigen::Vector4d z;
    Eigen::Vector4d level = Eigen::Vector4d::Zero();
    path.col(0) = level;
    for (Eigen::Index s = 1; s < count; ++s) {
        const double dt = times[static_cast<std::size_t>(s)] - times[static_cast<std::size_t>(s - 1)];
        rng::fill_normals(eng, {z.data(), 4});
        level += std::sqrt(dt) *
                 (corr_factor.lower.leftCols(corr_factor.rank) * z.head(corr_factor.rank));
        path.col(s) = level;
    }
    const Eigen::Vector4d anchor = path.col(zero_index);
    path.colwise() -= anchor;

    auto locate = [&](double t) {
        const auto it = std::lower_bound(times.begin(), times.end(), t);
        return static_cast<Eigen::Index>(it - times.begin());
    };

    GridObservation obs;
    obs.thetas = config.thetas;
    obs.db.resize(2, ib);
    for (int i = 1; i <= ib; ++i) {
        const Eigen::Index hi = locate(config.b_time(i));
        const Eigen::Index lo = locate(config.b_time(i - 1));
        obs.db(0, i - 1) = path(0, hi) - path(0, lo);
        obs.db(1, i - 1) = path(1, hi) - path(1, lo);
    }
    obs.dw.assign(static_cast<std::size_t>(m), Matrix(2, iw));
    for (int c = 0; c < m; ++c) {
        const double theta = config.thetas[static_cast<std::size_t>(c)];
        Matrix& dw = obs.dw[static_cast<std::size_t>(c)];
        for (int j = 1; j <= iw; ++j) {
            const Eigen::Index hi = locate(config.w_time(j) - theta);
            const Eigen::Index lo = locate(config.w_time(j - 1) - theta);
            dw(0, j - 1) = path(2, hi) - path(2, lo);
            dw(1, j - 1) = path(3, hi) - path(3, lo);
        }
    }
    return obs;
}

// U_i(theta): sum over grid-interval pairs with overlapping nominal
// observation intervals of (B increment) * (W_theta increment). Linear
// two-pointer sweep; accumulation order matches the brute-force double loop.
inline double u_statistic(const LeadLagConfig& config, const GridObservation& obs,
                          double theta, int coordinate) {
    if (coordinate != 1 && coordinate != 2)
        throw std::domain_error("u_statistic: coordinate must be 1 or 2");
    int lag = -1;
    for (std::size_t c = 0; c < obs.thetas.size(); ++c)
        if (obs.thetas[c] == theta) lag = static_cast<int>(c);
    if (lag < 0) throw std::domain_error("u_statistic: theta was not simulated");

    const int ib = static_cast<int>(obs.db.cols());
    const int iw = static_cast<int>(obs.dw[static_cast<std::size_t>(lag)].cols());
    const auto& dw = obs.dw[static_cast<std::size_t>(lag)];
    const int row = coordinate - 1;

    // Intervals ((i-1)T/bN, iT/bN] and ((j-1)T/wN, jT/wN] overlap iff
    // (i-1)*w < j*b and (j-1)*w < i*b (scale factors cancel).
    double total = 0.0;
    int j_first = 1;
    for (int i = 1; i <= ib; ++i) {
        while (j_first <= iw && !((i - 1) * config.w < j_first * config.b)) ++j_first;
        for (int j = j_first; j <= iw && (j - 1) * config.w < i * config.b; ++j)
            total += obs.db(row, i - 1) * dw(row, j - 1);
    }
    return total;
}

// Random-access sampler of the 2 x m matrix sqrt(N) * |U_i(theta)|.
class FMatrixSampler {
public:
    FMatrixSampler(LeadLagConfig config, SeedSpec seed)
        : config_(std::move(config)), seed_(seed) {
        config_.validate();
    }

    [[nodiscard]] Matrix operator()(std::uint64_t rep) const {
        const GridObservation obs = simulate_paths(config_, seed_, rep);
        const double root_n = std::sqrt(static_cast<double>(config_.N));
        Matrix out(2, config_.lag_count());
        for (int c = 0; c < config_.lag_count(); ++c)
            for (int coord = 1; coord <= 2; ++coord)
                out(coord - 1, c) = root_n * std::abs(u_statistic(
                                                 config_, obs,
                                                 config_.thetas[static_cast<std::size_t>(c)],
                                                 coord));
        return out;
    }

    [[nodiscard]] const LeadLagConfig& config() const noexcept { return config_; }

private:
    LeadLagConfig config_;
    SeedSpec seed_;
};

inline std::vector<Matrix> f_matrix_sample(const LeadLagConfig& config, std::uint64_t reps,
                                           SeedSpec seed) {
    const FMatrixSampler sampler(config, seed);
    std::vector<Matrix> out(reps);
    for_each_chunk(reps, 64, [&](std::uint64_t, std::uint64_t lo, std::uint64_t hi) {
        for (std::uint64_t r = lo; r < hi; ++r) out[r] = sampler(r);
    });
    return out;
}

// Column-matched Gaussian model: per lag, the 2 x 2 covariance of
// sqrt(N) (U_1(theta), U_2(theta)) estimated by Monte Carlo; the matched
// matrix has independent columns and absolute-valued entries.
struct MatchedColumns {
    std::vector<Eigen::Matrix2d> column_cov;  // per lag
    std::vector<Eigen::Matrix2d> column_root; // Cholesky factors (rank-padded)
};

inline MatchedColumns matched_gaussian_columns(const LeadLagConfig& config,
                                               std::uint64_t moment_reps, SeedSpec seed) {
    config.validate();
    if (moment_reps < 2)
        throw std::domain_error("matched_gaussian_columns: need at least two replications");
    const int m = config.lag_count();
    const double root_n = std::sqrt(static_cast<double>(config.N));

    // per-chunk accumulators merged in chunk order (bit-reproducible)
    struct Moments {
        Eigen::VectorXd sum;
        Eigen::VectorXd sum_sq;  // u1^2, u2^2, u1*u2 per lag
    };
    const std::uint64_t chunk = 256;
    const std::uint64_t nchunks = (moment_reps + chunk - 1) / chunk;
    std::vector<Moments> partial(nchunks,
                                 Moments{Eigen::VectorXd::Zero(2 * m), Eigen::VectorXd::Zero(3 * m)});
    for_each_chunk(moment_reps, chunk, [&](std::uint64_t c, std::uint64_t lo, std::uint64_t hi) {
        Moments& acc = partial[c];
        for (std::uint64_t r = lo; r < hi; ++r) {
            const GridObservation obs = simulate_paths(config, seed, r);
            for (int lag = 0; lag < m; ++lag) {
                const double theta = config.thetas[static_cast<std::size_t>(lag)];
                const double u1 = root_n * u_statistic(config, obs, theta, 1);
                const double u2 = root_n * u_statistic(config, obs, theta, 2);
                acc.sum[2 * lag] += u1;
                acc.sum[2 * lag + 1] += u2;
                acc.sum_sq[3 * lag] += u1 * u1;
                acc.sum_sq[3 * lag + 1] += u2 * u2;
                acc.sum_sq[3 * lag + 2] += u1 * u2;
            }
        }
    });
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(2 * m);
    Eigen::VectorXd sum_sq = Eigen::VectorXd::Zero(3 * m);
    for (const auto& p : partial) {
        sum += p.sum;
        sum_sq += p.sum_sq;
    }

    MatchedColumns matched;
    matched.column_cov.resize(static_cast<std::size_t>(m));
    matched.column_root.resize(static_cast<std::size_t>(m));
    const double count = static_cast<double>(moment_reps);
    for (int lag = 0; lag < m; ++lag) {
        const double mean1 = sum[2 * lag] / count;
        const double mean2 = sum[2 * lag + 1] / count;
        Eigen::Matrix2d cov;
        cov(0, 0) = sum_sq[3 * lag] / count - mean1 * mean1;
        cov(1, 1) = sum_sq[3 * lag + 1] / count - mean2 * mean2;
        cov(0, 1) = cov(1, 0) = sum_sq[3 * lag + 2] / count - mean1 * mean2;
        matched.column_cov[static_cast<std::size_t>(lag)] = cov;
        const CholeskyFactor factor = cholesky_psd(Matrix(cov));
        Eigen::Matrix2d root = Eigen::Matrix2d::Zero();
        root.leftCols(factor.rank) = factor.lower.leftCols(factor.rank);
        matched.column_root[static_cast<std::size_t>(lag)] = root;
    }
    return matched;
}

// Sampler of |X| for the column-matched Gaussian matrix (independent columns).
class AbsMatchedGaussianSampler {
public:
    AbsMatchedGaussianSampler(MatchedColumns matched, SeedSpec seed)
        : matched_(std::move(matched)), seed_(seed) {}

    [[nodiscard]] Matrix operator()(std::uint64_t rep) const {
        auto eng = rng::engine_for(seed_, rep);
        const int m = static_cast<int>(matched_.column_cov.size());
        Matrix out(2, m);
        Eigen::Vector2d z;
        for (int lag = 0; lag < m; ++lag) {
            eng.normal_pair(z[0], z[1]);
            out.col(lag) =
                (matched_.column_root[static_cast<std::size_t>(lag)] * z).cwiseAbs();
        }
        return out;
    }

private:
    MatchedColumns matched_;
    SeedSpec seed_;
};

struct ConvergenceRow {
    int N = 0;
    int m = 0;
    std::uint64_t reps = 0;
    double ks = 0.0;
    double shape = 0.0;  // log^6(m) / N
};

// For each N: KS distance between min-max samples of F^N and of the
// column-matched |X|^N, plus the theoretical shape column.
inline std::vector<ConvergenceRow> convergence_experiment(const LeadLagConfig& base,
                                                          const std::vector<int>& n_list,
                                                          std::uint64_t reps, SeedSpec seed,
                                                          std::uint64_t moment_reps = 100000) {
    if (reps == 0) throw std::domain_error("convergence_experiment: reps must be positive");
    if (n_list.empty()) throw std::domain_error("convergence_experiment: empty N list");
    for (std::size_t i = 1; i < n_list.size(); ++i)
        if (n_list[i] <= n_list[i - 1])
            throw std::domain_error("convergence_experiment: N list must be ascending");

    std::vector<ConvergenceRow> rows;
    rows.reserve(n_list.size());
    const int m = base.lag_count();
    for (const int n : n_list) {
        LeadLagConfig config = base;
        config.N = n;
        config.validate();
        const SeedSpec job = seed.child(static_cast<std::uint64_t>(n));
        const MatchedColumns matched =
            matched_gaussian_columns(config, moment_reps, job.child(1));
        const auto f_sample =
            minmax_sample(FMatrixSampler(config, job.child(2)), reps, job.child(2));
        const auto x_sample = minmax_sample(
            AbsMatchedGaussianSampler(matched, job.child(3)), reps, job.child(3));
        ConvergenceRow row;
        row.N = n;
        row.m = m;
        row.reps = reps;
        row.ks = ks_distance(f_sample, x_sample);
        row.shape = std::pow(std::log(static_cast<double>(m)), 6.0) / static_cast<double>(n);
        rows.push_back(row);
    }
    return rows;
}

// Spearman rank correlation (average ranks for ties).
inline double spearman(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size() || a.size() < 2)
        throw std::domain_error("spearman: need two series of equal length >= 2");
    auto ranks = [](const std::vector<double>& v) {
        const std::size_t size = v.size();
        std::vector<std::size_t> order(size);
        for (std::size_t i = 0; i < size; ++i) order[i] = i;
        std::sort(order.begin(), order.end(),
                  [&](std::size_t x, std::size_t y) { return v[x] < v[y]; });
        std::vector<double> rank(size);
        std::size_t i = 0;
        while (i < size) {
            std::size_t j = i;
            while (j + 1 < size && v[order[j + 1]] == v[order[i]]) ++j;
            const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
            for (std::size_t t = i; t <= j; ++t) rank[order[t]] = avg;
            i = j + 1;
        }
        return rank;
    };
    const auto ra = ranks(a);
    const auto rb = ranks(b);
    const double n = static_cast<double>(a.size());
    double mean_a = 0.0, mean_b = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        mean_a += ra[i];
        mean_b += rb[i];
    }
    mean_a /= n;
    mean_b /= n;
    double cov = 0.0, var_a = 0.0, var_b = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        cov += (ra[i] - mean_a) * (rb[i] - mean_b);
        var_a += (ra[i] - mean_a) * (ra[i] - mean_a);
        var_b += (rb[i] - mean_b) * (rb[i] - mean_b);
    }
    if (var_a == 0.0 || var_b == 0.0) return 0.0;
    return cov / std::sqrt(var_a * var_b);
}

}  // namespace minmax
