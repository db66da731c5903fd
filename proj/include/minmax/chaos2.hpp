#pragma once

// Second-Wiener-chaos random matrices realized as centered Gaussian quadratic
// forms: entry (i1,i2) is eta' B eta - tr(B) with B = S^{1/2} A S^{1/2} and
// eta standard d-normal. Exact covariance 2 tr(B_a B_b) and fourth cumulant
// 48 tr(B^4) come from the quadratic-form cumulant algebra; the Malliavin
// discrepancy Delta uses the closed-form inner product 2 eta' B_a B_b eta,
// whose mean must reproduce the exact covariance (duality check in tests).

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "minmax/covlab.hpp"
#include "minmax/montecarlo.hpp"
#include "minmax/parallel.hpp"

namespace minmax {

struct QuadraticFormMatrixSpec {
    MatrixShape shape;
    int d = 1;                   // latent Gaussian dimension
    std::vector<Matrix> A;       // per entry (flat order): symmetric d x d
    Matrix S;                    // d x d PSD base covariance of the latent vector

    static QuadraticFormMatrixSpec make(MatrixShape shape, int d) {
        shape.validate();
        if (d < 1) throw std::domain_error("QuadraticFormMatrixSpec: d must be >= 1");
        QuadraticFormMatrixSpec spec;
        spec.shape = shape;
        spec.d = d;
        spec.A.assign(static_cast<std::size_t>(shape.entry_count()), Matrix::Zero(d, d));
        spec.S = Matrix::Identity(d, d);
        return spec;
    }

    void validate() const {
        shape.validate();
        if (d < 1) throw std::domain_error("QuadraticFormMatrixSpec: d must be >= 1");
        if (static_cast<int>(A.size()) != shape.entry_count())
            throw std::domain_error("QuadraticFormMatrixSpec: one A matrix per entry required");
        for (const auto& a : A)
            if (a.rows() != d || a.cols() != d)
                throw std::domain_error("QuadraticFormMatrixSpec: A matrices must be d x d");
        if (S.rows() != d || S.cols() != d)
            throw std::domain_error("QuadraticFormMatrixSpec: S must be d x d");
        cholesky_psd(((S + S.transpose()) * 0.5).eval());
    }

    // Symmetric PSD square root of S, eigenvalues clamped at zero.
    [[nodiscard]] Matrix sqrt_S() const {
        if (S.isIdentity(0.0)) return S;
        Eigen::SelfAdjointEigenSolver<Matrix> eigen(((S + S.transpose()) * 0.5).eval());
        if (eigen.info() != Eigen::Success)
            throw std::runtime_error("QuadraticFormMatrixSpec: eigendecomposition of S failed");
        const Vector clamped = eigen.eigenvalues().cwiseMax(0.0).cwiseSqrt();
        return eigen.eigenvectors() * clamped.asDiagonal() * eigen.eigenvectors().transpose();
    }

    // B_{i1,i2} = S^{1/2} A_{i1,i2} S^{1/2}, symmetrized against roundoff.
    [[nodiscard]] std::vector<Matrix> effective_B() const {
        validate();
        const Matrix root = sqrt_S();
        std::vector<Matrix> b;
        b.reserve(A.size());
        for (const auto& a : A) {
            const Matrix sym_a = (a + a.transpose()) * 0.5;
            Matrix m = root * sym_a * root;
            b.push_back(((m + m.transpose()) * 0.5).eval());
        }
        return b;
    }
};

namespace detail {

inline bool all_diagonal(const std::vector<Matrix>& b) {
    for (const auto& m : b)
        if (!m.isDiagonal(0.0)) return false;
    return true;
}

}  // namespace detail

class ChaosSampler {
public:
    ChaosSampler(const QuadraticFormMatrixSpec& spec, SeedSpec seed)
        : shape_(spec.shape), d_(spec.d), b_(spec.effective_B()), seed_(seed) {
        traces_.reserve(b_.size());
        for (const auto& b : b_) traces_.push_back(b.trace());
        if (detail::all_diagonal(b_)) {
            diagonals_.reserve(b_.size());
            for (const auto& b : b_) diagonals_.push_back(b.diagonal());
        }
    }

    [[nodiscard]] Matrix operator()(std::uint64_t rep) const {
        auto eng = rng::engine_for(seed_, rep);
        Vector eta(d_);
        rng::fill_normals(eng, {eta.data(), static_cast<std::size_t>(eta.size())});
        Matrix out(shape_.n, shape_.m);
        if (!diagonals_.empty()) {
            const Vector eta_sq = eta.cwiseProduct(eta);
            for (int a = 0; a < shape_.entry_count(); ++a) {
                const auto [i1, i2] = shape_.unflat(a);
                out(i1, i2) = diagonals_[static_cast<std::size_t>(a)].dot(eta_sq) -
                              traces_[static_cast<std::size_t>(a)];
            }
            return out;
        }
        for (int a = 0; a < shape_.entry_count(); ++a) {
            const auto [i1, i2] = shape_.unflat(a);
            out(i1, i2) = eta.dot(b_[static_cast<std::size_t>(a)] * eta) -
                          traces_[static_cast<std::size_t>(a)];
        }
        return out;
    }

    [[nodiscard]] const std::vector<Matrix>& effective_B() const noexcept { return b_; }
    [[nodiscard]] MatrixShape shape() const noexcept { return shape_; }
    [[nodiscard]] int latent_dim() const noexcept { return d_; }

private:
    MatrixShape shape_;
    int d_;
    std::vector<Matrix> b_;
    std::vector<double> traces_;
    std::vector<Vector> diagonals_;  // set iff every B is diagonal
    SeedSpec seed_;
};

inline std::vector<Matrix> chaos_sample(const QuadraticFormMatrixSpec& spec, std::uint64_t reps,
                                        SeedSpec seed) {
    const ChaosSampler sampler(spec, seed);
    std::vector<Matrix> out(reps);
    for_each_chunk(reps, kDefaultChunk, [&](std::uint64_t, std::uint64_t lo, std::uint64_t hi) {
        for (std::uint64_t r = lo; r < hi; ++r) out[r] = sampler(r);
    });
    return out;
}

// Exact entry covariance: Cov(F_a, F_b) = 2 tr(B_a B_b).
inline Matrix covariance_exact(const QuadraticFormMatrixSpec& spec) {
    const auto b = spec.effective_B();
    const int size = spec.shape.entry_count();
    Matrix cov(size, size);
    for (int a = 0; a < size; ++a)
        for (int c = a; c < size; ++c) {
            const double value = 2.0 * b[static_cast<std::size_t>(a)]
                                           .cwiseProduct(b[static_cast<std::size_t>(c)])
                                           .sum();
            cov(a, c) = cov(c, a) = value;
        }
    return cov;
}

// Exact fourth cumulant of one entry: 48 tr(B^4) = 48 ||B^2||_F^2 >= 0.
inline double fourth_cumulant_exact(const QuadraticFormMatrixSpec& spec, int entry) {
    if (entry < 0 || entry >= spec.shape.entry_count())
        throw std::domain_error("fourth_cumulant_exact: entry index out of range");
    const Matrix b = spec.effective_B()[static_cast<std::size_t>(entry)];
    return 48.0 * (b * b).squaredNorm();
}

// Monte Carlo estimate of
//   Delta = E max_{(a,b)} | 2 eta' B_a B_b eta - sigma_{a,b} |,
// the q = 2 closed form of the Malliavin inner-product discrepancy.
inline SampleStats delta_mc(const QuadraticFormMatrixSpec& spec, const Matrix& gaussian_cov,
                            std::uint64_t reps, SeedSpec seed) {
    const int size = spec.shape.entry_count();
    if (gaussian_cov.rows() != size || gaussian_cov.cols() != size)
        throw std::domain_error("delta_mc: covariance shape mismatch");
    const auto b = spec.effective_B();
    const bool diagonal = detail::all_diagonal(b);
    const int d = spec.d;
    const std::vector<double> values = per_rep_values(reps, [&](std::uint64_t rep) {
        auto eng = rng::engine_for(seed, rep);
        Vector eta(d);
        rng::fill_normals(eng, {eta.data(), static_cast<std::size_t>(eta.size())});
        Matrix w(d, size);
        for (int a = 0; a < size; ++a) {
            if (diagonal)
                w.col(a) = b[static_cast<std::size_t>(a)].diagonal().cwiseProduct(eta);
            else
                w.col(a) = b[static_cast<std::size_t>(a)] * eta;
        }
        double worst = 0.0;
        for (int a = 0; a < size; ++a)
            for (int c = 0; c < size; ++c)
                worst = std::max(worst, std::abs(2.0 * w.col(a).dot(w.col(c)) -
                                                 gaussian_cov(a, c)));
        return worst;
    });
    return stats_of(values);
}

struct ChaosMomentReport {
    Matrix cov;              // exact nm x nm covariance of the chaos matrix
    Vector kappa4;           // exact per-entry fourth cumulants
    double A_quantity = 0.0;
    double B_quantity = 0.0;
    double shape_value = 0.0;  // A^{1/3} + B^{1/6}, constant-free
};

// A and B from externally supplied moment summaries (used directly for
// chaos order q > 2, where this module does not sample).
inline ChaosMomentReport proposition_from_moments(double max_cov_gap, double max_kappa4, int n,
                                                  int m, int q) {
    if (q < 2) throw std::domain_error("proposition quantities: q must be >= 2");
    if (m < 2 || n * m < 2)
        throw std::domain_error(
            "proposition quantities: need m >= 2 so that log m and log nm are positive");
    if (max_cov_gap < 0.0 || max_kappa4 < 0.0)
        throw std::domain_error("proposition quantities: moment gaps must be nonnegative");
    const double log_m = std::log(static_cast<double>(m));
    const double log_nm = std::log(static_cast<double>(n) * m);
    const double nn = static_cast<double>(n);
    ChaosMomentReport report;
    report.A_quantity = max_cov_gap * nn * nn * log_m * log_nm;
    report.B_quantity =
        max_kappa4 * std::pow(nn, 4.0) * log_m * log_m * std::pow(log_nm, 2.0 * q);
    report.shape_value = std::cbrt(report.A_quantity) + std::pow(report.B_quantity, 1.0 / 6.0);
    return report;
}

inline ChaosMomentReport proposition_quantities(const QuadraticFormMatrixSpec& spec,
                                                const Matrix& gaussian_cov, int q = 2) {
    const int size = spec.shape.entry_count();
    if (gaussian_cov.rows() != size || gaussian_cov.cols() != size)
        throw std::domain_error("proposition_quantities: covariance shape mismatch");
    Matrix cov = covariance_exact(spec);
    Vector kappa4(size);
    for (int a = 0; a < size; ++a) kappa4[a] = fourth_cumulant_exact(spec, a);
    ChaosMomentReport report = proposition_from_moments(
        (gaussian_cov - cov).cwiseAbs().maxCoeff(), kappa4.maxCoeff(), spec.shape.n,
        spec.shape.m, q);
    report.cov = std::move(cov);
    report.kappa4 = std::move(kappa4);
    return report;
}

// Zero-mean Gaussian matrix law with the chaos matrix's exact covariance.
inline GaussianMatrixSpec matched_gaussian(const QuadraticFormMatrixSpec& spec) {
    GaussianMatrixSpec out;
    out.shape = spec.shape;
    out.mean = Vector::Zero(spec.shape.entry_count());
    out.cov = covariance_exact(spec);
    out.symmetrize();
    cholesky_psd(out.cov);  // guards roundoff; analytically a Gram matrix
    return out;
}

// One-parameter family used in fourth-moment scaling studies: every entry
// lives on its own diagonal latent block, interpolated between a rank-one
// spike and the rank-balanced spread and rescaled so that tr(B^2) (hence the
// whole covariance, which is diagonal) is the same for every t. kappa4
// decreases from 48 c^2 at t = 0 to 48 c^2 / block_dim at t = 1.
inline QuadraticFormMatrixSpec rank_family_spec(MatrixShape shape, int block_dim,
                                                double entry_variance, double t) {
    shape.validate();
    if (block_dim < 1) throw std::domain_error("rank_family_spec: block_dim must be >= 1");
    if (!(entry_variance > 0.0))
        throw std::domain_error("rank_family_spec: entry variance must be positive");
    if (!(t >= 0.0 && t <= 1.0)) throw std::domain_error("rank_family_spec: t must lie in [0,1]");

    const double c = entry_variance / 2.0;  // target tr(B^2)
    const double spike = std::sqrt(c);
    const double spread = std::sqrt(c / block_dim);
    Vector diag(block_dim);
    diag.setConstant(t * spread);
    diag[0] = (1.0 - t) * spike + t * spread;
    diag *= std::sqrt(c) / diag.norm();  // restore tr(B^2) = c exactly

    const int entries = shape.entry_count();
    auto spec = QuadraticFormMatrixSpec::make(shape, entries * block_dim);
    for (int a = 0; a < entries; ++a)
        for (int i = 0; i < block_dim; ++i)
            spec.A[static_cast<std::size_t>(a)](a * block_dim + i, a * block_dim + i) = diag[i];
    return spec;
}

}  // namespace minmax
