#pragma once

// Covariance data model for Gaussian random matrices: PSD validation,
// pivoted Cholesky factorization with a jitter ladder, and reproducible
// sampling. All entry bookkeeping uses one flat row-major index
// idx(i1, i2) = i1*m + i2 (0-based), shared by every other module.

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "minmax/parallel.hpp"
#include "minmax/rng.hpp"

namespace minmax {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct MatrixShape {
    int n = 1;  // rows
    int m = 1;  // columns

    [[nodiscard]] int entry_count() const noexcept { return n * m; }
    [[nodiscard]] int flat(int i1, int i2) const noexcept { return i1 * m + i2; }
    [[nodiscard]] std::pair<int, int> unflat(int a) const noexcept { return {a / m, a % m}; }

    void validate() const {
        if (n < 1 || m < 1) throw std::domain_error("MatrixShape: n and m must be >= 1");
    }

    friend bool operator==(const MatrixShape&, const MatrixShape&) = default;
};

struct NotPsdError : std::runtime_error {
    explicit NotPsdError(double pivot)
        : std::runtime_error("matrix is not positive semidefinite (most negative pivot " +
                             std::to_string(pivot) + ")"),
          most_negative_pivot(pivot) {}
    double most_negative_pivot;
};

struct CholeskyFactor {
    Matrix lower;   // N x N, columns beyond `rank` are zero; L * L^T ~= cov + jitter*I
    int rank = 0;
    double jitter = 0.0;  // diagonal shift actually applied (absolute value)
};

namespace detail {

struct PivotSweep {
    Matrix lower;
    int rank = 0;
    double min_remaining_diag = 0.0;
};

// Left-looking pivoted Cholesky on the original index set. Stops when the
// largest remaining Schur diagonal falls below stop_tol.
inline PivotSweep pivoted_cholesky_sweep(const Matrix& a, double stop_tol) {
    const Eigen::Index size = a.rows();
    RowMajorMatrix lower = RowMajorMatrix::Zero(size, size);
    Vector diag = a.diagonal();
    std::vector<Eigen::Index> remaining(static_cast<std::size_t>(size));
    for (Eigen::Index i = 0; i < size; ++i) remaining[static_cast<std::size_t>(i)] = i;

    Eigen::Index step = 0;
    for (; step < size; ++step) {
        std::size_t best = 0;
        for (std::size_t r = 1; r < remaining.size(); ++r)
            if (diag[remaining[r]] > diag[remaining[best]]) best = r;
        const Eigen::Index p = remaining[best];
        if (!(diag[p] > stop_tol)) break;

        const double pivot = std::sqrt(diag[p]);
        lower(p, step) = pivot;
        remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(best));
        for (const Eigen::Index j : remaining) {
            const double c =
                a(j, p) - lower.row(j).head(step).dot(lower.row(p).head(step));
            lower(j, step) = c / pivot;
            diag[j] -= lower(j, step) * lower(j, step);
        }
    }

    double min_remaining = 0.0;
    for (const Eigen::Index j : remaining) min_remaining = std::min(min_remaining, diag[j]);
    return PivotSweep{Matrix(lower), static_cast<int>(step), min_remaining};
}

}  // namespace detail

inline constexpr double kPsdEpsilon = 1e-10;

// Pivoted Cholesky with the diagonal jitter ladder {0, 1e-12, 1e-10, 1e-8}
// (scaled by trace/N). Throws NotPsdError when the matrix stays indefinite
// beyond the ladder.
inline CholeskyFactor cholesky_psd(const Matrix& cov) {
    if (cov.rows() != cov.cols()) throw std::domain_error("cholesky_psd: matrix must be square");
    const Eigen::Index size = cov.rows();
    const double trace = cov.trace();
    const double scale = std::max(1.0, std::abs(trace));
    const double stop_tol = 1e-14 * scale;
    const double psd_tol = kPsdEpsilon * std::abs(trace);

    double worst_pivot = 0.0;
    for (const double lambda : {0.0, 1e-12, 1e-10, 1e-8}) {
        Matrix shifted = cov;
        const double jitter = lambda * trace / static_cast<double>(size);
        if (jitter != 0.0) shifted.diagonal().array() += jitter;
        auto sweep = detail::pivoted_cholesky_sweep(shifted, stop_tol);
        if (sweep.min_remaining_diag >= -psd_tol)
            return CholeskyFactor{std::move(sweep.lower), sweep.rank, jitter};
        worst_pivot = std::min(worst_pivot, sweep.min_remaining_diag);
    }
    throw NotPsdError(worst_pivot);
}

// The law of an n x m Gaussian random matrix: mean vector (length nm) and
// full nm x nm entry covariance in flat row-major indexing.
struct GaussianMatrixSpec {
    MatrixShape shape;
    Vector mean;
    Matrix cov;

    static GaussianMatrixSpec iid(MatrixShape shape, double variance = 1.0,
                                  double mean_value = 0.0) {
        shape.validate();
        const int size = shape.entry_count();
        GaussianMatrixSpec spec;
        spec.shape = shape;
        spec.mean = Vector::Constant(size, mean_value);
        spec.cov = variance * Matrix::Identity(size, size);
        return spec;
    }

    static GaussianMatrixSpec zero(MatrixShape shape) { return iid(shape, 0.0, 0.0); }

    void symmetrize() { cov = ((cov + cov.transpose()) * 0.5).eval(); }

    void validate() const {
        shape.validate();
        const int size = shape.entry_count();
        if (mean.size() != size) throw std::domain_error("GaussianMatrixSpec: mean size mismatch");
        if (cov.rows() != size || cov.cols() != size)
            throw std::domain_error("GaussianMatrixSpec: cov size mismatch");
        if (cov != cov.transpose())
            throw std::domain_error("GaussianMatrixSpec: cov must be stored symmetrically");
        for (int a = 0; a < size; ++a)
            if (cov(a, a) < 0.0) throw NotPsdError(cov(a, a));
        cholesky_psd(cov);  // throws NotPsdError beyond tolerance
    }
};

// gamma^X_{a,b} = E((X_a - X_b)^2) for the centered parts.
inline double increment_variance(const GaussianMatrixSpec& spec, int a, int b) {
    const int size = spec.shape.entry_count();
    if (a < 0 || a >= size || b < 0 || b >= size)
        throw std::domain_error("increment_variance: entry index out of range");
    double value = spec.cov(a, a) - 2.0 * spec.cov(a, b) + spec.cov(b, b);
    if (value < 0.0) {
        if (value >= -1e-12) return 0.0;
        throw std::domain_error("increment_variance: negative increment beyond roundoff");
    }
    return value;
}

// gamma = max over entry pairs of |gamma^X - gamma^Y|.
inline double gamma_discrepancy(const GaussianMatrixSpec& x, const GaussianMatrixSpec& y) {
    if (!(x.shape == y.shape)) throw std::domain_error("gamma_discrepancy: shape mismatch");
    const int size = x.shape.entry_count();
    double best = 0.0;
    for (int a = 0; a < size; ++a)
        for (int b = 0; b < size; ++b)
            best = std::max(best,
                            std::abs(increment_variance(x, a, b) - increment_variance(y, a, b)));
    return best;
}

// Random-access sampler: rep -> n x m matrix. Each replication uses its own
// substream, so outputs are independent of threading and sampling order.
class GaussianSampler {
public:
    GaussianSampler(GaussianMatrixSpec spec, SeedSpec seed)
        : spec_(std::move(spec)), factor_(cholesky_psd(spec_.cov)), seed_(seed) {
        spec_.shape.validate();
    }

    [[nodiscard]] Matrix operator()(std::uint64_t rep) const {
        auto eng = rng::engine_for(seed_, rep);
        Vector z(factor_.rank);
        rng::fill_normals(eng, {z.data(), static_cast<std::size_t>(z.size())});
        Vector flat = spec_.mean;
        if (factor_.rank > 0) flat += factor_.lower.leftCols(factor_.rank) * z;
        return Eigen::Map<const RowMajorMatrix>(flat.data(), spec_.shape.n, spec_.shape.m);
    }

    [[nodiscard]] const GaussianMatrixSpec& spec() const noexcept { return spec_; }
    [[nodiscard]] const CholeskyFactor& factor() const noexcept { return factor_; }
    [[nodiscard]] SeedSpec seed() const noexcept { return seed_; }

private:
    GaussianMatrixSpec spec_;
    CholeskyFactor factor_;
    SeedSpec seed_;
};

inline std::vector<Matrix> sample(const GaussianMatrixSpec& spec, SeedSpec seed,
                                  std::uint64_t reps) {
    GaussianSampler sampler(spec, seed);
    std::vector<Matrix> out(reps);
    for_each_chunk(reps, kDefaultChunk, [&](std::uint64_t, std::uint64_t lo, std::uint64_t hi) {
        for (std::uint64_t r = lo; r < hi; ++r) out[r] = sampler(r);
    });
    return out;
}

}  // namespace minmax
