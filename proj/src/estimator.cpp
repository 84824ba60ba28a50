#include "prac/estimator.hpp"

#include <algorithm>
#include <cmath>

#include "prac/errors.hpp"
#include "prac/linalg.hpp"
#include "prac/rng.hpp"

namespace prac {

namespace {

constexpr double kZClamp = 1e30;

// Entry stderr below this fraction of the data scale counts as "exact";
// deviations are then judged absolutely instead of in stderr units.
double entry_z(double deviation, double std_error, double scale) {
    if (std_error > 1e-14 * scale) return std::fabs(deviation) / std_error;
    return (std::fabs(deviation) <= 1e-10 * scale) ? 0.0 : kZClamp;
}

struct EntryStats {
    DenseMatrix sum;
    DenseMatrix sum_sq;

    void init(std::size_t rows, std::size_t cols) {
        sum = DenseMatrix(rows, cols, 0.0);
        sum_sq = DenseMatrix(rows, cols, 0.0);
    }
    void add(std::size_t i, std::size_t j, double v) {
        sum(i, j) += v;
        sum_sq(i, j) += v * v;
    }
    DenseMatrix mean(std::size_t trials) const {
        DenseMatrix m = sum;
        scale_in_place(m, 1.0 / static_cast<double>(trials));
        return m;
    }
    DenseMatrix std_error(std::size_t trials) const {
        const double n = static_cast<double>(trials);
        DenseMatrix se(sum.rows(), sum.cols());
        for (std::size_t i = 0; i < sum.size(); ++i) {
            const double mean = sum.data()[i] / n;
            const double var = std::max(0.0, (sum_sq.data()[i] / n - mean * mean) * n / (n - 1.0));
            se.data()[i] = std::sqrt(var / n);
        }
        return se;
    }
};

struct ScalarStats {
    double sum = 0.0;
    double sum_sq = 0.0;
    std::size_t count = 0;

    void add(double v) {
        sum += v;
        sum_sq += v * v;
        ++count;
    }
    double mean() const { return sum / static_cast<double>(count); }
    double std_error() const {
        const double n = static_cast<double>(count);
        const double m = mean();
        const double var = std::max(0.0, (sum_sq / n - m * m) * n / (n - 1.0));
        return std::sqrt(var / n);
    }
};

double tail_energy(const std::vector<double>& sigma, std::size_t from) {
    double t = 0.0;
    for (std::size_t i = from; i < sigma.size(); ++i) t += sigma[i] * sigma[i];
    return t;
}

// Draw Q2 in the complement of q1 (q1 may have zero columns). All buffers are
// caller-owned so trial loops allocate nothing.
void draw_q2(const DenseMatrix& q1, std::size_t n, std::size_t r2, Rng& rng, DenseMatrix& s,
             DenseMatrix& tmp, DenseMatrix& q2, QrScratch& scratch) {
    sample_gaussian_into(s, n, r2, rng);
    complement_project_into(q1, s, tmp);
    thin_qr_into(s, q2, scratch);
}

}  // namespace

DegenerateProfile spectral_profile(const DenseMatrix& x, std::size_t s) {
    const std::size_t mindim = std::min(x.rows(), x.cols());
    if (s > mindim) throw ParameterError("spectral_profile: head count exceeds min dimension");
    DegenerateProfile p;
    p.s = s;
    p.sigma = thin_svd(x, mindim).sigma;
    p.q = tail_energy(p.sigma, s);
    const double total = tail_energy(p.sigma, 0);
    p.cumulative_energy.resize(mindim);
    double prefix = 0.0;
    for (std::size_t i = 0; i < mindim; ++i) {
        prefix += p.sigma[i] * p.sigma[i];
        p.cumulative_energy[i] = total > 0.0 ? prefix / total : 0.0;
    }
    return p;
}

double theoretical_variance(ProjectionMode mode, std::size_t n, std::size_t r1, std::size_t r2,
                            const DenseMatrix& x) {
    validate_projection_ranks(mode, n, r1, r2);
    if (x.cols() != n) throw ParameterError("theoretical_variance: width mismatch");
    if (mode == ProjectionMode::RAC)
        return (static_cast<double>(n) / static_cast<double>(r2) - 1.0) *
               x.squared_frobenius_norm();
    const std::size_t mindim = std::min(x.rows(), x.cols());
    const std::vector<double> sigma = thin_svd(x, mindim).sigma;
    const double tail = tail_energy(sigma, std::min(r1, mindim));
    if (mode == ProjectionMode::PAC) return tail;
    const double k = scaling_factor(ProjectionMode::PRAC, n, r1, r2);
    return (k - 1.0) * tail;
}

double theoretical_variance(ProjectionMode mode, std::size_t n, std::size_t r1, std::size_t r2,
                            const DegenerateProfile& profile) {
    validate_projection_ranks(mode, n, r1, r2);
    if (mode == ProjectionMode::RAC)
        return (static_cast<double>(n) / static_cast<double>(r2) - 1.0) *
               tail_energy(profile.sigma, 0);
    const double tail = tail_energy(profile.sigma, std::min(r1, profile.sigma.size()));
    if (mode == ProjectionMode::PAC) return tail;
    const double k = scaling_factor(ProjectionMode::PRAC, n, r1, r2);
    return (k - 1.0) * tail;
}

double minimax_lower_bound(std::size_t n, std::size_t s, std::size_t r, double q) {
    if (s >= r || r >= n)
        throw ParameterError("minimax_lower_bound: need s < r < n");
    if (q < 0.0) throw ParameterError("minimax_lower_bound: q must be non-negative");
    return (static_cast<double>(n - s) / static_cast<double>(r - s) - 1.0) * q;
}

MomentReport mc_reconstruction_moments(const DenseMatrix& x, ProjectionMode mode, std::size_t r1,
                                       std::size_t r2, std::size_t trials, std::uint64_t seed) {
    const std::size_t m = x.rows();
    const std::size_t n = x.cols();
    validate_projection_ranks(mode, n, r1, r2);
    if (trials < 100) throw ParameterError("mc_reconstruction_moments: need at least 100 trials");
    ensure_finite(x, "mc_reconstruction_moments");

    MomentReport report;
    report.trials = trials;
    report.seed = seed;
    report.mode = mode;
    report.r1 = r1;
    report.r2 = r2;
    report.theory_mse = theoretical_variance(mode, n, r1, r2, x);

    // Fixed principal part: F = X·Q1·Q1ᵀ from one SVD of X.
    DenseMatrix q1(n, 0);
    if (r1 > 0) q1 = thin_svd(x, r1).v;
    DenseMatrix fixed(m, n, 0.0);
    if (r1 > 0) {
        DenseMatrix xq1 = matmul(x, q1);
        gemm(fixed, xq1, q1, false, /*trans_b=*/true);
    }

    const double scale = std::max(1.0, max_abs(x));
    if (mode == ProjectionMode::PAC) {
        report.bias_fro = frobenius_diff(fixed, x);
        report.mse = report.bias_fro * report.bias_fro;
        report.mse_std_error = 0.0;
        double worst = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i)
            worst = std::max(worst, entry_z(fixed.data()[i] - x.data()[i], 0.0, scale));
        report.max_entry_z = worst;
        return report;
    }

    const double k = scaling_factor(mode, n, r1, r2);
    EntryStats entries;
    entries.init(m, n);
    ScalarStats err_sq;
    DenseMatrix s, tmp, q2, b;
    QrScratch scratch;
    for (std::size_t trial = 0; trial < trials; ++trial) {
        Rng rng(derive_seed(seed, trial));
        draw_q2(q1, n, r2, rng, s, tmp, q2, scratch);
        gemm(b, x, q2);  // m×r2
        double err = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            const double* b_row = b.row(i);
            for (std::size_t j = 0; j < n; ++j) {
                const double* q2_row = q2.row(j);
                double dot = 0.0;
                for (std::size_t c = 0; c < r2; ++c) dot += b_row[c] * q2_row[c];
                const double xt = fixed(i, j) + k * dot;
                const double d = xt - x(i, j);
                err += d * d;
                entries.add(i, j, xt);
            }
        }
        err_sq.add(err);
    }

    report.mse = err_sq.mean();
    report.mse_std_error = err_sq.std_error();
    DenseMatrix mean = entries.mean(trials);
    report.bias_fro = frobenius_diff(mean, x);
    DenseMatrix se = entries.std_error(trials);
    double worst = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i)
        worst = std::max(worst, entry_z(mean.data()[i] - x.data()[i], se.data()[i], scale));
    report.max_entry_z = worst;
    return report;
}

MatrixMoments mc_projector_second_moment_stats(const DenseMatrix& q1, std::size_t r2,
                                               std::size_t trials, std::uint64_t seed) {
    const std::size_t n = q1.rows();
    const std::size_t r1 = q1.cols();
    if (r2 < 1 || r1 + r2 > n)
        throw ParameterError("mc_projector_second_moment: need 1 <= r2 <= n - r1");
    if (trials < 100) throw ParameterError("mc_projector_second_moment: need at least 100 trials");
    if (r1 > 0) {
        DenseMatrix gram = matmul_at_b(q1, q1);
        if (max_abs_diff(gram, DenseMatrix::identity(r1)) > 1e-8)
            throw PreconditionError("mc_projector_second_moment: Q1 is not orthonormal");
    }

    EntryStats entries;
    entries.init(n, n);
    DenseMatrix s, tmp, q2;
    QrScratch scratch;
    for (std::size_t trial = 0; trial < trials; ++trial) {
        Rng rng(derive_seed(seed, trial));
        draw_q2(q1, n, r2, rng, s, tmp, q2, scratch);
        for (std::size_t i = 0; i < n; ++i) {
            const double* qi = q2.row(i);
            for (std::size_t j = 0; j < n; ++j) {
                const double* qj = q2.row(j);
                double dot = 0.0;
                for (std::size_t c = 0; c < r2; ++c) dot += qi[c] * qj[c];
                entries.add(i, j, dot);
            }
        }
    }

    MatrixMoments mm;
    mm.trials = trials;
    mm.mean = entries.mean(trials);
    mm.std_error = entries.std_error(trials);
    return mm;
}

DenseMatrix mc_projector_second_moment(const DenseMatrix& q1, std::size_t r2, std::size_t trials,
                                       std::uint64_t seed) {
    return mc_projector_second_moment_stats(q1, r2, trials, seed).mean;
}

MomentReport gradient_estimator_moments(const DenseMatrix& x, const DenseMatrix& gy,
                                        ProjectionMode mode, std::size_t r1, std::size_t r2,
                                        std::size_t trials, std::uint64_t seed) {
    const std::size_t m = x.rows();
    const std::size_t n = x.cols();
    const std::size_t p = gy.cols();
    if (gy.rows() != m) throw ParameterError("gradient_estimator_moments: row mismatch");
    validate_projection_ranks(mode, n, r1, r2);
    if (trials < 100) throw ParameterError("gradient_estimator_moments: need at least 100 trials");
    ensure_finite(x, "gradient_estimator_moments");
    ensure_finite(gy, "gradient_estimator_moments");

    MomentReport report;
    report.trials = trials;
    report.seed = seed;
    report.mode = mode;
    report.r1 = r1;
    report.r2 = r2;
    const double gy_spectral = spectral_norm(gy);
    report.theory_mse = theoretical_variance(mode, n, r1, r2, x) * gy_spectral * gy_spectral;

    DenseMatrix exact = matmul_at_b(x, gy);  // n×p

    DenseMatrix q1(n, 0);
    if (r1 > 0) q1 = thin_svd(x, r1).v;
    DenseMatrix fixed_g(n, p, 0.0);
    if (r1 > 0) {
        // (X·Q1·Q1ᵀ)ᵀ·Gy = Q1·Q1ᵀ·XᵀGy
        DenseMatrix q1t_exact = matmul_at_b(q1, exact);
        gemm(fixed_g, q1, q1t_exact);
    }

    const double scale = std::max(1.0, max_abs(exact));
    if (mode == ProjectionMode::PAC) {
        report.bias_fro = frobenius_diff(fixed_g, exact);
        report.mse = report.bias_fro * report.bias_fro;
        double worst = 0.0;
        for (std::size_t i = 0; i < exact.size(); ++i)
            worst = std::max(worst, entry_z(fixed_g.data()[i] - exact.data()[i], 0.0, scale));
        report.max_entry_z = worst;
        return report;
    }

    const double k = scaling_factor(mode, n, r1, r2);
    EntryStats entries;
    entries.init(n, p);
    ScalarStats err_sq;
    DenseMatrix s, tmp, q2, b, c, gt;
    QrScratch scratch;
    for (std::size_t trial = 0; trial < trials; ++trial) {
        Rng rng(derive_seed(seed, trial));
        draw_q2(q1, n, r2, rng, s, tmp, q2, scratch);
        gemm(b, x, q2);                       // m×r2
        gemm(c, b, gy, /*trans_a=*/true);     // r2×p
        gt = fixed_g;
        gemm(gt, q2, c, false, false, k, 1.0);  // G̃ = fixed + k·Q2·C
        double err = 0.0;
        for (std::size_t i = 0; i < gt.size(); ++i) {
            const double d = gt.data()[i] - exact.data()[i];
            err += d * d;
            entries.add(i / p, i % p, gt.data()[i]);
        }
        err_sq.add(err);
    }

    report.mse = err_sq.mean();
    report.mse_std_error = err_sq.std_error();
    DenseMatrix mean = entries.mean(trials);
    report.bias_fro = frobenius_diff(mean, exact);
    DenseMatrix se = entries.std_error(trials);
    double worst = 0.0;
    for (std::size_t i = 0; i < exact.size(); ++i)
        worst = std::max(worst, entry_z(mean.data()[i] - exact.data()[i], se.data()[i], scale));
    report.max_entry_z = worst;
    return report;
}

}  // namespace prac
