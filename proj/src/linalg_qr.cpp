#include <algorithm>
#include <atomic>
#include <cmath>

#include "prac/errors.hpp"
#include "prac/linalg.hpp"
#include "prac/rng.hpp"

namespace prac {

namespace {

std::atomic<std::uint64_t> g_svd_calls{0};
std::atomic<std::uint64_t> g_qr_calls{0};

}  // namespace

namespace detail {
void count_svd_call() { g_svd_calls.fetch_add(1, std::memory_order_relaxed); }
void count_qr_call() { g_qr_calls.fetch_add(1, std::memory_order_relaxed); }
}  // namespace detail

DecompositionCounts decomposition_counts() {
    return {g_svd_calls.load(std::memory_order_relaxed),
            g_qr_calls.load(std::memory_order_relaxed)};
}

void reset_decomposition_counts() {
    g_svd_calls.store(0, std::memory_order_relaxed);
    g_qr_calls.store(0, std::memory_order_relaxed);
}

void thin_qr_into(const DenseMatrix& a, DenseMatrix& q, QrScratch& scratch) {
    const std::size_t m = a.rows();
    const std::size_t k = a.cols();
    if (m < k) throw ParameterError("thin_qr: need rows >= cols");
    if (k == 0) {
        q = DenseMatrix(m, 0);
        return;
    }

    DenseMatrix& w = scratch.work;
    w = a;
    scratch.beta.assign(k, 0.0);
    scratch.diag.assign(k, 0.0);

    const double deficiency_cutoff = 1e-12 * a.frobenius_norm();

    // Householder triangularization; reflector j is stored in w(j..m-1, j)
    // with its scale in beta[j], and R_jj in diag[j].
    for (std::size_t j = 0; j < k; ++j) {
        double norm_sq = 0.0;
        for (std::size_t i = j; i < m; ++i) norm_sq += w(i, j) * w(i, j);
        const double norm = std::sqrt(norm_sq);
        const double x0 = w(j, j);
        const double alpha = (x0 >= 0.0) ? -norm : norm;
        if (std::fabs(alpha) < deficiency_cutoff || norm == 0.0)
            throw DegenerateInputError("thin_qr: numerically rank-deficient input at column " +
                                       std::to_string(j));
        w(j, j) = x0 - alpha;
        double v_sq = 0.0;
        for (std::size_t i = j; i < m; ++i) v_sq += w(i, j) * w(i, j);
        const double beta = (v_sq > 0.0) ? 2.0 / v_sq : 0.0;
        scratch.beta[j] = beta;
        scratch.diag[j] = alpha;
        for (std::size_t c = j + 1; c < k; ++c) {
            double dot = 0.0;
            for (std::size_t i = j; i < m; ++i) dot += w(i, j) * w(i, c);
            const double f = beta * dot;
            for (std::size_t i = j; i < m; ++i) w(i, c) -= f * w(i, j);
        }
    }

    // Q = H_0 · H_1 · ... · H_{k-1} applied to the first k columns of I.
    if (q.rows() != m || q.cols() != k) q = DenseMatrix(m, k);
    else std::fill(q.data(), q.data() + q.size(), 0.0);
    for (std::size_t j = 0; j < k; ++j) q(j, j) = 1.0;
    for (std::size_t j = k; j-- > 0;) {
        const double beta = scratch.beta[j];
        for (std::size_t c = 0; c < k; ++c) {
            double dot = 0.0;
            for (std::size_t i = j; i < m; ++i) dot += w(i, j) * q(i, c);
            const double f = beta * dot;
            for (std::size_t i = j; i < m; ++i) q(i, c) -= f * w(i, j);
        }
    }

    // R-diagonal-positive convention.
    for (std::size_t j = 0; j < k; ++j) {
        if (scratch.diag[j] < 0.0)
            for (std::size_t i = 0; i < m; ++i) q(i, j) = -q(i, j);
    }
}

DenseMatrix thin_qr(const DenseMatrix& a) {
    ensure_finite(a, "thin_qr");
    detail::count_qr_call();
    DenseMatrix q;
    QrScratch scratch;
    thin_qr_into(a, q, scratch);
    return q;
}

DenseMatrix complement_project(const DenseMatrix& q1, const DenseMatrix& s) {
    if (q1.cols() == 0) return s;
    if (q1.rows() != s.rows())
        throw ParameterError("complement_project: Q1 and S row counts differ");
    ensure_finite(q1, "complement_project");
    ensure_finite(s, "complement_project");
    // Q1ᵀQ1 = I to 1e-8.
    DenseMatrix gram = matmul_at_b(q1, q1);
    for (std::size_t i = 0; i < gram.rows(); ++i)
        for (std::size_t j = 0; j < gram.cols(); ++j) {
            const double want = (i == j) ? 1.0 : 0.0;
            if (std::fabs(gram(i, j) - want) > 1e-8)
                throw PreconditionError("complement_project: Q1 is not orthonormal");
        }
    DenseMatrix out = s;
    DenseMatrix tmp;
    complement_project_into(q1, out, tmp);
    return out;
}

void complement_project_into(const DenseMatrix& q1, DenseMatrix& s, DenseMatrix& tmp) {
    if (q1.cols() == 0) return;
    gemm(tmp, q1, s, /*trans_a=*/true);
    gemm(s, q1, tmp, false, false, -1.0, 1.0);
}

double spectral_norm(const DenseMatrix& a, double rel_tol, std::size_t max_iter) {
    if (a.size() == 0) return 0.0;
    if (a.frobenius_norm() == 0.0) return 0.0;
    DenseMatrix v = sample_gaussian(a.cols(), 1, /*seed=*/0x51D3C7A1u);
    double norm_v = v.frobenius_norm();
    scale_in_place(v, 1.0 / norm_v);
    DenseMatrix av, atav;
    double sigma = 0.0;
    for (std::size_t it = 0; it < max_iter; ++it) {
        gemm(av, a, v);
        const double sigma_new = av.frobenius_norm();
        gemm(atav, a, av, /*trans_a=*/true);
        const double n = atav.frobenius_norm();
        if (n == 0.0) return 0.0;
        scale_in_place(atav, 1.0 / n);
        v = atav;
        if (it > 0 && std::fabs(sigma_new - sigma) <= rel_tol * sigma_new) return sigma_new;
        sigma = sigma_new;
    }
    return sigma;
}

}  // namespace prac
