#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "prac/errors.hpp"
#include "prac/linalg.hpp"
#include "prac/matrix.hpp"
#include "prac/rng.hpp"

using namespace prac;

namespace {

double max_ortho_defect(const DenseMatrix& q) {
    DenseMatrix g = matmul_at_b(q, q);
    double worst = 0.0;
    for (std::size_t i = 0; i < g.rows(); ++i)
        for (std::size_t j = 0; j < g.cols(); ++j)
            worst = std::max(worst, std::fabs(g(i, j) - (i == j ? 1.0 : 0.0)));
    return worst;
}

DenseMatrix reconstruct_svd(const SvdResult& r) {
    DenseMatrix us = r.u;
    for (std::size_t j = 0; j < r.sigma.size(); ++j)
        for (std::size_t i = 0; i < us.rows(); ++i) us(i, j) *= r.sigma[j];
    return matmul_a_bt(us, r.v);
}

// Classical Gram–Schmidt with renormalization; the independent QR oracle.
DenseMatrix gram_schmidt(const DenseMatrix& a) {
    DenseMatrix q = a;
    for (std::size_t j = 0; j < a.cols(); ++j) {
        for (std::size_t c = 0; c < j; ++c) {
            double dot = 0.0;
            for (std::size_t i = 0; i < a.rows(); ++i) dot += q(i, c) * q(i, j);
            for (std::size_t i = 0; i < a.rows(); ++i) q(i, j) -= dot * q(i, c);
        }
        double norm = 0.0;
        for (std::size_t i = 0; i < a.rows(); ++i) norm += q(i, j) * q(i, j);
        norm = std::sqrt(norm);
        for (std::size_t i = 0; i < a.rows(); ++i) q(i, j) /= norm;
    }
    return q;
}

DenseMatrix random_orthonormal(std::size_t n, std::size_t k, std::uint64_t seed) {
    return thin_qr(sample_gaussian(n, k, seed));
}

// X with a chosen singular spectrum via random orthogonal factors.
DenseMatrix with_spectrum(std::size_t m, std::size_t n, const std::vector<double>& sigma,
                          std::uint64_t seed) {
    DenseMatrix a = random_orthonormal(m, sigma.size(), derive_seed(seed, 1));
    DenseMatrix b = random_orthonormal(n, sigma.size(), derive_seed(seed, 2));
    for (std::size_t j = 0; j < sigma.size(); ++j)
        for (std::size_t i = 0; i < m; ++i) a(i, j) *= sigma[j];
    return matmul_a_bt(a, b);
}

}  // namespace

TEST_CASE("thin_svd on a diagonal matrix") {
    DenseMatrix x = DenseMatrix::diagonal({3.0, 2.0, 1.0});
    SvdResult r = thin_svd(x, 2);
    REQUIRE(r.sigma.size() == 2);
    CHECK(r.sigma[0] == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(r.sigma[1] == doctest::Approx(2.0).epsilon(1e-12));
    // Sign convention resolves the columns to +e1, +e2.
    CHECK(r.v(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r.v(1, 1) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::fabs(r.v(1, 0)) < 1e-12);
    CHECK(std::fabs(r.v(2, 0)) < 1e-12);
    CHECK(std::fabs(r.v(0, 1)) < 1e-12);
}

TEST_CASE("thin_svd full-rank exactness on a 4x3 matrix") {
    DenseMatrix x = sample_gaussian(4, 3, 42);
    SvdResult r = thin_svd(x, 3);
    CHECK(max_abs_diff(reconstruct_svd(r), x) < 1e-10);
    CHECK(max_ortho_defect(r.u) < 1e-10);
    CHECK(max_ortho_defect(r.v) < 1e-10);
}

TEST_CASE("thin_svd of the rank-one ones matrix") {
    // XᵀX = [[2,2],[2,2]] has eigenvalues {4, 0}, so sigma is {2, 0}.
    DenseMatrix x{{1.0, 1.0}, {1.0, 1.0}};
    SvdResult r1 = thin_svd(x, 1);
    CHECK(r1.sigma[0] == doctest::Approx(2.0).epsilon(1e-12));
    SvdResult r2 = thin_svd(x, 2);
    CHECK(std::fabs(r2.sigma[1]) < 1e-10);
    CHECK(max_ortho_defect(r2.u) < 1e-10);
}

TEST_CASE("thin_svd rejects bad rank and non-finite values") {
    DenseMatrix x = sample_gaussian(4, 3, 1);
    CHECK_THROWS_AS(thin_svd(x, 0), ParameterError);
    CHECK_THROWS_AS(thin_svd(x, 4), ParameterError);
    x(1, 1) = std::nan("");
    CHECK_THROWS_AS(thin_svd(x, 2), DataError);
}

TEST_CASE("thin_svd properties on 100 seeded random matrices") {
    for (std::uint64_t i = 0; i < 100; ++i) {
        const std::uint64_t seed = derive_seed(2024, i);
        const std::size_t m = 1 + seed % 64;
        const std::size_t n = 1 + (seed >> 8) % 64;
        const std::size_t mindim = std::min(m, n);
        DenseMatrix x = sample_gaussian(m, n, derive_seed(seed, 3));
        SvdResult full = thin_svd(x, mindim);
        CHECK(max_ortho_defect(full.u) < 1e-10);
        CHECK(max_ortho_defect(full.v) < 1e-10);
        for (std::size_t j = 0; j + 1 < mindim; ++j) CHECK(full.sigma[j] >= full.sigma[j + 1]);
        CHECK(full.sigma.back() >= 0.0);

        const std::size_t r = 1 + (seed >> 16) % mindim;
        SvdResult cut = thin_svd(x, r);
        double tail = 0.0;
        for (std::size_t j = r; j < mindim; ++j) tail += full.sigma[j] * full.sigma[j];
        const double err = frobenius_diff(x, reconstruct_svd(cut));
        CHECK(std::fabs(err - std::sqrt(tail)) < 1e-8);
    }
}

TEST_CASE("thin_svd recovers constructed spectra through both code paths") {
    // Column counts straddle the Jacobi/Golub–Kahan switch at 128.
    for (std::size_t n : {24UL, 130UL}) {
        std::vector<double> sigma;
        for (std::size_t i = 0; i < n; ++i) sigma.push_back(100.0 / (1.0 + static_cast<double>(i)));
        // Repeated values and a zero tail stress deflation.
        sigma[3] = sigma[4];
        for (std::size_t i = n - 3; i < n; ++i) sigma[i] = 0.0;
        DenseMatrix x = with_spectrum(n + 10, n, sigma, 77 + n);
        SvdResult r = thin_svd(x, n);
        std::vector<double> want = sigma;
        std::sort(want.rbegin(), want.rend());
        for (std::size_t i = 0; i < n; ++i)
            CHECK(std::fabs(r.sigma[i] - want[i]) < 1e-8 * (1.0 + want[0]));
        CHECK(max_ortho_defect(r.u) < 1e-10);
        CHECK(max_ortho_defect(r.v) < 1e-10);
        CHECK(frobenius_diff(x, reconstruct_svd(r)) < 1e-8);
    }
}

TEST_CASE("thin_svd wide-matrix handling") {
    DenseMatrix x = sample_gaussian(20, 140, 5);
    SvdResult r = thin_svd(x, 20);
    CHECK(max_ortho_defect(r.u) < 1e-10);
    CHECK(max_ortho_defect(r.v) < 1e-10);
    CHECK(frobenius_diff(x, reconstruct_svd(r)) < 1e-8);

    DenseMatrix y = sample_gaussian(135, 150, 6);
    SvdResult ry = thin_svd(y, 135);
    CHECK(max_ortho_defect(ry.u) < 1e-10);
    CHECK(frobenius_diff(y, reconstruct_svd(ry)) < 1e-7 * y.frobenius_norm());
}

TEST_CASE("thin_qr of an already-orthogonal-up-to-scaling matrix") {
    DenseMatrix a{{1.0, 0.0}, {0.0, 2.0}, {0.0, 0.0}};
    DenseMatrix q = thin_qr(a);
    CHECK(q(0, 0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(q(1, 1) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(std::fabs(q(2, 0)) < 1e-14);
    CHECK(std::fabs(q(2, 1)) < 1e-14);
    CHECK(std::fabs(q(0, 1)) < 1e-14);
    CHECK(std::fabs(q(1, 0)) < 1e-14);
}

TEST_CASE("thin_qr is idempotent on orthonormal inputs") {
    for (std::uint64_t seed : {11ULL, 12ULL, 13ULL}) {
        DenseMatrix q0 = random_orthonormal(12, 5, seed);
        DenseMatrix q1 = thin_qr(q0);
        CHECK(max_abs_diff(q0, q1) < 1e-12);
    }
}

TEST_CASE("thin_qr against the Gram-Schmidt oracle") {
    DenseMatrix a{{1.0, 1.0}, {1.0, 0.0}, {0.0, 1.0}};
    DenseMatrix q = thin_qr(a);
    CHECK(max_ortho_defect(q) < 1e-10);
    DenseMatrix oracle = gram_schmidt(a);
    CHECK(max_abs_diff(q, oracle) < 1e-12);

    DenseMatrix b = sample_gaussian(30, 8, 99);
    CHECK(max_abs_diff(thin_qr(b), gram_schmidt(b)) < 1e-9);
}

TEST_CASE("thin_qr spans the input columns") {
    DenseMatrix a = sample_gaussian(16, 6, 4);
    DenseMatrix q = thin_qr(a);
    // Residual of projecting A onto span(Q) must vanish.
    DenseMatrix proj = matmul(q, matmul_at_b(q, a));
    CHECK(max_abs_diff(proj, a) < 1e-10);
}

TEST_CASE("thin_qr rejects rank-deficient input") {
    DenseMatrix a(6, 3);
    for (std::size_t i = 0; i < 6; ++i) {
        a(i, 0) = static_cast<double>(i) + 1.0;
        a(i, 1) = 2.0 * (static_cast<double>(i) + 1.0);
        a(i, 2) = 1.0;
    }
    CHECK_THROWS_AS(thin_qr(a), DegenerateInputError);
    CHECK_THROWS_AS(thin_qr(DenseMatrix(4, 2)), DegenerateInputError);
    CHECK_THROWS_AS(thin_qr(sample_gaussian(3, 5, 1)), ParameterError);
}

TEST_CASE("sample_gaussian moments and determinism") {
    DenseMatrix g = sample_gaussian(1000, 1000, 7);
    double sum = 0.0, sum_sq = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        sum += g.data()[i];
        sum_sq += g.data()[i] * g.data()[i];
    }
    const double n = static_cast<double>(g.size());
    const double mean = sum / n;
    const double var = sum_sq / n - mean * mean;
    CHECK(std::fabs(mean) < 0.01);
    CHECK(var > 0.99);
    CHECK(var < 1.01);

    CHECK(sample_gaussian(17, 9, 123) == sample_gaussian(17, 9, 123));
    CHECK_FALSE(sample_gaussian(17, 9, 123) == sample_gaussian(17, 9, 124));
}

TEST_CASE("complement_project basics") {
    DenseMatrix q1(3, 1);
    q1(0, 0) = 1.0;
    DenseMatrix s(3, 1, 1.0);
    DenseMatrix so = complement_project(q1, s);
    CHECK(so(0, 0) == doctest::Approx(0.0));
    CHECK(so(1, 0) == doctest::Approx(1.0));
    CHECK(so(2, 0) == doctest::Approx(1.0));

    DenseMatrix empty(3, 0);
    CHECK(complement_project(empty, s) == s);

    DenseMatrix bad(3, 2, 0.5);
    CHECK_THROWS_AS(complement_project(bad, s), PreconditionError);
}

TEST_CASE("complement_project orthogonality and idempotence") {
    DenseMatrix q1 = random_orthonormal(20, 6, 21);
    DenseMatrix s = sample_gaussian(20, 5, 22);
    DenseMatrix so = complement_project(q1, s);
    CHECK(max_abs(matmul_at_b(q1, so)) <= 1e-10);
    DenseMatrix twice = complement_project(q1, so);
    CHECK(max_abs_diff(twice, so) < 1e-10);
}

TEST_CASE("spectral_norm matches the dominant singular value") {
    DenseMatrix d = DenseMatrix::diagonal({5.0, 3.0, 1.0});
    CHECK(spectral_norm(d) == doctest::Approx(5.0).epsilon(1e-7));

    DenseMatrix x = sample_gaussian(12, 7, 31);
    SvdResult r = thin_svd(x, 1);
    CHECK(spectral_norm(x) == doctest::Approx(r.sigma[0]).epsilon(1e-6));
    CHECK(spectral_norm(DenseMatrix(4, 4)) == 0.0);
}

TEST_CASE("decomposition counters track calls") {
    reset_decomposition_counts();
    DenseMatrix x = sample_gaussian(8, 4, 3);
    (void)thin_svd(x, 2);
    (void)thin_qr(x);
    (void)thin_qr(x);
    auto counts = decomposition_counts();
    CHECK(counts.svd == 1);
    CHECK(counts.qr >= 2);  // random_orthonormal helpers elsewhere may add more
}
