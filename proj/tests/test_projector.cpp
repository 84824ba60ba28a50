#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "prac/errors.hpp"
#include "prac/linalg.hpp"
#include "prac/matrix.hpp"
#include "prac/projector.hpp"
#include "prac/rng.hpp"

using namespace prac;

namespace {

void check_basis_invariants(const BasisPtr& b) {
    if (b->r1 > 0) {
        DenseMatrix g1 = matmul_at_b(b->q1, b->q1);
        CHECK(max_abs_diff(g1, DenseMatrix::identity(b->r1)) < 1e-10);
    }
    if (b->r2 > 0) {
        DenseMatrix g2 = matmul_at_b(b->q2, b->q2);
        CHECK(max_abs_diff(g2, DenseMatrix::identity(b->r2)) < 1e-10);
    }
    if (b->r1 > 0 && b->r2 > 0) CHECK(max_abs(matmul_at_b(b->q1, b->q2)) < 1e-10);
}

}  // namespace

TEST_CASE("scaling factor per mode") {
    CHECK(scaling_factor(ProjectionMode::PRAC, 768, 230, 230) ==
          doctest::Approx(538.0 / 230.0).epsilon(1e-15));
    CHECK(scaling_factor(ProjectionMode::RAC, 10, 0, 5) == doctest::Approx(2.0));
    CHECK(scaling_factor(ProjectionMode::PAC, 16, 4, 0) == 1.0);
    CHECK(scaling_factor(ProjectionMode::PRAC, 8, 3, 5) == doctest::Approx(1.0));
    CHECK(scaling_factor(ProjectionMode::PRAC, 16, 4, 6, 0.5) ==
          doctest::Approx(0.5 * 12.0 / 6.0));
    CHECK_THROWS_AS(scaling_factor(ProjectionMode::PRAC, 16, 4, 6, 0.0), ParameterError);
}

TEST_CASE("build_basis produces orthonormal orthogonal subspaces") {
    DenseMatrix x = sample_gaussian(32, 16, 9);
    BasisPtr b = build_basis(x, ProjectionMode::PRAC, 4, 6, 17);
    CHECK(b->n == 16);
    CHECK(b->k == doctest::Approx(12.0 / 6.0));
    check_basis_invariants(b);

    // Q1 spans the same subspace as the top right singular vectors.
    SvdResult svd = thin_svd(x, 4);
    CHECK(max_abs_diff(b->q1, svd.v) < 1e-12);
}

TEST_CASE("build_basis rank and mode validation") {
    DenseMatrix x = sample_gaussian(8, 8, 1);
    CHECK_THROWS_AS(build_basis(x, ProjectionMode::PRAC, 4, 0, 1), ParameterError);
    CHECK_THROWS_AS(build_basis(x, ProjectionMode::PRAC, 0, 4, 1), ParameterError);
    CHECK_THROWS_AS(build_basis(x, ProjectionMode::PAC, 0, 0, 1), ParameterError);
    CHECK_THROWS_AS(build_basis(x, ProjectionMode::RAC, 1, 4, 1), ParameterError);
    CHECK_THROWS_AS(build_basis(x, ProjectionMode::PRAC, 5, 4, 1), ParameterError);
    CHECK_THROWS_AS(build_basis(x, ProjectionMode::None, 1, 1, 1), ParameterError);
    // SVD needs at least r1 rows.
    CHECK_THROWS_AS(build_basis(sample_gaussian(3, 8, 2), ProjectionMode::PRAC, 4, 2, 1),
                    ParameterError);
}

TEST_CASE("full-rank basis reconstructs exactly") {
    DenseMatrix x = sample_gaussian(12, 8, 33);
    BasisPtr b = build_basis(x, ProjectionMode::PRAC, 3, 5, 71);
    CHECK(b->k == doctest::Approx(1.0));
    CompressedActivation ca = compress(x, b);
    CHECK(max_abs_diff(reconstruct(ca), x) < 1e-10);
}

TEST_CASE("maybe_refresh follows the lazy schedule") {
    DenseMatrix x0 = sample_gaussian(32, 16, 100);
    BasisPtr b0 = build_basis(x0, ProjectionMode::PRAC, 3, 3, 55);

    DenseMatrix x1 = sample_gaussian(32, 16, 101);
    // Off-schedule step: bit-identical object back.
    BasisPtr b1 = maybe_refresh(b0, x1, 1, 500, 500, 55);
    CHECK(b1.get() == b0.get());

    // On-schedule step refreshes both subspaces.
    BasisPtr b2 = maybe_refresh(b0, x1, 500, 500, 500, 55);
    CHECK(b2->last_svd_step == 500);
    CHECK(b2->last_random_step == 500);
    CHECK(b2->id != b0->id);
    CHECK(max_abs_diff(b2->q1, b0->q1) > 1e-6);  // different activation, different subspace
    check_basis_invariants(b2);

    // Step 0 counts as on-schedule.
    BasisPtr b3 = maybe_refresh(b0, x1, 0, 500, 500, 55);
    CHECK(b3->last_svd_step == 0);
    CHECK(b3.get() != b0.get());
}

TEST_CASE("Q1-only refresh keeps the subspaces orthogonal by resampling Q2") {
    DenseMatrix x0 = sample_gaussian(32, 16, 1);
    BasisPtr b0 = build_basis(x0, ProjectionMode::PRAC, 4, 4, 5);
    DenseMatrix x1 = sample_gaussian(32, 16, 2);
    // T1 divides t, T2 does not: principal refresh forces a random resample.
    BasisPtr b1 = maybe_refresh(b0, x1, 10, 5, 7, 5);
    CHECK(b1->last_svd_step == 10);
    CHECK(b1->last_random_step == 10);
    check_basis_invariants(b1);

    // T2-only refresh keeps Q1 and stays in its complement.
    BasisPtr b2 = maybe_refresh(b0, x1, 14, 5000, 7, 5);
    CHECK(b2->last_svd_step == b0->last_svd_step);
    CHECK(max_abs_diff(b2->q1, b0->q1) == 0.0);
    CHECK(b2->last_random_step == 14);
    check_basis_invariants(b2);
}

TEST_CASE("compress projects onto both subspaces with the scaling applied") {
    const std::size_t n = 12;
    DenseMatrix x(1, n);
    x(0, 0) = 1.0;  // activation equal to the basis direction e1
    BasisPtr b = build_basis(x, ProjectionMode::PRAC, 1, 4, 3);
    CompressedActivation ca = compress(x, b);
    CHECK(ca.x1.rows() == 1);
    CHECK(ca.x1.cols() == 1);
    CHECK(std::fabs(std::fabs(ca.x1(0, 0)) - 1.0) < 1e-12);
    CHECK(max_abs(ca.x2) < 1e-12);  // e1 is orthogonal to span(Q2)

    DenseMatrix y = sample_gaussian(8, 16, 12);
    BasisPtr by = build_basis(y, ProjectionMode::PRAC, 2, 4, 13);
    CompressedActivation cy = compress(y, by);
    CHECK(cy.stored_scalars() == 8 * (2 + 4));
    CHECK(by->basis_scalars() == 16 * (2 + 4));
    // x2 carries k · Y·Q2.
    DenseMatrix yq2 = matmul(y, by->q2);
    scale_in_place(yq2, by->k);
    CHECK(max_abs_diff(cy.x2, yq2) < 1e-12);

    CHECK_THROWS_AS(compress(sample_gaussian(4, 9, 1), by), ParameterError);
}

TEST_CASE("reconstruct PAC equals the principal projection with known bias") {
    DenseMatrix x = sample_gaussian(20, 10, 44);
    BasisPtr b = build_basis(x, ProjectionMode::PAC, 3, 0, 0);
    DenseMatrix xt = reconstruct(compress(x, b));
    DenseMatrix want = matmul(matmul(x, b->q1), b->q1.transposed());
    CHECK(max_abs_diff(xt, want) < 1e-12);

    SvdResult full = thin_svd(x, 10);
    double tail = 0.0;
    for (std::size_t i = 3; i < 10; ++i) tail += full.sigma[i] * full.sigma[i];
    const double err = frobenius_diff(x, xt);
    CHECK(err * err == doctest::Approx(tail).epsilon(1e-9));
}

TEST_CASE("reconstruct of zero is zero and basis mismatch is rejected") {
    DenseMatrix zero(6, 8, 0.0);
    BasisPtr b = build_basis(zero, ProjectionMode::PRAC, 2, 2, 21);
    CompressedActivation ca = compress(zero, b);
    CHECK(max_abs(reconstruct(ca)) == 0.0);

    DenseMatrix x = sample_gaussian(6, 8, 22);
    BasisPtr other = build_basis(x, ProjectionMode::PRAC, 2, 2, 23);
    CHECK_THROWS_AS(reconstruct(ca, other), ConsistencyError);
    CHECK(max_abs(reconstruct(ca, b)) == 0.0);
}

TEST_CASE("RAC basis samples the whole space uniformly") {
    DenseMatrix x = sample_gaussian(6, 10, 77);
    BasisPtr b = build_basis(x, ProjectionMode::RAC, 0, 5, 78);
    CHECK(b->k == doctest::Approx(2.0));
    CHECK(b->q1.cols() == 0);
    check_basis_invariants(b);
    // Full-rank RAC with k = 1 multiplier would not reconstruct; k = n/r2 = 2
    // makes it unbiased instead. Exactness only holds at r2 = n.
    BasisPtr bf = build_basis(x, ProjectionMode::RAC, 0, 10, 79);
    CHECK(bf->k == doctest::Approx(1.0));
    CHECK(max_abs_diff(reconstruct(compress(x, bf)), x) < 1e-10);
}

TEST_CASE("shared cache: one decomposition set per key and step") {
    reset_decomposition_counts();
    SharedSubspaceCache cache;
    ResolvedPolicy policy;
    policy.mode = ProjectionMode::PRAC;
    policy.r1 = policy.r2 = 3;
    policy.t1 = policy.t2 = 500;
    policy.seed = 2718;

    DenseMatrix x = sample_gaussian(24, 16, 5);
    CompressedActivation a = cache.compress_shared("blk0.qkv", x, policy, 0);
    CompressedActivation b = cache.compress_shared("blk0.qkv", x, policy, 0);
    CompressedActivation c = cache.compress_shared("blk0.qkv", x, policy, 0);
    CHECK(a.basis.get() == b.basis.get());
    CHECK(b.basis.get() == c.basis.get());
    CHECK(decomposition_counts().svd == 1);
    CHECK(cache.counters("blk0.qkv").svd == 1);
    CHECK(cache.counters("blk0.qkv").qr == 1);
    CHECK(cache.basis_scalars("blk0.qkv") == 16 * 6);

    // Distinct keys draw independent random subspaces.
    CompressedActivation d = cache.compress_shared("blk0.other", x, policy, 0);
    CHECK(max_abs_diff(d.basis->q2, a.basis->q2) > 1e-6);

    // Same key, same step, different activation: refused.
    DenseMatrix y = sample_gaussian(24, 16, 6);
    CHECK_THROWS_AS(cache.compress_shared("blk0.qkv", y, policy, 0), ConsistencyError);

    // Next step reuses the basis (off schedule) but recompresses.
    CompressedActivation e = cache.compress_shared("blk0.qkv", y, policy, 1);
    CHECK(e.basis.get() == a.basis.get());
    CHECK(cache.counters("blk0.qkv").svd == 1);

    // Hitting the refresh interval costs exactly one more SVD + QR.
    CompressedActivation f = cache.compress_shared("blk0.qkv", y, policy, 500);
    CHECK(f.basis.get() != a.basis.get());
    CHECK(cache.counters("blk0.qkv").svd == 2);
    CHECK(cache.counters("blk0.qkv").qr == 2);

    // Clearing the cache forces a rebuild on the next touch.
    cache.clear();
    (void)cache.compress_shared("blk0.qkv", y, policy, 501);
    CHECK(cache.counters("blk0.qkv").svd == 1);
}

TEST_CASE("unbiasedness smoke: mean reconstruction approaches X") {
    // Small-trial version of the estimator-level checks.
    DenseMatrix x = DenseMatrix::diagonal({10.0, 1.0, 1.0, 1.0});
    SvdResult svd = thin_svd(x, 1);
    const std::size_t trials = 4000;
    DenseMatrix mean(4, 4, 0.0);
    for (std::size_t i = 0; i < trials; ++i) {
        DenseMatrix s = sample_gaussian(4, 1, derive_seed(999, i));
        DenseMatrix q2 = thin_qr(complement_project(svd.v, s));
        DenseMatrix xq2 = matmul(x, q2);
        DenseMatrix xt = matmul(matmul(x, svd.v), svd.v.transposed());
        gemm(xt, xq2, q2, false, true, 3.0, 1.0);  // k = (4-1)/1 = 3
        add_scaled_in_place(mean, 1.0 / static_cast<double>(trials), xt);
    }
    // Loose 0.15 tolerance: stderr of the tail entries is about 0.03.
    CHECK(max_abs_diff(mean, x) < 0.15);
}
