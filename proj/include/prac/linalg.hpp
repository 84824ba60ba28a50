#pragma once

#include <cstdint>
#include <vector>

#include "prac/matrix.hpp"

namespace prac {

/// Top-r SVD triplet. Columns of u and v are orthonormal; sigma is
/// non-increasing. Sign convention: in each column of v the entry of largest
/// magnitude is non-negative (ties broken by lowest index), with u flipped in
/// tandem so u·diag(sigma)·vᵀ is unchanged.
struct SvdResult {
    DenseMatrix u;              // m×r
    std::vector<double> sigma;  // r, non-increasing, >= 0
    DenseMatrix v;              // n×r
};

/// Deterministic thin SVD of x, truncated to the leading `rank` triplets.
/// One-sided Jacobi for small column counts, Golub–Kahan bidiagonalization
/// above that; no randomized sketching anywhere.
SvdResult thin_svd(const DenseMatrix& x, std::size_t rank);

/// Householder QR of a (m×k, m >= k), returning the orthonormal factor with
/// the R-diagonal-positive convention. Throws DegenerateInputError when any
/// |R_jj| < 1e-12·‖A‖_F.
DenseMatrix thin_qr(const DenseMatrix& a);

/// Scratch buffers for thin_qr_into; reuse across calls in hot loops.
struct QrScratch {
    DenseMatrix work;
    std::vector<double> beta;
    std::vector<double> diag;
};

void thin_qr_into(const DenseMatrix& a, DenseMatrix& q, QrScratch& scratch);

/// Sₒ = (I − Q1·Q1ᵀ)·S. Q1 must have orthonormal columns (checked to 1e-8).
/// An empty Q1 (zero columns) acts as the identity.
DenseMatrix complement_project(const DenseMatrix& q1, const DenseMatrix& s);

/// Unchecked in-place variant for hot loops (preconditions validated by the
/// caller once per batch). `tmp` is resized as needed.
void complement_project_into(const DenseMatrix& q1, DenseMatrix& s, DenseMatrix& tmp);

/// Largest singular value by power iteration on AᵀA.
double spectral_norm(const DenseMatrix& a, double rel_tol = 1e-8,
                     std::size_t max_iter = 1000);

/// Process-wide decomposition call counters (SVD / QR). Monotone; reset
/// explicitly in tests that assert call economy.
struct DecompositionCounts {
    std::uint64_t svd = 0;
    std::uint64_t qr = 0;
};

DecompositionCounts decomposition_counts();
void reset_decomposition_counts();

}  // namespace prac
