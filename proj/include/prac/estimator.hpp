#pragma once

#include <cstdint>
#include <vector>

#include "prac/matrix.hpp"
#include "prac/projector.hpp"

namespace prac {

/// Singular spectrum summary of an activation: head count s, tail energy q
/// (the tight value Σ_{i>s} σᵢ²), and the normalized cumulative energy curve.
struct DegenerateProfile {
    std::vector<double> sigma;              // full spectrum, non-increasing
    std::size_t s = 0;                      // head count
    double q = 0.0;                         // tail energy beyond index s
    std::vector<double> cumulative_energy;  // prefix sums of σᵢ², / total energy
};

DegenerateProfile spectral_profile(const DenseMatrix& x, std::size_t s);

/// Monte Carlo moments of a reconstruction or gradient estimator against its
/// exact target. `max_entry_z` is the worst per-entry deviation of the MC
/// mean measured in per-entry standard errors (clamped to 1e30 when the
/// estimator is deterministic and biased, as for PAC).
struct MomentReport {
    std::size_t trials = 0;
    double bias_fro = 0.0;
    double mse = 0.0;
    double mse_std_error = 0.0;
    double theory_mse = 0.0;
    std::uint64_t seed = 0;
    ProjectionMode mode = ProjectionMode::PRAC;
    std::size_t r1 = 0;
    std::size_t r2 = 0;
    double max_entry_z = 0.0;
};

/// Exact second-moment identity for the reconstruction error:
/// (k−1)·‖X−X·Q1·Q1ᵀ‖_F² for PRAC, (n/r2−1)·‖X‖_F² for RAC, and the
/// deterministic tail energy for PAC.
double theoretical_variance(ProjectionMode mode, std::size_t n, std::size_t r1, std::size_t r2,
                            const DenseMatrix& x);
double theoretical_variance(ProjectionMode mode, std::size_t n, std::size_t r1, std::size_t r2,
                            const DegenerateProfile& profile);

/// ((n−s)/(r−s) − 1)·q, the worst-case variance floor no unbiased linear
/// projection can beat under the (s, q) tail condition. Requires s < r < n.
double minimax_lower_bound(std::size_t n, std::size_t s, std::size_t r, double q);

/// Holds Q1 fixed from one SVD of x and redraws Q2 each trial.
MomentReport mc_reconstruction_moments(const DenseMatrix& x, ProjectionMode mode, std::size_t r1,
                                       std::size_t r2, std::size_t trials, std::uint64_t seed);

/// Entrywise mean and standard error matrices from an MC run.
struct MatrixMoments {
    DenseMatrix mean;
    DenseMatrix std_error;
    std::size_t trials = 0;
};

/// MC average of Q2·Q2ᵀ over fresh draws in the complement of q1.
DenseMatrix mc_projector_second_moment(const DenseMatrix& q1, std::size_t r2, std::size_t trials,
                                       std::uint64_t seed);
MatrixMoments mc_projector_second_moment_stats(const DenseMatrix& q1, std::size_t r2,
                                               std::size_t trials, std::uint64_t seed);

/// Per trial forms G̃ = X̃ᵀ·gy and reports moments against Xᵀ·gy; theory_mse
/// carries the bound σ²·‖gy‖₂² with σ² the reconstruction variance identity.
MomentReport gradient_estimator_moments(const DenseMatrix& x, const DenseMatrix& gy,
                                        ProjectionMode mode, std::size_t r1, std::size_t r2,
                                        std::size_t trials, std::uint64_t seed);

}  // namespace prac
