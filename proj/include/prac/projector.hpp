#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <string>

#include "prac/matrix.hpp"

namespace prac {

enum class ProjectionMode { None, PAC, RAC, PRAC };

std::string to_string(ProjectionMode mode);
ProjectionMode projection_mode_from_string(const std::string& s);

/// Principal/random subspace pair with its reconstruction scaling factor.
/// Immutable after construction; share freely across threads.
struct ProjectionBasis {
    DenseMatrix q1;  // n×r1, top right singular vectors of the fitted activation
    DenseMatrix q2;  // n×r2, orthonormal basis sampled in the complement of q1
    double k = 1.0;  // scaling applied to the random component at compression
    std::size_t n = 0;
    std::size_t r1 = 0;
    std::size_t r2 = 0;
    ProjectionMode mode = ProjectionMode::PRAC;
    double scale_multiplier = 1.0;
    long last_svd_step = 0;
    long last_random_step = 0;
    std::uint64_t id = 0;  // unique per basis object; pairs activations to bases

    std::size_t total_rank() const { return r1 + r2; }
    std::size_t basis_scalars() const { return n * (r1 + r2); }
};

using BasisPtr = std::shared_ptr<const ProjectionBasis>;

/// Low-dimensional cache of one activation: x1 = X·Q1 and x2 = k·X·Q2
/// (scaling pre-applied). The original X is not retained.
struct CompressedActivation {
    DenseMatrix x1;  // m×r1
    DenseMatrix x2;  // m×r2
    BasisPtr basis;

    std::size_t stored_scalars() const { return x1.size() + x2.size(); }
};

/// k for the given mode: (n−r1)/r2 for PRAC, n/r2 for RAC, unused (1) for PAC.
double scaling_factor(ProjectionMode mode, std::size_t n, std::size_t r1, std::size_t r2,
                      double scale_multiplier = 1.0);

/// Throws ParameterError unless (r1, r2) is consistent with the mode and fits
/// inside width n. Mode none never validates (it has no basis).
void validate_projection_ranks(ProjectionMode mode, std::size_t n, std::size_t r1,
                               std::size_t r2);

/// Fresh basis from the current activation: Q1 from a thin SVD of x, Q2 from
/// QR of a Gaussian draw projected into the complement of Q1.
BasisPtr build_basis(const DenseMatrix& x, ProjectionMode mode, std::size_t r1, std::size_t r2,
                     std::uint64_t seed, double scale_multiplier = 1.0);

/// Lazy refresh: recompute Q1 when t ≡ 0 (mod t1), resample Q2 when t ≡ 0
/// (mod t2) or whenever Q1 changed, otherwise return `basis` unchanged.
BasisPtr maybe_refresh(const BasisPtr& basis, const DenseMatrix& x, long t, long t1, long t2,
                       std::uint64_t seed);

CompressedActivation compress(const DenseMatrix& x, const BasisPtr& basis);

DenseMatrix reconstruct(const CompressedActivation& ca);
/// Checked variant: throws ConsistencyError when `basis` is not the basis the
/// activation was compressed with.
DenseMatrix reconstruct(const CompressedActivation& ca, const BasisPtr& basis);

/// Rank/refresh configuration resolved against one concrete layer width.
struct ResolvedPolicy {
    ProjectionMode mode = ProjectionMode::PRAC;
    std::size_t r1 = 0;
    std::size_t r2 = 0;
    long t1 = 500;
    long t2 = 500;
    double scale_multiplier = 1.0;
    std::uint64_t seed = 0;
};

struct KeyCounters {
    std::uint64_t svd = 0;
    std::uint64_t qr = 0;
};

/// Per-step cache enforcing subspace sharing: every consumer of one
/// activation identity within a step receives the identical basis and
/// compressed tensors, so layer groups with a common input cost one
/// decomposition set per refresh instead of one per consumer.
class SharedSubspaceCache {
  public:
    CompressedActivation compress_shared(const std::string& key, const DenseMatrix& x,
                                         const ResolvedPolicy& policy, long t);

    KeyCounters counters(const std::string& key) const;
    std::map<std::string, KeyCounters> all_counters() const;
    /// n·(r1+r2) for the key's current basis; 0 when the key is unknown.
    std::size_t basis_scalars(const std::string& key) const;
    void clear();

  private:
    struct Entry {
        BasisPtr basis;
        CompressedActivation ca;
        long step = -1;
        std::uint64_t x_fingerprint = 0;
        KeyCounters counters;
    };

    mutable std::mutex mu_;
    std::map<std::string, Entry> entries_;
};

}  // namespace prac
