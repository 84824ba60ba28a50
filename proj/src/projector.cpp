#include "prac/projector.hpp"

#include <atomic>
#include <cmath>

#include "prac/errors.hpp"
#include "prac/linalg.hpp"
#include "prac/rng.hpp"

namespace prac {

namespace {

std::atomic<std::uint64_t> g_next_basis_id{1};

}  // namespace

void validate_projection_ranks(ProjectionMode mode, std::size_t n, std::size_t r1,
                               std::size_t r2) {
    switch (mode) {
        case ProjectionMode::PAC:
            if (r1 < 1 || r2 != 0) throw ParameterError("PAC requires r1 >= 1 and r2 = 0");
            break;
        case ProjectionMode::RAC:
            if (r1 != 0 || r2 < 1) throw ParameterError("RAC requires r1 = 0 and r2 >= 1");
            break;
        case ProjectionMode::PRAC:
            if (r1 < 1 || r2 < 1) throw ParameterError("PRAC requires r1 >= 1 and r2 >= 1");
            break;
        case ProjectionMode::None:
            throw ParameterError("no projection basis exists for mode none");
    }
    if (r1 + r2 > n)
        throw ParameterError("rank overflow: r1 + r2 = " + std::to_string(r1 + r2) +
                             " exceeds width " + std::to_string(n));
}

namespace {

std::uint64_t fingerprint(const DenseMatrix& x) {
    std::uint64_t h = 0xCBF29CE484222325ULL ^ (x.rows() * 0x9E3779B97F4A7C15ULL) ^ x.cols();
    const auto* bytes = reinterpret_cast<const unsigned char*>(x.data());
    for (std::size_t i = 0; i < x.size() * sizeof(double); ++i) {
        h ^= bytes[i];
        h *= 0x100000001B3ULL;
    }
    return h;
}

}  // namespace

std::string to_string(ProjectionMode mode) {
    switch (mode) {
        case ProjectionMode::None: return "none";
        case ProjectionMode::PAC: return "pac";
        case ProjectionMode::RAC: return "rac";
        case ProjectionMode::PRAC: return "prac";
    }
    return "unknown";
}

ProjectionMode projection_mode_from_string(const std::string& s) {
    if (s == "none") return ProjectionMode::None;
    if (s == "pac") return ProjectionMode::PAC;
    if (s == "rac") return ProjectionMode::RAC;
    if (s == "prac") return ProjectionMode::PRAC;
    throw ParameterError("unknown projection mode: " + s);
}

double scaling_factor(ProjectionMode mode, std::size_t n, std::size_t r1, std::size_t r2,
                      double scale_multiplier) {
    if (scale_multiplier <= 0.0) throw ParameterError("scale_multiplier must be positive");
    switch (mode) {
        case ProjectionMode::PRAC:
            if (r2 == 0) throw ParameterError("PRAC scaling undefined for r2 = 0");
            return scale_multiplier * static_cast<double>(n - r1) / static_cast<double>(r2);
        case ProjectionMode::RAC:
            if (r2 == 0) throw ParameterError("RAC scaling undefined for r2 = 0");
            return scale_multiplier * static_cast<double>(n) / static_cast<double>(r2);
        default:
            return 1.0;  // PAC stores the principal component unscaled
    }
}

namespace {

BasisPtr build_basis_at(const DenseMatrix& x, ProjectionMode mode, std::size_t r1,
                        std::size_t r2, std::uint64_t seed, double scale_multiplier, long t) {
    const std::size_t n = x.cols();
    validate_projection_ranks(mode, n, r1, r2);
    if (r1 > 0 && x.rows() < r1)
        throw ParameterError("build_basis: need at least r1 rows for the principal subspace");
    ensure_finite(x, "build_basis");

    auto basis = std::make_shared<ProjectionBasis>();
    basis->n = n;
    basis->r1 = r1;
    basis->r2 = r2;
    basis->mode = mode;
    basis->scale_multiplier = scale_multiplier;
    basis->k = scaling_factor(mode, n, r1, r2, scale_multiplier);
    basis->last_svd_step = t;
    basis->last_random_step = t;
    basis->id = g_next_basis_id.fetch_add(1, std::memory_order_relaxed);

    if (r1 > 0) {
        basis->q1 = thin_svd(x, r1).v;
    } else {
        basis->q1 = DenseMatrix(n, 0);
    }
    if (r2 > 0) {
        DenseMatrix s = sample_gaussian(n, r2, seed);
        basis->q2 = thin_qr(complement_project(basis->q1, s));
    } else {
        basis->q2 = DenseMatrix(n, 0);
    }
    return basis;
}

}  // namespace

BasisPtr build_basis(const DenseMatrix& x, ProjectionMode mode, std::size_t r1, std::size_t r2,
                     std::uint64_t seed, double scale_multiplier) {
    return build_basis_at(x, mode, r1, r2, seed, scale_multiplier, 0);
}

BasisPtr maybe_refresh(const BasisPtr& basis, const DenseMatrix& x, long t, long t1, long t2,
                       std::uint64_t seed) {
    if (t < 0) throw ParameterError("maybe_refresh: negative step");
    if (t1 < 1 || t2 < 1) throw ParameterError("maybe_refresh: intervals must be >= 1");
    if (!basis) throw ParameterError("maybe_refresh: null basis");
    const std::uint64_t step_seed = derive_seed(seed, static_cast<std::uint64_t>(t));

    const bool refresh_principal = basis->r1 > 0 && (t % t1 == 0);
    const bool refresh_random_due = basis->r2 > 0 && (t % t2 == 0);
    // A fresh Q1 invalidates the old complement, so Q2 is resampled with it.
    const bool refresh_random = refresh_random_due || (refresh_principal && basis->r2 > 0);
    if (!refresh_principal && !refresh_random) return basis;

    if (x.cols() != basis->n) throw ParameterError("maybe_refresh: activation width changed");
    ensure_finite(x, "maybe_refresh");

    auto next = std::make_shared<ProjectionBasis>(*basis);
    next->id = g_next_basis_id.fetch_add(1, std::memory_order_relaxed);
    if (refresh_principal) {
        if (x.rows() < basis->r1)
            throw ParameterError("maybe_refresh: need at least r1 rows for the principal subspace");
        next->q1 = thin_svd(x, basis->r1).v;
        next->last_svd_step = t;
    }
    if (refresh_random) {
        DenseMatrix s = sample_gaussian(basis->n, basis->r2, step_seed);
        next->q2 = thin_qr(complement_project(next->q1, s));
        next->last_random_step = t;
    }
    return next;
}

CompressedActivation compress(const DenseMatrix& x, const BasisPtr& basis) {
    if (!basis) throw ParameterError("compress: null basis");
    if (x.cols() != basis->n)
        throw ParameterError("compress: activation width " + std::to_string(x.cols()) +
                             " does not match basis width " + std::to_string(basis->n));
    CompressedActivation ca;
    ca.basis = basis;
    ca.x1 = matmul(x, basis->q1);
    ca.x2 = matmul(x, basis->q2);
    if (basis->k != 1.0) scale_in_place(ca.x2, basis->k);
    return ca;
}

DenseMatrix reconstruct(const CompressedActivation& ca) {
    if (!ca.basis) throw ConsistencyError("reconstruct: activation has no basis");
    const std::size_t m = ca.x1.cols() > 0 ? ca.x1.rows() : ca.x2.rows();
    DenseMatrix out(m, ca.basis->n, 0.0);
    if (ca.x1.cols() > 0) gemm(out, ca.x1, ca.basis->q1, false, /*trans_b=*/true, 1.0, 1.0);
    if (ca.x2.cols() > 0) gemm(out, ca.x2, ca.basis->q2, false, /*trans_b=*/true, 1.0, 1.0);
    return out;
}

DenseMatrix reconstruct(const CompressedActivation& ca, const BasisPtr& basis) {
    if (!basis || !ca.basis || basis->id != ca.basis->id)
        throw ConsistencyError("reconstruct: activation was compressed with a different basis");
    return reconstruct(ca);
}

CompressedActivation SharedSubspaceCache::compress_shared(const std::string& key,
                                                          const DenseMatrix& x,
                                                          const ResolvedPolicy& policy, long t) {
    if (policy.mode == ProjectionMode::None)
        throw ParameterError("compress_shared: mode none stores raw activations");
    std::lock_guard<std::mutex> lock(mu_);
    Entry& entry = entries_[key];
    const std::uint64_t fp = fingerprint(x);
    if (entry.step == t) {
        if (entry.x_fingerprint != fp)
            throw ConsistencyError("compress_shared: key '" + key +
                                   "' saw two different activations in step " + std::to_string(t));
        return entry.ca;
    }

    const std::uint64_t key_seed = derive_seed(policy.seed, hash_string(key));
    if (!entry.basis) {
        entry.basis = build_basis_at(x, policy.mode, policy.r1, policy.r2,
                                     derive_seed(key_seed, static_cast<std::uint64_t>(t)),
                                     policy.scale_multiplier, t);
        if (policy.r1 > 0) ++entry.counters.svd;
        if (policy.r2 > 0) ++entry.counters.qr;
    } else {
        const BasisPtr prev = entry.basis;
        entry.basis = maybe_refresh(prev, x, t, policy.t1, policy.t2, key_seed);
        if (entry.basis->last_svd_step == t && prev->last_svd_step != t) ++entry.counters.svd;
        if (entry.basis->last_random_step == t && prev->last_random_step != t)
            ++entry.counters.qr;
    }
    entry.ca = compress(x, entry.basis);
    entry.step = t;
    entry.x_fingerprint = fp;
    return entry.ca;
}

KeyCounters SharedSubspaceCache::counters(const std::string& key) const {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = entries_.find(key);
    return it == entries_.end() ? KeyCounters{} : it->second.counters;
}

std::map<std::string, KeyCounters> SharedSubspaceCache::all_counters() const {
    std::lock_guard<std::mutex> lock(mu_);
    std::map<std::string, KeyCounters> out;
    for (const auto& [key, entry] : entries_) out[key] = entry.counters;
    return out;
}

std::size_t SharedSubspaceCache::basis_scalars(const std::string& key) const {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = entries_.find(key);
    return (it == entries_.end() || !it->second.basis) ? 0 : it->second.basis->basis_scalars();
}

void SharedSubspaceCache::clear() {
    std::lock_guard<std::mutex> lock(mu_);
    entries_.clear();
}

}  // namespace prac
