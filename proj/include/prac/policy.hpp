#pragma once

#include <cstdint>
#include <utility>

#include "prac/projector.hpp"

namespace prac {

/// Layer-class compression configuration. Linear layers (matmul inputs) get
/// the higher rank fraction, element-wise/normalization layers the lower one.
/// PRAC splits the budget evenly (r1 = r2 = ⌊f·width⌋); PAC and RAC spend the
/// same total rank on a single subspace so ablations compare like for like.
struct CompressionPolicy {
    ProjectionMode mode = ProjectionMode::None;
    double linear_rank_fraction = 0.3;
    double nonlinear_rank_fraction = 0.2;
    long t1 = 500;
    long t2 = 500;
    double scale_multiplier = 1.0;
    std::uint64_t seed = 0;

    void validate() const;

    /// (r1, r2) for a layer of the given width.
    std::pair<std::size_t, std::size_t> ranks(std::size_t width, bool linear) const;

    ResolvedPolicy resolve(std::size_t width, bool linear) const;
};

}  // namespace prac
