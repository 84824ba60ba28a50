#pragma once

#include <map>
#include <string>
#include <vector>

#include "prac/policy.hpp"

namespace prac {

/// Transformer-style architecture dimensions: batch, sequence length, hidden
/// width, MLP intermediate width, heads, block count.
struct ArchSpec {
    std::size_t b = 1;
    std::size_t s = 1;
    std::size_t n = 1;
    std::size_t m = 1;
    std::size_t h = 1;
    std::size_t layers = 1;

    void validate() const;
};

/// One stored-activation accounting row: scalars kept for backward under the
/// baseline and under the compression policy.
struct LedgerRow {
    std::string operation;
    std::size_t baseline_scalars = 0;
    std::size_t compressed_scalars = 0;
    double reduction_fraction = 0.0;  // 1 − compressed/baseline
};

/// Projection-matrix storage per shared activation key: width·(r1+r2),
/// independent of batch and sequence length.
struct BasisRow {
    std::string key;
    std::size_t width = 0;
    std::size_t scalars = 0;
};

struct Ledger {
    std::vector<LedgerRow> rows;        // one block
    std::vector<BasisRow> basis_rows;   // one block
    std::size_t blocks = 1;

    std::size_t baseline_total() const;    // per block
    std::size_t compressed_total() const;  // per block
    std::size_t basis_total() const;       // per block
};

/// Per-operation activation accounting for one attention+MLP block:
/// matmul inputs shrink from b·s·w to b·s·(r1+r2), LayerNorm statistics and
/// flash-attention buffers stay at baseline cost, reshapes and residuals
/// store nothing.
Ledger block_ledger(const ArchSpec& arch, const CompressionPolicy& policy);

std::string ledger_to_csv(const Ledger& ledger);
/// Aligned human-readable table; element_size_bytes adds a bytes column.
std::string ledger_to_text(const Ledger& ledger, std::size_t element_size_bytes = 4);

struct ReconcileReport {
    bool ok = false;
    std::vector<std::string> mismatches;  // first entry names the first bad row
    std::size_t ledger_total = 0;
    std::size_t observed_total = 0;
};

/// Checks an instrumented run's per-row stored-scalar counts against the
/// ledger's compressed column, row by row and in total.
ReconcileReport reconcile(const Ledger& ledger,
                          const std::map<std::string, std::size_t>& observed_rows,
                          std::size_t observed_total);

}  // namespace prac
