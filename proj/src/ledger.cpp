#include "prac/ledger.hpp"

#include <cmath>
#include <iomanip>
#include <sstream>

#include "prac/errors.hpp"

namespace prac {

void CompressionPolicy::validate() const {
    if (mode != ProjectionMode::None) {
        if (linear_rank_fraction <= 0.0 || linear_rank_fraction > 0.5)
            throw ParameterError("linear_rank_fraction must lie in (0, 0.5]");
        if (nonlinear_rank_fraction <= 0.0 || nonlinear_rank_fraction > 0.5)
            throw ParameterError("nonlinear_rank_fraction must lie in (0, 0.5]");
    }
    if (t1 < 1 || t2 < 1) throw ParameterError("refresh intervals must be >= 1");
    if (scale_multiplier <= 0.0) throw ParameterError("scale_multiplier must be positive");
}

std::pair<std::size_t, std::size_t> CompressionPolicy::ranks(std::size_t width,
                                                             bool linear) const {
    if (mode == ProjectionMode::None) return {0, 0};
    const double f = linear ? linear_rank_fraction : nonlinear_rank_fraction;
    const auto single = static_cast<std::size_t>(std::floor(f * static_cast<double>(width)));
    const auto total = static_cast<std::size_t>(std::floor(2.0 * f * static_cast<double>(width)));
    std::pair<std::size_t, std::size_t> out;
    switch (mode) {
        case ProjectionMode::PRAC: out = {single, single}; break;
        case ProjectionMode::PAC: out = {total, 0}; break;
        case ProjectionMode::RAC: out = {0, total}; break;
        default: out = {0, 0}; break;
    }
    if (out.first + out.second == 0)
        throw ParameterError("rank fraction rounds to zero for width " + std::to_string(width));
    return out;
}

ResolvedPolicy CompressionPolicy::resolve(std::size_t width, bool linear) const {
    validate();
    ResolvedPolicy r;
    r.mode = mode;
    if (mode != ProjectionMode::None) {
        auto [r1, r2] = ranks(width, linear);
        r.r1 = r1;
        r.r2 = r2;
        validate_projection_ranks(mode, width, r1, r2);
    }
    r.t1 = t1;
    r.t2 = t2;
    r.scale_multiplier = scale_multiplier;
    r.seed = seed;
    return r;
}

void ArchSpec::validate() const {
    if (b < 1 || s < 1 || n < 1 || m < 1 || h < 1 || layers < 1)
        throw ParameterError("ArchSpec fields must be positive");
    if (n % h != 0) throw ParameterError("ArchSpec: heads must divide the hidden width");
}

std::size_t Ledger::baseline_total() const {
    std::size_t t = 0;
    for (const auto& r : rows) t += r.baseline_scalars;
    return t;
}

std::size_t Ledger::compressed_total() const {
    std::size_t t = 0;
    for (const auto& r : rows) t += r.compressed_scalars;
    return t;
}

std::size_t Ledger::basis_total() const {
    std::size_t t = 0;
    for (const auto& r : basis_rows) t += r.scalars;
    return t;
}

namespace {

LedgerRow make_row(std::string name, std::size_t baseline, std::size_t compressed) {
    LedgerRow row;
    row.operation = std::move(name);
    row.baseline_scalars = baseline;
    row.compressed_scalars = compressed;
    row.reduction_fraction =
        baseline == 0 ? 0.0
                      : 1.0 - static_cast<double>(compressed) / static_cast<double>(baseline);
    return row;
}

}  // namespace

Ledger block_ledger(const ArchSpec& arch, const CompressionPolicy& policy) {
    arch.validate();
    policy.validate();
    const std::size_t tokens = arch.b * arch.s;
    const bool off = policy.mode == ProjectionMode::None;

    const auto compressed_width = [&](std::size_t width, bool linear) {
        if (off) return width;
        auto [r1, r2] = policy.ranks(width, linear);
        return r1 + r2;
    };
    const auto basis_scalars = [&](std::size_t width, bool linear) -> std::size_t {
        if (off) return 0;
        auto [r1, r2] = policy.ranks(width, linear);
        return width * (r1 + r2);
    };

    Ledger ledger;
    ledger.blocks = arch.layers;
    auto& rows = ledger.rows;
    const std::size_t n = arch.n, m = arch.m, h = arch.h;

    rows.push_back(make_row("layernorm_1.input", tokens * n,
                            tokens * compressed_width(n, /*linear=*/false)));
    rows.push_back(make_row("layernorm_1.stats", 2 * tokens, 2 * tokens));
    rows.push_back(make_row("attn.qkv.input", tokens * n, tokens * compressed_width(n, true)));
    rows.push_back(make_row("attn.reshape", 0, 0));
    rows.push_back(make_row("attn.flash_attention.qkv", 3 * arch.b * h * arch.s * (n / h),
                            3 * arch.b * h * arch.s * (n / h)));
    rows.push_back(make_row("attn.flash_attention.buffers", 2 * tokens * h, 2 * tokens * h));
    rows.push_back(make_row("attn.reshape_out", 0, 0));
    rows.push_back(make_row("attn.out_proj.input", tokens * n, tokens * compressed_width(n, true)));
    rows.push_back(make_row("residual_1", 0, 0));
    rows.push_back(make_row("layernorm_2.input", tokens * n, tokens * compressed_width(n, false)));
    rows.push_back(make_row("layernorm_2.stats", 2 * tokens, 2 * tokens));
    rows.push_back(make_row("mlp.up_proj.input", tokens * n, tokens * compressed_width(n, true)));
    rows.push_back(make_row("mlp.gelu.input", tokens * m, tokens * compressed_width(m, false)));
    rows.push_back(make_row("mlp.down_proj.input", tokens * m, tokens * compressed_width(m, true)));
    rows.push_back(make_row("residual_2", 0, 0));

    if (!off) {
        auto& basis = ledger.basis_rows;
        basis.push_back({"layernorm_1.input", n, basis_scalars(n, false)});
        basis.push_back({"attn.qkv.input", n, basis_scalars(n, true)});
        basis.push_back({"attn.out_proj.input", n, basis_scalars(n, true)});
        basis.push_back({"layernorm_2.input", n, basis_scalars(n, false)});
        basis.push_back({"mlp.up_proj.input", n, basis_scalars(n, true)});
        basis.push_back({"mlp.gelu.input", m, basis_scalars(m, false)});
        basis.push_back({"mlp.down_proj.input", m, basis_scalars(m, true)});
    }
    return ledger;
}

std::string ledger_to_csv(const Ledger& ledger) {
    std::ostringstream out;
    out << "operation,baseline_scalars,compressed_scalars,reduction_fraction\n";
    for (const auto& r : ledger.rows) {
        out << r.operation << ',' << r.baseline_scalars << ',' << r.compressed_scalars << ','
            << r.reduction_fraction << '\n';
    }
    out << "total," << ledger.baseline_total() << ',' << ledger.compressed_total() << ','
        << (ledger.baseline_total() == 0
                ? 0.0
                : 1.0 - static_cast<double>(ledger.compressed_total()) /
                            static_cast<double>(ledger.baseline_total()))
        << '\n';
    for (const auto& b : ledger.basis_rows)
        out << "basis:" << b.key << ",0," << b.scalars << ",0\n";
    return out.str();
}

std::string ledger_to_text(const Ledger& ledger, std::size_t element_size_bytes) {
    std::ostringstream out;
    out << std::left << std::setw(34) << "operation" << std::right << std::setw(14) << "baseline"
        << std::setw(14) << "compressed" << std::setw(12) << "saved" << std::setw(16)
        << "compressed_B\n";
    for (const auto& r : ledger.rows) {
        out << std::left << std::setw(34) << r.operation << std::right << std::setw(14)
            << r.baseline_scalars << std::setw(14) << r.compressed_scalars << std::setw(11)
            << std::fixed << std::setprecision(1) << (100.0 * r.reduction_fraction) << '%'
            << std::setw(15) << r.compressed_scalars * element_size_bytes << '\n';
    }
    out << std::left << std::setw(34) << "total (per block)" << std::right << std::setw(14)
        << ledger.baseline_total() << std::setw(14) << ledger.compressed_total() << std::setw(11)
        << std::fixed << std::setprecision(1)
        << (ledger.baseline_total() == 0
                ? 0.0
                : 100.0 * (1.0 - static_cast<double>(ledger.compressed_total()) /
                                     static_cast<double>(ledger.baseline_total())))
        << '%' << std::setw(15) << ledger.compressed_total() * element_size_bytes << '\n';
    if (!ledger.basis_rows.empty()) {
        out << "shared projection bases (batch-independent):\n";
        for (const auto& b : ledger.basis_rows)
            out << "  " << std::left << std::setw(32) << b.key << std::right << std::setw(14)
                << b.scalars << '\n';
        out << "  " << std::left << std::setw(32) << "basis total" << std::right << std::setw(14)
            << ledger.basis_total() << '\n';
    }
    out << "blocks: " << ledger.blocks << ", whole-model activations: baseline "
        << ledger.baseline_total() * ledger.blocks << ", compressed "
        << ledger.compressed_total() * ledger.blocks << '\n';
    return out.str();
}

ReconcileReport reconcile(const Ledger& ledger,
                          const std::map<std::string, std::size_t>& observed_rows,
                          std::size_t observed_total) {
    ReconcileReport report;
    report.ledger_total = ledger.compressed_total();
    report.observed_total = observed_total;
    for (const auto& row : ledger.rows) {
        auto it = observed_rows.find(row.operation);
        const std::size_t observed = it == observed_rows.end() ? 0 : it->second;
        if (observed != row.compressed_scalars) {
            report.mismatches.push_back(
                "row '" + row.operation + "': ledger " + std::to_string(row.compressed_scalars) +
                " vs observed " + std::to_string(observed));
        }
    }
    for (const auto& [name, scalars] : observed_rows) {
        bool known = false;
        for (const auto& row : ledger.rows)
            if (row.operation == name) known = true;
        if (!known)
            report.mismatches.push_back("row '" + name + "': observed " +
                                        std::to_string(scalars) + " has no ledger row");
    }
    if (report.ledger_total != report.observed_total)
        report.mismatches.push_back("total: ledger " + std::to_string(report.ledger_total) +
                                    " vs observed " + std::to_string(report.observed_total));
    report.ok = report.mismatches.empty();
    return report;
}

}  // namespace prac
