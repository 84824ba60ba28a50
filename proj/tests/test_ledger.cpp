#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "prac/errors.hpp"
#include "prac/ledger.hpp"

using namespace prac;

namespace {

const LedgerRow& row_named(const Ledger& ledger, const std::string& name) {
    for (const auto& r : ledger.rows)
        if (r.operation == name) return r;
    throw std::runtime_error("missing row " + name);
}

CompressionPolicy prac_policy(double linear_f, double nonlinear_f) {
    CompressionPolicy p;
    p.mode = ProjectionMode::PRAC;
    p.linear_rank_fraction = linear_f;
    p.nonlinear_rank_fraction = nonlinear_f;
    return p;
}

}  // namespace

TEST_CASE("policy rank resolution per mode") {
    CompressionPolicy p = prac_policy(0.3, 0.2);
    CHECK(p.ranks(40, true) == std::pair<std::size_t, std::size_t>{12, 12});
    CHECK(p.ranks(40, false) == std::pair<std::size_t, std::size_t>{8, 8});
    CHECK(p.ranks(768, true) == std::pair<std::size_t, std::size_t>{230, 230});

    p.mode = ProjectionMode::PAC;
    CHECK(p.ranks(40, true) == std::pair<std::size_t, std::size_t>{24, 0});
    p.mode = ProjectionMode::RAC;
    CHECK(p.ranks(40, true) == std::pair<std::size_t, std::size_t>{0, 24});
    p.mode = ProjectionMode::None;
    CHECK(p.ranks(40, true) == std::pair<std::size_t, std::size_t>{0, 0});

    p.mode = ProjectionMode::PRAC;
    CHECK_THROWS_AS(p.ranks(2, true), ParameterError);  // fraction rounds to zero
    p.linear_rank_fraction = 0.6;
    CHECK_THROWS_AS(p.validate(), ParameterError);
}

TEST_CASE("gelu + down-projection pair matches the footprint table") {
    // b=2, s=4, m=8 with ranks 2+2 on the MLP width: 128 scalars become 64.
    ArchSpec arch{2, 4, 8, 8, 2, 1};
    CompressionPolicy p = prac_policy(0.25, 0.25);
    Ledger ledger = block_ledger(arch, p);
    const auto& gelu = row_named(ledger, "mlp.gelu.input");
    const auto& down = row_named(ledger, "mlp.down_proj.input");
    CHECK(gelu.baseline_scalars == 64);
    CHECK(down.baseline_scalars == 64);
    CHECK(gelu.baseline_scalars + down.baseline_scalars == 128);
    CHECK(gelu.compressed_scalars == 32);
    CHECK(down.compressed_scalars == 32);
    CHECK(gelu.compressed_scalars + down.compressed_scalars == 64);
}

TEST_CASE("every block row follows its closed form") {
    ArchSpec arch{4, 16, 40, 80, 4, 6};
    CompressionPolicy p = prac_policy(0.3, 0.2);
    Ledger ledger = block_ledger(arch, p);
    const std::size_t tokens = arch.b * arch.s;

    // Width-n rows: linear fraction 0.3 → ranks 12+12; nonlinear 0.2 → 8+8.
    CHECK(row_named(ledger, "attn.qkv.input").baseline_scalars == tokens * 40);
    CHECK(row_named(ledger, "attn.qkv.input").compressed_scalars == tokens * 24);
    CHECK(row_named(ledger, "attn.out_proj.input").compressed_scalars == tokens * 24);
    CHECK(row_named(ledger, "mlp.up_proj.input").compressed_scalars == tokens * 24);
    CHECK(row_named(ledger, "layernorm_1.input").compressed_scalars == tokens * 16);
    CHECK(row_named(ledger, "layernorm_1.stats").compressed_scalars == 2 * tokens);
    CHECK(row_named(ledger, "layernorm_1.stats").baseline_scalars == 2 * tokens);

    // MLP width rows: gelu nonlinear (16+16 of 80), down-proj linear (24+24).
    CHECK(row_named(ledger, "mlp.gelu.input").baseline_scalars == tokens * 80);
    CHECK(row_named(ledger, "mlp.gelu.input").compressed_scalars == tokens * 32);
    CHECK(row_named(ledger, "mlp.down_proj.input").compressed_scalars == tokens * 48);

    // Attention internals ride at baseline cost in both columns.
    const auto& fa = row_named(ledger, "attn.flash_attention.qkv");
    CHECK(fa.baseline_scalars == 3 * arch.b * arch.h * arch.s * (arch.n / arch.h));
    CHECK(fa.baseline_scalars == fa.compressed_scalars);
    const auto& buf = row_named(ledger, "attn.flash_attention.buffers");
    CHECK(buf.baseline_scalars == 2 * tokens * arch.h);
    CHECK(buf.compressed_scalars == buf.baseline_scalars);

    // Reshapes and residuals store nothing.
    CHECK(row_named(ledger, "attn.reshape").baseline_scalars == 0);
    CHECK(row_named(ledger, "residual_1").baseline_scalars == 0);
    CHECK(row_named(ledger, "residual_2").compressed_scalars == 0);

    CHECK(ledger.compressed_total() <= ledger.baseline_total());
    CHECK(ledger.blocks == 6);
}

TEST_CASE("uniform 0.3 fractions cut every compressible row by exactly 40%") {
    ArchSpec arch{2, 8, 40, 80, 4, 1};
    CompressionPolicy p = prac_policy(0.3, 0.3);
    Ledger ledger = block_ledger(arch, p);
    for (const auto& row : ledger.rows) {
        const bool compressible = row.compressed_scalars != row.baseline_scalars;
        if (compressible) CHECK(row.reduction_fraction == doctest::Approx(0.4).epsilon(1e-12));
    }
    // And at least the six compressible rows exist.
    std::size_t compressible = 0;
    for (const auto& row : ledger.rows)
        if (row.baseline_scalars != row.compressed_scalars) ++compressible;
    CHECK(compressible == 7);
}

TEST_CASE("mode none keeps the baseline column") {
    ArchSpec arch{2, 4, 16, 32, 4, 1};
    CompressionPolicy p;  // mode None
    Ledger ledger = block_ledger(arch, p);
    for (const auto& row : ledger.rows) CHECK(row.baseline_scalars == row.compressed_scalars);
    CHECK(ledger.basis_rows.empty());
}

TEST_CASE("ledger totals are linear in batch and sequence length") {
    CompressionPolicy p = prac_policy(0.3, 0.2);
    ArchSpec arch{2, 8, 40, 80, 4, 1};
    Ledger base = block_ledger(arch, p);
    ArchSpec doubled_b = arch;
    doubled_b.b *= 2;
    Ledger twice = block_ledger(doubled_b, p);
    REQUIRE(base.rows.size() == twice.rows.size());
    for (std::size_t i = 0; i < base.rows.size(); ++i) {
        CHECK(twice.rows[i].baseline_scalars == 2 * base.rows[i].baseline_scalars);
        CHECK(twice.rows[i].compressed_scalars == 2 * base.rows[i].compressed_scalars);
    }
    // Basis storage is independent of b and s.
    ArchSpec doubled_s = arch;
    doubled_s.s *= 4;
    Ledger stretched = block_ledger(doubled_s, p);
    CHECK(stretched.basis_total() == base.basis_total());
    for (std::size_t i = 0; i < base.basis_rows.size(); ++i)
        CHECK(stretched.basis_rows[i].scalars == base.basis_rows[i].scalars);
}

TEST_CASE("reconcile matches exact observations and flags mismatches") {
    ArchSpec arch{2, 4, 16, 32, 4, 1};
    CompressionPolicy p = prac_policy(0.25, 0.25);
    Ledger ledger = block_ledger(arch, p);

    std::map<std::string, std::size_t> observed;
    for (const auto& row : ledger.rows) observed[row.operation] = row.compressed_scalars;
    ReconcileReport ok = reconcile(ledger, observed, ledger.compressed_total());
    CHECK(ok.ok);
    CHECK(ok.mismatches.empty());

    observed["mlp.gelu.input"] += 1;
    ReconcileReport bad = reconcile(ledger, observed, ledger.compressed_total() + 1);
    CHECK_FALSE(bad.ok);
    REQUIRE_FALSE(bad.mismatches.empty());
    CHECK(bad.mismatches.front().find("mlp.gelu.input") != std::string::npos);
}

TEST_CASE("csv and text renderings carry the totals") {
    ArchSpec arch{2, 4, 20, 40, 4, 2};
    Ledger ledger = block_ledger(arch, prac_policy(0.3, 0.2));
    const std::string csv = ledger_to_csv(ledger);
    CHECK(csv.find("operation,baseline_scalars") != std::string::npos);
    CHECK(csv.find("total,") != std::string::npos);
    CHECK(csv.find("basis:attn.qkv.input") != std::string::npos);
    const std::string text = ledger_to_text(ledger);
    CHECK(text.find("total (per block)") != std::string::npos);
    CHECK(text.find("blocks: 2") != std::string::npos);
}
