#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "prac/ledger.hpp"
#include "prac/matrix.hpp"
#include "prac/policy.hpp"
#include "prac/projector.hpp"

namespace prac {

// ---------------------------------------------------------------------------
// Optimizers
// ---------------------------------------------------------------------------

void sgd_step(std::vector<double>& params, const std::vector<double>& grads, double lr);

struct AdamState {
    std::vector<double> m;
    std::vector<double> v;
    long t = 0;
};

void adam_step(std::vector<double>& params, const std::vector<double>& grads, AdamState& state,
               double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

// ---------------------------------------------------------------------------
// Layers
// ---------------------------------------------------------------------------

/// What a layer keeps for backward: the raw activation (mode none) or its
/// compressed form, plus the scalar count it contributes to the step ledger.
struct StoredActivation {
    DenseMatrix raw;
    std::optional<CompressedActivation> compressed;
    long step = -1;
    std::size_t scalars = 0;

    DenseMatrix reconstructed() const;
};

/// Per-step plumbing shared by all layers during forward_store.
struct StepContext {
    SharedSubspaceCache& cache;
    const CompressionPolicy& policy;
    long step = 0;
    std::map<std::string, std::size_t>* row_scalars = nullptr;  // key → stored scalars
};

class LinearLayer {
  public:
    /// activation_key names the stored input; layers sharing a key share one
    /// basis and one compressed activation per step.
    LinearLayer(std::string activation_key, std::size_t in_width, std::size_t out_width,
                std::uint64_t init_seed);

    DenseMatrix forward(const DenseMatrix& x) const;
    DenseMatrix forward_store(const DenseMatrix& x, StepContext& ctx);
    /// Returns ∇X = ∇Y·Wᵀ (exact regardless of compression) and accumulates
    /// ∇W = X̃ᵀ·∇Y from the stored activation.
    DenseMatrix backward(const DenseMatrix& dy);

    DenseMatrix w;       // in×out
    DenseMatrix grad_w;  // in×out
    const std::string& activation_key() const { return key_; }

  private:
    std::string key_;
    StoredActivation stored_;
};

class GeluLayer {
  public:
    GeluLayer(std::string activation_key, std::size_t width);

    DenseMatrix forward(const DenseMatrix& x) const;
    DenseMatrix forward_store(const DenseMatrix& x, StepContext& ctx);
    DenseMatrix backward(const DenseMatrix& dy);

  private:
    std::string key_;
    std::size_t width_;
    StoredActivation stored_;
};

/// Exact tanh-form GeLU used throughout the engine.
double gelu(double x);
double gelu_derivative(double x);

class LayerNormLayer {
  public:
    LayerNormLayer(std::string activation_key, std::size_t width);

    DenseMatrix forward(const DenseMatrix& x) const;
    DenseMatrix forward_store(const DenseMatrix& x, StepContext& ctx);
    DenseMatrix backward(const DenseMatrix& dy);

    DenseMatrix gain;       // 1×n
    DenseMatrix bias;       // 1×n
    DenseMatrix grad_gain;  // 1×n
    DenseMatrix grad_bias;  // 1×n

  private:
    std::string key_;
    std::size_t width_;
    StoredActivation stored_;
    std::vector<double> mean_;      // per-row, never compressed
    std::vector<double> variance_;  // per-row, never compressed
};

// ---------------------------------------------------------------------------
// Model
// ---------------------------------------------------------------------------

struct ModelConfig {
    std::size_t input_width = 16;
    std::size_t hidden_width = 32;
    std::size_t output_width = 8;
    bool layer_norm = false;
    bool mlp_residual = false;  // requires output_width == input_width
    bool qkv_block = false;     // shared-input projection trio ahead of the MLP
    std::size_t qkv_branch_width = 0;
    std::string loss = "mse";  // "mse" | "softmax_ce"

    void validate() const;
};

/// Linear→GeLU→Linear stack with optional pre-LayerNorm, optional residual,
/// and an optional shared-input q/k/v-style block in front.
class Model {
  public:
    Model(const ModelConfig& config, std::uint64_t init_seed);

    DenseMatrix forward(const DenseMatrix& x) const;
    DenseMatrix forward_store(const DenseMatrix& x, StepContext& ctx);
    DenseMatrix backward(const DenseMatrix& dy);

    void collect(std::vector<DenseMatrix*>& params, std::vector<DenseMatrix*>& grads);
    void zero_grads();

    const ModelConfig& config() const { return config_; }

    // Exposed for gradient tests.
    std::optional<LayerNormLayer> ln;
    std::unique_ptr<LinearLayer> fc1;
    std::unique_ptr<GeluLayer> act;
    std::unique_ptr<LinearLayer> fc2;
    std::unique_ptr<LinearLayer> wq, wk, wv, wo;

  private:
    ModelConfig config_;
};

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

/// Synthetic input distribution: a few strong directions plus a slowly
/// decaying tail, the spectral shape the projection families are built for.
struct TaskConfig {
    std::size_t batch = 64;
    std::size_t head_count = 4;
    double head_scale = 8.0;
    double tail_scale = 0.7;
};

struct TrainConfig {
    ModelConfig model;
    TaskConfig task;
    CompressionPolicy policy;
    std::size_t steps = 500;
    double lr = 0.05;
    std::string optimizer = "sgd";  // "sgd" | "adam"
    std::uint64_t seed = 0;
};

struct StepRecord {
    long step = 0;
    double loss = 0.0;
    double grad_norm = 0.0;
    std::size_t act_scalars = 0;
    double wall_ms = 0.0;
};

struct RunMetrics {
    std::vector<StepRecord> steps;
    double final_loss = 0.0;
    std::size_t peak_activation_scalars = 0;
    bool diverged = false;
    long diverged_at = -1;
    std::map<std::string, std::size_t> per_layer_scalars;  // per-step, from the last step
    std::map<std::string, KeyCounters> decomposition_counts;
    std::size_t basis_scalars_total = 0;
};

RunMetrics train(const TrainConfig& config);

/// Stored-activation prediction for the engine's layer stack, row-compatible
/// with RunMetrics::per_layer_scalars.
Ledger model_ledger(const ModelConfig& model, std::size_t batch,
                    const CompressionPolicy& policy);

std::string metrics_to_csv(const RunMetrics& metrics);

// ---------------------------------------------------------------------------
// Optimization demos
// ---------------------------------------------------------------------------

enum class CounterexampleVariant { Biased, Unbiased, MaxSelection };

struct CounterexamplePoint {
    long t = 0;
    double w1 = 0.0;
    double w2 = 0.0;
    double grad_norm = 0.0;
};

struct CounterexampleResult {
    std::vector<CounterexamplePoint> trajectory;  // includes t = 0 start
    bool w2_constant_one = false;                 // w2 stayed exactly 1.0
    double min_grad_norm = 0.0;
    long first_step_below_0p1 = -1;
};

/// Two-coordinate quadratic under three update rules: the biased single
/// coordinate estimator, its unbiased companion, and greedy largest-|gradient|
/// coordinate selection. lr_schedule(t) must satisfy the Robbins–Monro
/// conditions; the default is 0.1/(t+1).
CounterexampleResult counterexample_run(std::size_t steps,
                                        const std::function<double(long)>& lr_schedule,
                                        std::uint64_t seed, CounterexampleVariant variant);

struct BoundedVarianceResult {
    double min_grad_norm_sq = 0.0;
    double bound = 0.0;
    double step_size = 0.0;
    std::vector<double> grad_norm_sq;  // per iterate
};

/// Constant-step SGD on an L-smooth quadratic with injected zero-mean noise
/// of total variance σ²; reports min over iterates of ‖∇f‖² against
/// 2LΔ/T + 2·√(2LΔ/T)·σ.
BoundedVarianceResult bounded_variance_demo(double smoothness, double initial_gap, double sigma,
                                            std::size_t steps, std::uint64_t seed);

}  // namespace prac
