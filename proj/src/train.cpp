#include "prac/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>

#include "prac/errors.hpp"
#include "prac/linalg.hpp"
#include "prac/rng.hpp"

namespace prac {

// ---------------------------------------------------------------------------
// Optimizers
// ---------------------------------------------------------------------------

namespace {

void sgd_core(double* w, const double* g, std::size_t n, double lr) {
    for (std::size_t i = 0; i < n; ++i) w[i] -= lr * g[i];
}

void adam_core(double* w, const double* g, std::size_t n, AdamState& state, double lr,
               double beta1, double beta2, double eps) {
    if (state.m.size() != n) {
        state.m.assign(n, 0.0);
        state.v.assign(n, 0.0);
        state.t = 0;
    }
    state.t += 1;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.t));
    for (std::size_t i = 0; i < n; ++i) {
        state.m[i] = beta1 * state.m[i] + (1.0 - beta1) * g[i];
        state.v[i] = beta2 * state.v[i] + (1.0 - beta2) * g[i] * g[i];
        const double mhat = state.m[i] / bc1;
        const double vhat = state.v[i] / bc2;
        w[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
}

void ensure_grads_finite(const std::vector<double>& grads) {
    for (double g : grads)
        if (!std::isfinite(g)) throw TrainingFault("non-finite gradient in optimizer step");
}

}  // namespace

void sgd_step(std::vector<double>& params, const std::vector<double>& grads, double lr) {
    if (params.size() != grads.size()) throw ParameterError("sgd_step: size mismatch");
    ensure_grads_finite(grads);
    sgd_core(params.data(), grads.data(), params.size(), lr);
}

void adam_step(std::vector<double>& params, const std::vector<double>& grads, AdamState& state,
               double lr, double beta1, double beta2, double eps) {
    if (params.size() != grads.size()) throw ParameterError("adam_step: size mismatch");
    ensure_grads_finite(grads);
    adam_core(params.data(), grads.data(), params.size(), state, lr, beta1, beta2, eps);
}

// ---------------------------------------------------------------------------
// Stored activations
// ---------------------------------------------------------------------------

DenseMatrix StoredActivation::reconstructed() const {
    return compressed ? reconstruct(*compressed) : raw;
}

namespace {

StoredActivation store_activation(const std::string& key, const DenseMatrix& x, StepContext& ctx,
                                  bool linear_class) {
    StoredActivation stored;
    stored.step = ctx.step;
    if (ctx.policy.mode == ProjectionMode::None) {
        stored.raw = x;
        stored.scalars = x.size();
    } else {
        const ResolvedPolicy resolved = ctx.policy.resolve(x.cols(), linear_class);
        stored.compressed = ctx.cache.compress_shared(key, x, resolved, ctx.step);
        stored.scalars = stored.compressed->stored_scalars();
    }
    if (ctx.row_scalars) (*ctx.row_scalars)[key] = stored.scalars;
    return stored;
}

void ensure_training_finite(const DenseMatrix& y, const std::string& where) {
    if (!y.is_finite()) throw TrainingFault(where + ": non-finite activations");
}

DenseMatrix concat_cols(const DenseMatrix& a, const DenseMatrix& b, const DenseMatrix& c) {
    DenseMatrix out(a.rows(), a.cols() + b.cols() + c.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double* row = out.row(i);
        std::copy(a.row(i), a.row(i) + a.cols(), row);
        std::copy(b.row(i), b.row(i) + b.cols(), row + a.cols());
        std::copy(c.row(i), c.row(i) + c.cols(), row + a.cols() + b.cols());
    }
    return out;
}

DenseMatrix slice_cols(const DenseMatrix& a, std::size_t first, std::size_t count) {
    DenseMatrix out(a.rows(), count);
    for (std::size_t i = 0; i < a.rows(); ++i)
        std::copy(a.row(i) + first, a.row(i) + first + count, out.row(i));
    return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Layers
// ---------------------------------------------------------------------------

LinearLayer::LinearLayer(std::string activation_key, std::size_t in_width, std::size_t out_width,
                         std::uint64_t init_seed)
    : key_(std::move(activation_key)) {
    w = sample_gaussian(in_width, out_width, init_seed);
    scale_in_place(w, 1.0 / std::sqrt(static_cast<double>(in_width)));
    grad_w = DenseMatrix(in_width, out_width, 0.0);
}

DenseMatrix LinearLayer::forward(const DenseMatrix& x) const { return matmul(x, w); }

DenseMatrix LinearLayer::forward_store(const DenseMatrix& x, StepContext& ctx) {
    if (x.cols() != w.rows()) throw ParameterError("linear: input width mismatch");
    DenseMatrix y = forward(x);
    ensure_training_finite(y, "linear forward");
    stored_ = store_activation(key_, x, ctx, /*linear_class=*/true);
    return y;
}

DenseMatrix LinearLayer::backward(const DenseMatrix& dy) {
    if (stored_.step < 0) throw ConsistencyError("linear backward without stored activation");
    DenseMatrix x_hat = stored_.reconstructed();
    gemm(grad_w, x_hat, dy, /*trans_a=*/true, false, 1.0, 1.0);
    return matmul_a_bt(dy, w);
}

GeluLayer::GeluLayer(std::string activation_key, std::size_t width)
    : key_(std::move(activation_key)), width_(width) {}

double gelu(double x) {
    // Exact tanh-form constants so independent builds match bit for bit.
    constexpr double c0 = 0.7978845608;
    constexpr double c1 = 0.044715;
    return 0.5 * x * (1.0 + std::tanh(c0 * (x + c1 * x * x * x)));
}

double gelu_derivative(double x) {
    constexpr double c0 = 0.7978845608;
    constexpr double c1 = 0.044715;
    const double u = c0 * (x + c1 * x * x * x);
    const double t = std::tanh(u);
    return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * c0 * (1.0 + 3.0 * c1 * x * x);
}

DenseMatrix GeluLayer::forward(const DenseMatrix& x) const {
    DenseMatrix y = x;
    for (std::size_t i = 0; i < y.size(); ++i) y.data()[i] = gelu(y.data()[i]);
    return y;
}

DenseMatrix GeluLayer::forward_store(const DenseMatrix& x, StepContext& ctx) {
    if (x.cols() != width_) throw ParameterError("gelu: input width mismatch");
    DenseMatrix y = forward(x);
    ensure_training_finite(y, "gelu forward");
    stored_ = store_activation(key_, x, ctx, /*linear_class=*/false);
    return y;
}

DenseMatrix GeluLayer::backward(const DenseMatrix& dy) {
    if (stored_.step < 0) throw ConsistencyError("gelu backward without stored activation");
    DenseMatrix x_hat = stored_.reconstructed();
    DenseMatrix dx = dy;
    for (std::size_t i = 0; i < dx.size(); ++i)
        dx.data()[i] *= gelu_derivative(x_hat.data()[i]);
    return dx;
}

namespace {
constexpr double kLayerNormEps = 1e-5;
}

LayerNormLayer::LayerNormLayer(std::string activation_key, std::size_t width)
    : key_(std::move(activation_key)), width_(width) {
    gain = DenseMatrix(1, width, 1.0);
    bias = DenseMatrix(1, width, 0.0);
    grad_gain = DenseMatrix(1, width, 0.0);
    grad_bias = DenseMatrix(1, width, 0.0);
}

DenseMatrix LayerNormLayer::forward(const DenseMatrix& x) const {
    DenseMatrix y(x.rows(), x.cols());
    const double n = static_cast<double>(x.cols());
    for (std::size_t i = 0; i < x.rows(); ++i) {
        double mu = 0.0;
        for (std::size_t j = 0; j < x.cols(); ++j) mu += x(i, j);
        mu /= n;
        double var = 0.0;
        for (std::size_t j = 0; j < x.cols(); ++j) {
            const double d = x(i, j) - mu;
            var += d * d;
        }
        var /= n;
        const double inv = 1.0 / std::sqrt(var + kLayerNormEps);
        for (std::size_t j = 0; j < x.cols(); ++j)
            y(i, j) = gain(0, j) * (x(i, j) - mu) * inv + bias(0, j);
    }
    return y;
}

DenseMatrix LayerNormLayer::forward_store(const DenseMatrix& x, StepContext& ctx) {
    if (x.cols() != width_) throw ParameterError("layernorm: input width mismatch");
    DenseMatrix y = forward(x);
    ensure_training_finite(y, "layernorm forward");
    stored_ = store_activation(key_, x, ctx, /*linear_class=*/false);
    // Per-row statistics ride uncompressed next to the projected input.
    mean_.assign(x.rows(), 0.0);
    variance_.assign(x.rows(), 0.0);
    const double n = static_cast<double>(x.cols());
    for (std::size_t i = 0; i < x.rows(); ++i) {
        double mu = 0.0;
        for (std::size_t j = 0; j < x.cols(); ++j) mu += x(i, j);
        mu /= n;
        double var = 0.0;
        for (std::size_t j = 0; j < x.cols(); ++j) {
            const double d = x(i, j) - mu;
            var += d * d;
        }
        mean_[i] = mu;
        variance_[i] = var / n;
    }
    if (ctx.row_scalars) (*ctx.row_scalars)[key_ + ".stats"] = 2 * x.rows();
    return y;
}

DenseMatrix LayerNormLayer::backward(const DenseMatrix& dy) {
    if (stored_.step < 0) throw ConsistencyError("layernorm backward without stored activation");
    DenseMatrix x_hat_mat = stored_.reconstructed();
    const std::size_t rows = dy.rows();
    const std::size_t n = width_;
    DenseMatrix dx(rows, n);
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < rows; ++i) {
        const double inv_s = 1.0 / std::sqrt(variance_[i] + kLayerNormEps);
        double g_mean = 0.0;
        double gx_mean = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const double xh = (x_hat_mat(i, j) - mean_[i]) * inv_s;
            const double g = dy(i, j) * gain(0, j);
            grad_gain(0, j) += dy(i, j) * xh;
            grad_bias(0, j) += dy(i, j);
            g_mean += g;
            gx_mean += g * xh;
        }
        g_mean *= inv_n;
        gx_mean *= inv_n;
        for (std::size_t j = 0; j < n; ++j) {
            const double xh = (x_hat_mat(i, j) - mean_[i]) * inv_s;
            const double g = dy(i, j) * gain(0, j);
            dx(i, j) = (g - g_mean - xh * gx_mean) * inv_s;
        }
    }
    return dx;
}

// ---------------------------------------------------------------------------
// Model
// ---------------------------------------------------------------------------

void ModelConfig::validate() const {
    if (input_width < 1 || hidden_width < 1 || output_width < 1)
        throw ParameterError("model widths must be positive");
    if (mlp_residual && output_width != input_width)
        throw ParameterError("mlp residual requires output_width == input_width");
    if (qkv_block && qkv_branch_width < 1)
        throw ParameterError("qkv block requires a positive branch width");
    if (loss != "mse" && loss != "softmax_ce")
        throw ParameterError("loss must be 'mse' or 'softmax_ce'");
}

Model::Model(const ModelConfig& config, std::uint64_t init_seed) : config_(config) {
    config.validate();
    const std::size_t n = config.input_width;
    if (config.qkv_block) {
        const std::size_t q = config.qkv_branch_width;
        wq = std::make_unique<LinearLayer>("qkv.input", n, q, derive_seed(init_seed, 1));
        wk = std::make_unique<LinearLayer>("qkv.input", n, q, derive_seed(init_seed, 2));
        wv = std::make_unique<LinearLayer>("qkv.input", n, q, derive_seed(init_seed, 3));
        wo = std::make_unique<LinearLayer>("qkv.out_proj.input", 3 * q, n,
                                           derive_seed(init_seed, 4));
    }
    if (config.layer_norm) ln.emplace("ln.input", n);
    fc1 = std::make_unique<LinearLayer>("fc1.input", n, config.hidden_width,
                                        derive_seed(init_seed, 5));
    act = std::make_unique<GeluLayer>("gelu.input", config.hidden_width);
    fc2 = std::make_unique<LinearLayer>("fc2.input", config.hidden_width, config.output_width,
                                        derive_seed(init_seed, 6));
}

DenseMatrix Model::forward(const DenseMatrix& x) const {
    DenseMatrix h = x;
    if (config_.qkv_block) {
        DenseMatrix c = concat_cols(wq->forward(h), wk->forward(h), wv->forward(h));
        h = wo->forward(c) + h;
    }
    const DenseMatrix skip = h;
    DenseMatrix t = ln ? ln->forward(h) : h;
    t = fc2->forward(act->forward(fc1->forward(t)));
    if (config_.mlp_residual) t = t + skip;
    return t;
}

DenseMatrix Model::forward_store(const DenseMatrix& x, StepContext& ctx) {
    DenseMatrix h = x;
    if (config_.qkv_block) {
        DenseMatrix q = wq->forward_store(h, ctx);
        DenseMatrix k = wk->forward_store(h, ctx);
        DenseMatrix v = wv->forward_store(h, ctx);
        DenseMatrix c = concat_cols(q, k, v);
        h = wo->forward_store(c, ctx) + h;
    }
    const DenseMatrix skip = h;
    DenseMatrix t = ln ? ln->forward_store(h, ctx) : h;
    t = fc1->forward_store(t, ctx);
    t = act->forward_store(t, ctx);
    t = fc2->forward_store(t, ctx);
    if (config_.mlp_residual) t = t + skip;
    return t;
}

DenseMatrix Model::backward(const DenseMatrix& dy) {
    DenseMatrix d = fc1->backward(act->backward(fc2->backward(dy)));
    if (ln) d = ln->backward(d);
    if (config_.mlp_residual) d = d + dy;
    if (config_.qkv_block) {
        const DenseMatrix block_skip = d;
        DenseMatrix dc = wo->backward(d);
        const std::size_t q = config_.qkv_branch_width;
        DenseMatrix dx = wq->backward(slice_cols(dc, 0, q));
        dx = dx + wk->backward(slice_cols(dc, q, q));
        dx = dx + wv->backward(slice_cols(dc, 2 * q, q));
        d = dx + block_skip;
    }
    return d;
}

void Model::collect(std::vector<DenseMatrix*>& params, std::vector<DenseMatrix*>& grads) {
    const auto push = [&](DenseMatrix& p, DenseMatrix& g) {
        params.push_back(&p);
        grads.push_back(&g);
    };
    if (config_.qkv_block) {
        push(wq->w, wq->grad_w);
        push(wk->w, wk->grad_w);
        push(wv->w, wv->grad_w);
        push(wo->w, wo->grad_w);
    }
    if (ln) {
        push(ln->gain, ln->grad_gain);
        push(ln->bias, ln->grad_bias);
    }
    push(fc1->w, fc1->grad_w);
    push(fc2->w, fc2->grad_w);
}

void Model::zero_grads() {
    std::vector<DenseMatrix*> params, grads;
    collect(params, grads);
    for (DenseMatrix* g : grads) std::fill(g->data(), g->data() + g->size(), 0.0);
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

namespace {

// Inputs with a planted spectral shape: strong head directions, uniform tail.
struct DataSource {
    DenseMatrix mix;  // n×n = diag(scales)·Aᵀ with A orthonormal
    std::size_t batch;
    std::uint64_t seed;

    DataSource(const TaskConfig& task, std::size_t width, std::uint64_t data_seed)
        : batch(task.batch), seed(data_seed) {
        DenseMatrix a = thin_qr(sample_gaussian(width, width, derive_seed(data_seed, 0xA)));
        mix = DenseMatrix(width, width);
        for (std::size_t j = 0; j < width; ++j) {
            const double scale = j < task.head_count ? task.head_scale : task.tail_scale;
            for (std::size_t i = 0; i < width; ++i) mix(j, i) = scale * a(i, j);
        }
    }

    DenseMatrix sample(long step) const {
        DenseMatrix z =
            sample_gaussian(batch, mix.rows(), derive_seed(seed, static_cast<std::uint64_t>(step)));
        return matmul(z, mix);
    }
};

double mse_loss(const DenseMatrix& y, const DenseMatrix& target, DenseMatrix& dy) {
    const double inv = 1.0 / static_cast<double>(y.size());
    dy = DenseMatrix(y.rows(), y.cols());
    double loss = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double d = y.data()[i] - target.data()[i];
        loss += d * d;
        dy.data()[i] = 2.0 * d * inv;
    }
    return loss * inv;
}

double softmax_ce_loss(const DenseMatrix& y, const std::vector<std::size_t>& classes,
                       DenseMatrix& dy) {
    const std::size_t rows = y.rows();
    const std::size_t cols = y.cols();
    dy = DenseMatrix(rows, cols);
    double loss = 0.0;
    for (std::size_t i = 0; i < rows; ++i) {
        double mx = y(i, 0);
        for (std::size_t j = 1; j < cols; ++j) mx = std::max(mx, y(i, j));
        double z = 0.0;
        for (std::size_t j = 0; j < cols; ++j) z += std::exp(y(i, j) - mx);
        const double log_z = std::log(z) + mx;
        loss += log_z - y(i, classes[i]);
        for (std::size_t j = 0; j < cols; ++j) {
            const double p = std::exp(y(i, j) - log_z);
            dy(i, j) = (p - (j == classes[i] ? 1.0 : 0.0)) / static_cast<double>(rows);
        }
    }
    return loss / static_cast<double>(rows);
}

std::vector<std::size_t> argmax_rows(const DenseMatrix& y) {
    std::vector<std::size_t> out(y.rows(), 0);
    for (std::size_t i = 0; i < y.rows(); ++i) {
        double best = y(i, 0);
        for (std::size_t j = 1; j < y.cols(); ++j)
            if (y(i, j) > best) {
                best = y(i, j);
                out[i] = j;
            }
    }
    return out;
}

}  // namespace

RunMetrics train(const TrainConfig& config) {
    config.model.validate();
    config.policy.validate();
    if (config.optimizer != "sgd" && config.optimizer != "adam")
        throw ParameterError("optimizer must be 'sgd' or 'adam'");

    Model teacher(config.model, derive_seed(config.seed, 0x7EAC));
    Model student(config.model, derive_seed(config.seed, 0x57D));
    DataSource data(config.task, config.model.input_width, derive_seed(config.seed, 0xDA7A));

    CompressionPolicy policy = config.policy;
    SharedSubspaceCache cache;

    std::vector<DenseMatrix*> params, grads;
    student.collect(params, grads);
    std::vector<AdamState> adam_states(params.size());

    RunMetrics metrics;
    metrics.steps.reserve(config.steps);
    std::map<std::string, std::size_t> row_scalars;

    for (std::size_t step = 0; step < config.steps; ++step) {
        const auto t0 = std::chrono::steady_clock::now();
        const long t = static_cast<long>(step);
        DenseMatrix x = data.sample(t);
        DenseMatrix target = teacher.forward(x);

        StepRecord record;
        record.step = t;
        row_scalars.clear();
        StepContext ctx{cache, policy, t, &row_scalars};
        try {
            DenseMatrix y = student.forward_store(x, ctx);
            DenseMatrix dy;
            double loss;
            if (config.model.loss == "mse") {
                loss = mse_loss(y, target, dy);
            } else {
                loss = softmax_ce_loss(y, argmax_rows(target), dy);
            }
            if (!std::isfinite(loss)) throw TrainingFault("loss is non-finite");
            record.loss = loss;
            student.backward(dy);
            double grad_sq = 0.0;
            for (DenseMatrix* g : grads) {
                if (!g->is_finite()) throw TrainingFault("non-finite gradient");
                grad_sq += g->squared_frobenius_norm();
            }
            record.grad_norm = std::sqrt(grad_sq);
        } catch (const TrainingFault&) {
            metrics.diverged = true;
            metrics.diverged_at = t;
            student.zero_grads();
            break;
        }

        for (std::size_t p = 0; p < params.size(); ++p) {
            if (config.optimizer == "sgd") {
                sgd_core(params[p]->data(), grads[p]->data(), params[p]->size(), config.lr);
            } else {
                adam_core(params[p]->data(), grads[p]->data(), params[p]->size(), adam_states[p],
                          config.lr, 0.9, 0.999, 1e-8);
            }
        }
        student.zero_grads();

        std::size_t act_scalars = 0;
        for (const auto& [key, scalars] : row_scalars) act_scalars += scalars;
        record.act_scalars = act_scalars;
        metrics.peak_activation_scalars = std::max(metrics.peak_activation_scalars, act_scalars);
        record.wall_ms = std::chrono::duration<double, std::milli>(
                             std::chrono::steady_clock::now() - t0)
                             .count();
        metrics.steps.push_back(record);
    }

    metrics.final_loss =
        metrics.steps.empty() ? std::numeric_limits<double>::quiet_NaN() : metrics.steps.back().loss;
    metrics.per_layer_scalars = row_scalars;
    metrics.decomposition_counts = cache.all_counters();
    for (const auto& [key, counters] : metrics.decomposition_counts) {
        (void)counters;
        metrics.basis_scalars_total += cache.basis_scalars(key);
    }
    return metrics;
}

Ledger model_ledger(const ModelConfig& model, std::size_t batch,
                    const CompressionPolicy& policy) {
    model.validate();
    policy.validate();
    const bool off = policy.mode == ProjectionMode::None;
    const auto stored_width = [&](std::size_t width, bool linear) {
        if (off) return width;
        auto [r1, r2] = policy.ranks(width, linear);
        return r1 + r2;
    };

    Ledger ledger;
    ledger.blocks = 1;
    const std::size_t n = model.input_width;
    const std::size_t m = model.hidden_width;
    auto add = [&](const std::string& name, std::size_t baseline, std::size_t compressed) {
        LedgerRow row;
        row.operation = name;
        row.baseline_scalars = baseline;
        row.compressed_scalars = compressed;
        row.reduction_fraction =
            baseline == 0 ? 0.0
                          : 1.0 - static_cast<double>(compressed) / static_cast<double>(baseline);
        ledger.rows.push_back(row);
    };
    auto add_basis = [&](const std::string& key, std::size_t width, bool linear) {
        if (off) return;
        auto [r1, r2] = policy.ranks(width, linear);
        ledger.basis_rows.push_back({key, width, width * (r1 + r2)});
    };

    if (model.qkv_block) {
        const std::size_t q3 = 3 * model.qkv_branch_width;
        add("qkv.input", batch * n, batch * stored_width(n, true));
        add("qkv.out_proj.input", batch * q3, batch * stored_width(q3, true));
        add("qkv.residual", 0, 0);
        add_basis("qkv.input", n, true);
        add_basis("qkv.out_proj.input", q3, true);
    }
    if (model.layer_norm) {
        add("ln.input", batch * n, batch * stored_width(n, false));
        add("ln.input.stats", 2 * batch, 2 * batch);
        add_basis("ln.input", n, false);
    }
    add("fc1.input", batch * n, batch * stored_width(n, true));
    add("gelu.input", batch * m, batch * stored_width(m, false));
    add("fc2.input", batch * m, batch * stored_width(m, true));
    if (model.mlp_residual) add("mlp.residual", 0, 0);
    add_basis("fc1.input", n, true);
    add_basis("gelu.input", m, false);
    add_basis("fc2.input", m, true);
    return ledger;
}

std::string metrics_to_csv(const RunMetrics& metrics) {
    std::ostringstream out;
    out << "step,loss,grad_norm,act_scalars,wall_ms\n";
    for (const auto& s : metrics.steps)
        out << s.step << ',' << s.loss << ',' << s.grad_norm << ',' << s.act_scalars << ','
            << s.wall_ms << '\n';
    return out.str();
}

// ---------------------------------------------------------------------------
// Optimization demos
// ---------------------------------------------------------------------------

CounterexampleResult counterexample_run(std::size_t steps,
                                        const std::function<double(long)>& lr_schedule,
                                        std::uint64_t seed, CounterexampleVariant variant) {
    double w1 = 0.0;
    double w2 = 1.0;
    Rng rng(seed);

    // Full objective gradient. The greedy-selection variant uses symmetric
    // ±1 noise, under which the first coordinate's minimizer sits at 0; the
    // other two use {0, 1} noise with minimizer 1.5.
    const bool symmetric = variant == CounterexampleVariant::MaxSelection;
    const auto full_grad_norm = [&](double a, double b) {
        const double g1 = symmetric ? 2.0 * a : 2.0 * a - 3.0;
        const double g2 = 2.0 * b;
        return std::sqrt(g1 * g1 + g2 * g2);
    };

    CounterexampleResult result;
    result.trajectory.reserve(steps + 1);
    result.trajectory.push_back({0, w1, w2, full_grad_norm(w1, w2)});
    bool w2_constant = (w2 == 1.0);
    for (std::size_t step = 0; step < steps; ++step) {
        const long t = static_cast<long>(step);
        const double lr = lr_schedule(t);
        const bool coin = (rng.next_u64() & 1ULL) != 0;
        switch (variant) {
            case CounterexampleVariant::Biased: {
                const double xi = coin ? 1.0 : 0.0;
                w1 -= lr * 2.0 * (w1 - 3.0 * xi);
                break;
            }
            case CounterexampleVariant::Unbiased: {
                const double xi = coin ? 1.0 : 0.0;
                w1 -= lr * 2.0 * (w1 - 3.0 * xi);
                w2 -= lr * 2.0 * w2;
                break;
            }
            case CounterexampleVariant::MaxSelection: {
                const double xi = coin ? 1.0 : -1.0;
                const double g1 = 2.0 * (w1 - 3.0 * xi);
                const double g2 = 2.0 * w2;
                if (std::fabs(g1) >= std::fabs(g2)) {
                    w1 -= lr * g1;
                } else {
                    w2 -= lr * g2;
                }
                break;
            }
        }
        w2_constant = w2_constant && (w2 == 1.0);
        result.trajectory.push_back({t + 1, w1, w2, full_grad_norm(w1, w2)});
    }

    result.w2_constant_one = w2_constant;
    result.min_grad_norm = result.trajectory.front().grad_norm;
    for (const auto& p : result.trajectory) {
        result.min_grad_norm = std::min(result.min_grad_norm, p.grad_norm);
        if (result.first_step_below_0p1 < 0 && p.grad_norm <= 0.1)
            result.first_step_below_0p1 = p.t;
    }
    return result;
}

BoundedVarianceResult bounded_variance_demo(double smoothness, double initial_gap, double sigma,
                                            std::size_t steps, std::uint64_t seed) {
    if (smoothness <= 0.0 || initial_gap <= 0.0 || sigma < 0.0 || steps < 1)
        throw ParameterError("bounded_variance_demo: need L > 0, gap > 0, sigma >= 0, steps >= 1");
    const std::size_t dim = 4;
    const double big_t = static_cast<double>(steps);

    std::vector<double> w(dim, 0.0);
    w[0] = std::sqrt(2.0 * initial_gap / smoothness);  // f(w_1) − inf f = initial_gap

    double eta = 1.0 / smoothness;
    if (sigma > 0.0) {
        eta = std::min(eta, std::sqrt(2.0 * initial_gap / smoothness) / (sigma * std::sqrt(big_t)));
    }

    Rng rng(seed);
    const double noise_scale = sigma / std::sqrt(static_cast<double>(dim));
    BoundedVarianceResult result;
    result.step_size = eta;
    result.grad_norm_sq.reserve(steps);
    for (std::size_t t = 0; t < steps; ++t) {
        double g_sq = 0.0;
        for (double wi : w) g_sq += smoothness * wi * smoothness * wi;
        result.grad_norm_sq.push_back(g_sq);
        for (std::size_t i = 0; i < dim; ++i) {
            const double noisy = smoothness * w[i] + noise_scale * rng.next_gaussian();
            w[i] -= eta * noisy;
        }
    }
    result.min_grad_norm_sq = *std::min_element(result.grad_norm_sq.begin(),
                                                result.grad_norm_sq.end());
    result.bound = 2.0 * smoothness * initial_gap / big_t +
                   2.0 * std::sqrt(2.0 * smoothness * initial_gap / big_t) * sigma;
    return result;
}

}  // namespace prac
