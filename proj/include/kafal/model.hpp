#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "kafal/errors.hpp"
#include "kafal/matrix.hpp"

namespace kafal {

// Probabilities are clamped to [kProbEps, 1] before entering any logarithm.
inline constexpr double kProbEps = 1e-12;

inline double clamp_prob(double p) { return std::min(1.0, std::max(kProbEps, p)); }

// Multilayer perceptron shape: widths = {input dim, hidden..., class count}.
// Hidden activations are ReLU; the last layer emits raw logits.
struct ModelSpec {
    std::vector<int> widths;

    void validate() const {
        if (widths.size() < 2)
            throw config_error("model spec needs at least input and output widths");
        for (int w : widths)
            if (w < 1) throw config_error("model widths must be >= 1");
    }

    int input_dim() const { return widths.front(); }
    int num_classes() const { return widths.back(); }
    std::size_t layer_count() const { return widths.size() - 1; }

    std::size_t param_count() const {
        std::size_t n = 0;
        for (std::size_t l = 0; l + 1 < widths.size(); ++l)
            n += static_cast<std::size_t>(widths[l + 1]) * widths[l] + widths[l + 1];
        return n;
    }

    // Offset of layer l's weight block; biases follow the weights.
    std::size_t layer_offset(std::size_t l) const {
        std::size_t n = 0;
        for (std::size_t i = 0; i < l; ++i)
            n += static_cast<std::size_t>(widths[i + 1]) * widths[i] + widths[i + 1];
        return n;
    }

    bool operator==(const ModelSpec&) const = default;
};

// Flat parameter vector for one ModelSpec. Layout per layer: row-major
// weight matrix (out x in), then biases.
struct ParamVector {
    ModelSpec spec;
    std::vector<double> values;

    ParamVector() = default;
    explicit ParamVector(ModelSpec s) : spec(std::move(s)), values(spec.param_count(), 0.0) {}
    ParamVector(ModelSpec s, std::vector<double> v) : spec(std::move(s)), values(std::move(v)) {
        if (values.size() != spec.param_count())
            throw config_error("parameter vector length does not match model spec");
    }

    std::size_t size() const { return values.size(); }
};

struct GradientVector {
    std::vector<double> values;

    explicit GradientVector(std::size_t n = 0) : values(n, 0.0) {}
    std::size_t size() const { return values.size(); }
};

// A training batch. Empty `labels` means an unlabelled batch.
struct Batch {
    Matrix inputs;
    std::vector<int> labels;

    bool labelled() const { return !labels.empty(); }
};

// Per-class labelled counts of one client's pool.
struct ClassHistogram {
    std::vector<long> counts;

    explicit ClassHistogram(std::size_t num_classes = 0) : counts(num_classes, 0) {}
    explicit ClassHistogram(std::vector<long> c) : counts(std::move(c)) {}

    std::size_t num_classes() const { return counts.size(); }
    long total() const { return std::accumulate(counts.begin(), counts.end(), 0L); }
};

// Uniform weights scaled by 1/sqrt(fan-in); biases start at zero.
inline ParamVector init_params(const ModelSpec& spec, std::mt19937_64& eng) {
    spec.validate();
    ParamVector p(spec);
    std::size_t off = 0;
    for (std::size_t l = 0; l + 1 < spec.widths.size(); ++l) {
        const int in = spec.widths[l];
        const int out = spec.widths[l + 1];
        const double bound = 1.0 / std::sqrt(static_cast<double>(in));
        std::uniform_real_distribution<double> u(-bound, bound);
        for (int i = 0; i < out * in; ++i) p.values[off + i] = u(eng);
        off += static_cast<std::size_t>(out) * in + out; // biases stay zero
    }
    return p;
}

// Post-activation values per layer, kept for backprop. post[0] is the input
// batch, post[l] the ReLU output of hidden layer l, and `logits` the head.
struct ForwardCache {
    std::vector<Matrix> post;
    Matrix logits;
};

namespace detail {

// out = act * W^T + b for one layer (W is out_dim x in_dim, row-major).
inline void affine(const double* w, const double* b, const Matrix& act, Matrix& out) {
    const std::size_t in = act.cols, od = out.cols;
    for (std::size_t i = 0; i < act.rows; ++i) {
        const double* x = act.data.data() + i * in;
        double* y = out.data.data() + i * od;
        for (std::size_t o = 0; o < od; ++o) {
            const double* wr = w + o * in;
            double s = b[o];
            for (std::size_t k = 0; k < in; ++k) s += wr[k] * x[k];
            y[o] = s;
        }
    }
}

} // namespace detail

inline ForwardCache forward_cached(const ParamVector& params, const Matrix& inputs) {
    const ModelSpec& spec = params.spec;
    if (inputs.cols != static_cast<std::size_t>(spec.input_dim()))
        throw config_error("input width " + std::to_string(inputs.cols) +
                           " does not match model input dim " + std::to_string(spec.input_dim()));
    ForwardCache cache;
    cache.post.reserve(spec.layer_count());
    cache.post.push_back(inputs);
    std::size_t off = 0;
    for (std::size_t l = 0; l + 1 < spec.widths.size(); ++l) {
        const int in = spec.widths[l];
        const int out = spec.widths[l + 1];
        Matrix z(inputs.rows, out);
        detail::affine(params.values.data() + off,
                       params.values.data() + off + static_cast<std::size_t>(out) * in,
                       cache.post.back(), z);
        off += static_cast<std::size_t>(out) * in + out;
        if (l + 2 < spec.widths.size()) {
            for (double& v : z.data) v = v > 0.0 ? v : 0.0;
            cache.post.push_back(std::move(z));
        } else {
            cache.logits = std::move(z);
        }
    }
    return cache;
}

inline Matrix forward(const ParamVector& params, const Matrix& inputs) {
    return forward_cached(params, inputs).logits;
}

// Activations feeding the output layer (the inputs themselves for a
// single-layer model). Used as core-set features.
inline Matrix penultimate_features(const ParamVector& params, const Matrix& inputs) {
    ForwardCache cache = forward_cached(params, inputs);
    return std::move(cache.post.back());
}

// Backpropagate dL/dlogits through the cached forward pass; returns dL/dparams.
// The caller bakes any batch averaging into `dlogits`.
inline GradientVector backward(const ParamVector& params, const ForwardCache& cache,
                               const Matrix& dlogits) {
    const ModelSpec& spec = params.spec;
    GradientVector grad(params.size());
    Matrix delta = dlogits;
    for (std::size_t l = spec.layer_count(); l-- > 0;) {
        const int in = spec.widths[l];
        const int out = spec.widths[l + 1];
        const std::size_t off = spec.layer_offset(l);
        const Matrix& act = cache.post[l];
        double* dw = grad.values.data() + off;
        double* db = dw + static_cast<std::size_t>(out) * in;
        for (std::size_t i = 0; i < delta.rows; ++i) {
            const double* d = delta.data.data() + i * out;
            const double* x = act.data.data() + i * in;
            for (int o = 0; o < out; ++o) {
                const double g = d[o];
                if (g == 0.0) continue;
                double* wr = dw + static_cast<std::size_t>(o) * in;
                for (int k = 0; k < in; ++k) wr[k] += g * x[k];
                db[o] += g;
            }
        }
        if (l == 0) break;
        const double* w = params.values.data() + off;
        Matrix prev(delta.rows, in);
        for (std::size_t i = 0; i < delta.rows; ++i) {
            const double* d = delta.data.data() + i * out;
            const double* x = act.data.data() + i * in; // ReLU output; x > 0 marks active units
            double* p = prev.data.data() + i * in;
            for (int o = 0; o < out; ++o) {
                const double g = d[o];
                if (g == 0.0) continue;
                const double* wr = w + static_cast<std::size_t>(o) * in;
                for (int k = 0; k < in; ++k) p[k] += g * wr[k];
            }
            for (int k = 0; k < in; ++k)
                if (x[k] <= 0.0) p[k] = 0.0;
        }
        delta = std::move(prev);
    }
    return grad;
}

inline std::vector<double> softmax(std::span<const double> logits) {
    std::vector<double> out(logits.size());
    double mx = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        out[i] = std::exp(logits[i] - mx);
        sum += out[i];
    }
    for (double& v : out) v /= sum;
    return out;
}

// KL(p || q) = sum p ln(p/q), both sides clamped before the log.
inline double kl_divergence(std::span<const double> p, std::span<const double> q) {
    if (p.size() != q.size())
        throw std::invalid_argument("kl_divergence: length mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        double pc = clamp_prob(p[i]);
        double qc = clamp_prob(q[i]);
        s += pc * (std::log(pc) - std::log(qc));
    }
    // Rounding can leave a tiny negative on near-identical inputs.
    return (s < 0.0 && s > -1e-9) ? 0.0 : s;
}

// Balanced cross-entropy on raw logits: per sample
//   -log( n_y exp(g_y) / sum_c n_c exp(g_c) ),
// averaged over the batch. Zero-count classes drop out of the normalizer.
// Returns the loss and dL/dlogits (already divided by batch size).
struct LogitLoss {
    double loss = 0.0;
    Matrix dlogits;
};

inline LogitLoss balanced_ce_logits(const Matrix& logits, const std::vector<int>& labels,
                                    const ClassHistogram& counts) {
    const std::size_t batch = logits.rows;
    const std::size_t C = logits.cols;
    if (labels.size() != batch)
        throw std::invalid_argument("balanced_ce: labels/logits row mismatch");
    if (counts.num_classes() != C)
        throw std::invalid_argument("balanced_ce: histogram class count mismatch");

    std::vector<double> logn(C, 0.0);
    for (std::size_t c = 0; c < C; ++c)
        logn[c] = counts.counts[c] > 0 ? std::log(static_cast<double>(counts.counts[c])) : 0.0;

    LogitLoss out;
    out.dlogits = Matrix(batch, C);
    const double inv_b = 1.0 / static_cast<double>(batch);
    for (std::size_t i = 0; i < batch; ++i) {
        const int y = labels[i];
        if (y < 0 || static_cast<std::size_t>(y) >= C)
            throw std::invalid_argument("balanced_ce: label " + std::to_string(y) + " out of range");
        if (counts.counts[y] <= 0)
            throw std::invalid_argument("balanced_ce: label " + std::to_string(y) +
                                        " has zero count in histogram");
        auto g = logits.row(i);
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < C; ++c)
            if (counts.counts[c] > 0) mx = std::max(mx, logn[c] + g[c]);
        double z = 0.0;
        for (std::size_t c = 0; c < C; ++c)
            if (counts.counts[c] > 0) z += std::exp(logn[c] + g[c] - mx);
        const double lse = mx + std::log(z);
        out.loss += (lse - logn[y] - g[y]) * inv_b;
        auto d = out.dlogits.row(i);
        for (std::size_t c = 0; c < C; ++c) {
            double p = counts.counts[c] > 0 ? std::exp(logn[c] + g[c] - lse) : 0.0;
            d[c] = (p - (static_cast<int>(c) == y ? 1.0 : 0.0)) * inv_b;
        }
    }
    return out;
}

struct LossGrad {
    double loss = 0.0;
    GradientVector grad;
};

// Balanced cross-entropy through the network: loss and exact dL/dparams.
inline LossGrad balanced_ce(const ParamVector& params, const Batch& batch,
                            const ClassHistogram& counts) {
    ForwardCache cache = forward_cached(params, batch.inputs);
    LogitLoss ll = balanced_ce_logits(cache.logits, batch.labels, counts);
    return {ll.loss, backward(params, cache, ll.dlogits)};
}

inline ParamVector sgd_step(const ParamVector& params, const GradientVector& grad, double eta) {
    if (grad.size() != params.size())
        throw std::invalid_argument("sgd_step: gradient/parameter length mismatch");
    for (double g : grad.values)
        if (!std::isfinite(g)) throw numeric_error("sgd_step: non-finite gradient entry");
    ParamVector out = params;
    for (std::size_t i = 0; i < out.values.size(); ++i)
        out.values[i] -= eta * grad.values[i];
    return out;
}

inline int argmax_row(std::span<const double> row) {
    int best = 0;
    for (std::size_t c = 1; c < row.size(); ++c)
        if (row[c] > row[best]) best = static_cast<int>(c);
    return best;
}

struct Evaluation {
    double accuracy = 0.0;
    std::vector<double> per_class;
};

inline Evaluation evaluate(const ParamVector& params, const Matrix& inputs,
                           const std::vector<int>& labels, std::size_t batch_size = 512) {
    const std::size_t C = params.spec.num_classes();
    std::vector<long> correct(C, 0), seen(C, 0);
    for (std::size_t start = 0; start < inputs.rows; start += batch_size) {
        const std::size_t n = std::min(batch_size, inputs.rows - start);
        Matrix chunk(n, inputs.cols);
        std::copy(inputs.data.begin() + start * inputs.cols,
                  inputs.data.begin() + (start + n) * inputs.cols, chunk.data.begin());
        Matrix logits = forward(params, chunk);
        for (std::size_t i = 0; i < n; ++i) {
            const int y = labels[start + i];
            ++seen[y];
            if (argmax_row(logits.row(i)) == y) ++correct[y];
        }
    }
    Evaluation ev;
    ev.per_class.resize(C, 0.0);
    long total_correct = 0, total = 0;
    for (std::size_t c = 0; c < C; ++c) {
        if (seen[c] > 0) ev.per_class[c] = static_cast<double>(correct[c]) / seen[c];
        total_correct += correct[c];
        total += seen[c];
    }
    ev.accuracy = total > 0 ? static_cast<double>(total_correct) / total : 0.0;
    return ev;
}

} // namespace kafal
