#include "flpre/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace flpre {

namespace {

std::vector<int> layer_dims(const ModelSpec& spec) {
    std::vector<int> dims;
    dims.reserve(spec.hidden_dims.size() + 2);
    dims.push_back(spec.input_dim);
    for (int h : spec.hidden_dims) dims.push_back(h);
    dims.push_back(spec.n_classes);
    return dims;
}

void check_batch(const ModelSpec& spec, const Batch& batch) {
    if (batch.size() < 1) throw std::invalid_argument("batch: must contain at least one sample");
    if (batch.dim != spec.input_dim)
        throw std::invalid_argument("batch: feature dim " + std::to_string(batch.dim) +
                                    " does not match spec input_dim " +
                                    std::to_string(spec.input_dim));
    if (batch.features.size() != static_cast<std::size_t>(batch.size()) * batch.dim)
        throw std::invalid_argument("batch: feature matrix size mismatch");
    for (int y : batch.labels)
        if (y < 0 || y >= spec.n_classes)
            throw std::invalid_argument("batch: label out of range [0, n_classes)");
}

void check_params(const ModelSpec& spec, const ParameterVector& params) {
    if (params.size() != parameter_count(spec))
        throw std::invalid_argument("params: length " + std::to_string(params.size()) +
                                    " does not match spec parameter count " +
                                    std::to_string(parameter_count(spec)));
}

// Scratch buffers for one sample's forward/backward pass.
struct Workspace {
    std::vector<std::vector<double>> acts;   // acts[l]: activation entering layer l
    std::vector<std::vector<double>> preact; // preact[l]: z of layer l
};

// Forward pass for one sample. Returns the stable log-sum-exp pieces needed
// for both the loss and the softmax.
void forward_sample(const ParameterVector& params, const std::vector<int>& dims,
                    const double* x, Workspace& ws) {
    const std::size_t n_layers = dims.size() - 1;
    ws.acts.resize(n_layers);
    ws.preact.resize(n_layers);
    std::size_t off = 0;
    const double* in = x;
    int in_dim = dims[0];
    for (std::size_t l = 0; l < n_layers; ++l) {
        const int out_dim = dims[l + 1];
        ws.acts[l].assign(in, in + in_dim);
        auto& z = ws.preact[l];
        z.assign(out_dim, 0.0);
        const double* w = params.data() + off;
        const double* b = w + static_cast<std::size_t>(in_dim) * out_dim;
        for (int i = 0; i < in_dim; ++i) {
            const double a = in[i];
            const double* wrow = w + static_cast<std::size_t>(i) * out_dim;
            for (int o = 0; o < out_dim; ++o) z[o] += a * wrow[o];
        }
        for (int o = 0; o < out_dim; ++o) z[o] += b[o];
        if (l + 1 < n_layers) {
            for (int o = 0; o < out_dim; ++o)
                if (z[o] < 0.0) z[o] = 0.0;  // ReLU; derivative at 0 taken as 0
            in = z.data();
        }
        off += static_cast<std::size_t>(in_dim + 1) * out_dim;
        in_dim = out_dim;
    }
}

// Softmax of the final preactivation with max-shift; returns -log p[label].
double softmax_nll(const std::vector<double>& logits, int label, double* probs_out) {
    const int c = static_cast<int>(logits.size());
    double mx = logits[0];
    for (int i = 1; i < c; ++i) mx = std::max(mx, logits[i]);
    double sum = 0.0;
    for (int i = 0; i < c; ++i) sum += std::exp(logits[i] - mx);
    const double log_sum = std::log(sum);
    if (probs_out) {
        for (int i = 0; i < c; ++i) probs_out[i] = std::exp(logits[i] - mx) / sum;
    }
    return log_sum - (logits[label] - mx);
}

}  // namespace

void validate_spec(const ModelSpec& spec) {
    if (spec.input_dim < 1) throw std::invalid_argument("spec: input_dim must be positive");
    if (spec.n_classes < 2) throw std::invalid_argument("spec: n_classes must be at least 2");
    for (int h : spec.hidden_dims)
        if (h < 1) throw std::invalid_argument("spec: hidden dims must be positive");
}

std::size_t parameter_count(const ModelSpec& spec) {
    validate_spec(spec);
    const auto dims = layer_dims(spec);
    std::size_t total = 0;
    for (std::size_t l = 0; l + 1 < dims.size(); ++l)
        total += static_cast<std::size_t>(dims[l] + 1) * dims[l + 1];
    return total;
}

ParameterVector init_params(const ModelSpec& spec, std::uint64_t seed) {
    const auto dims = layer_dims(spec);
    ParameterVector params(parameter_count(spec), 0.0);
    Rng rng(seed);
    std::size_t off = 0;
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        const int fan_in = dims[l];
        const int fan_out = dims[l + 1];
        const double scale = 1.0 / std::sqrt(static_cast<double>(fan_in));
        for (int i = 0; i < fan_in * fan_out; ++i) params[off + i] = rng.normal() * scale;
        // biases stay zero
        off += static_cast<std::size_t>(fan_in + 1) * fan_out;
    }
    return params;
}

ForwardResult forward_loss(const ParameterVector& params, const ModelSpec& spec,
                           const Batch& batch) {
    check_params(spec, params);
    check_batch(spec, batch);
    const auto dims = layer_dims(spec);
    const int n = batch.size();
    ForwardResult result;
    result.probs.assign(static_cast<std::size_t>(n) * spec.n_classes, 0.0);
    Workspace ws;
    double total = 0.0;
    for (int s = 0; s < n; ++s) {
        forward_sample(params, dims, batch.features.data() + static_cast<std::size_t>(s) * batch.dim, ws);
        total += softmax_nll(ws.preact.back(), batch.labels[s],
                             result.probs.data() + static_cast<std::size_t>(s) * spec.n_classes);
    }
    result.loss = total / static_cast<double>(n);
    return result;
}

GradientVector gradient(const ParameterVector& params, const ModelSpec& spec,
                        const Batch& batch) {
    check_params(spec, params);
    check_batch(spec, batch);
    const auto dims = layer_dims(spec);
    const std::size_t n_layers = dims.size() - 1;
    const int n = batch.size();

    // Per-layer parameter offsets.
    std::vector<std::size_t> offsets(n_layers);
    {
        std::size_t off = 0;
        for (std::size_t l = 0; l < n_layers; ++l) {
            offsets[l] = off;
            off += static_cast<std::size_t>(dims[l] + 1) * dims[l + 1];
        }
    }

    GradientVector grad(params.size(), 0.0);
    Workspace ws;
    std::vector<double> probs(spec.n_classes);
    std::vector<double> delta, delta_prev;
    for (int s = 0; s < n; ++s) {
        forward_sample(params, dims, batch.features.data() + static_cast<std::size_t>(s) * batch.dim, ws);
        softmax_nll(ws.preact.back(), batch.labels[s], probs.data());
        delta.assign(probs.begin(), probs.end());
        delta[batch.labels[s]] -= 1.0;
        for (std::size_t l = n_layers; l-- > 0;) {
            const int in_dim = dims[l];
            const int out_dim = dims[l + 1];
            double* gw = grad.data() + offsets[l];
            double* gb = gw + static_cast<std::size_t>(in_dim) * out_dim;
            const double* a = ws.acts[l].data();
            for (int i = 0; i < in_dim; ++i) {
                double* grow = gw + static_cast<std::size_t>(i) * out_dim;
                const double ai = a[i];
                for (int o = 0; o < out_dim; ++o) grow[o] += ai * delta[o];
            }
            for (int o = 0; o < out_dim; ++o) gb[o] += delta[o];
            if (l == 0) break;
            // Back through the weights and the previous ReLU. Hidden
            // activations were stored post-ReLU, so mask where they are zero.
            delta_prev.assign(in_dim, 0.0);
            const double* w = params.data() + offsets[l];
            for (int i = 0; i < in_dim; ++i) {
                if (a[i] <= 0.0) continue;
                const double* wrow = w + static_cast<std::size_t>(i) * out_dim;
                double acc = 0.0;
                for (int o = 0; o < out_dim; ++o) acc += wrow[o] * delta[o];
                delta_prev[i] = acc;
            }
            delta.swap(delta_prev);
        }
    }
    const double nd = static_cast<double>(n);
    for (double& g : grad) g /= nd;
    return grad;
}

ParameterVector sgd_step(const ParameterVector& params, const GradientVector& grad,
                         double lr) {
    if (params.size() != grad.size())
        throw std::invalid_argument("sgd_step: params and grad length mismatch");
    if (lr == 0.0) return params;
    ParameterVector out(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) out[i] = params[i] - lr * grad[i];
    return out;
}

double accuracy(const ParameterVector& params, const ModelSpec& spec, const Batch& batch) {
    check_params(spec, params);
    check_batch(spec, batch);
    const auto dims = layer_dims(spec);
    Workspace ws;
    int correct = 0;
    for (int s = 0; s < batch.size(); ++s) {
        forward_sample(params, dims, batch.features.data() + static_cast<std::size_t>(s) * batch.dim, ws);
        const auto& logits = ws.preact.back();
        int arg = 0;
        for (int c = 1; c < spec.n_classes; ++c)
            if (logits[c] > logits[arg]) arg = c;
        if (arg == batch.labels[s]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(batch.size());
}

}  // namespace flpre
