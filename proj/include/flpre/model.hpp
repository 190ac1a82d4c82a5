#pragma once

#include <cstdint>
#include <vector>

#include "flpre/util.hpp"

namespace flpre {

/// Architecture of the dense classifier: input -> hidden (ReLU) -> softmax
/// head. An empty hidden list gives multinomial logistic regression.
struct ModelSpec {
    int input_dim = 0;
    std::vector<int> hidden_dims;
    int n_classes = 0;

    enum class Activation { relu };
    Activation activation = Activation::relu;
};

/// Flat 64-bit weights, packed layer by layer as [W (fan_in x fan_out,
/// row-major), b (fan_out)].
using ParameterVector = std::vector<double>;
using GradientVector = std::vector<double>;

struct Batch {
    int dim = 0;
    std::vector<double> features;  // n x dim, row-major
    std::vector<int> labels;

    int size() const { return static_cast<int>(labels.size()); }
};

void validate_spec(const ModelSpec& spec);
std::size_t parameter_count(const ModelSpec& spec);

/// Deterministic init: weights ~ N(0, 1) / sqrt(fan_in), biases zero.
ParameterVector init_params(const ModelSpec& spec, std::uint64_t seed);

struct ForwardResult {
    double loss = 0.0;                 // mean cross-entropy over the batch
    std::vector<double> probs;         // n x n_classes, row-major
};

/// Mean softmax cross-entropy and per-sample class probabilities.
ForwardResult forward_loss(const ParameterVector& params, const ModelSpec& spec,
                           const Batch& batch);

/// Exact analytic gradient of forward_loss w.r.t. params.
GradientVector gradient(const ParameterVector& params, const ModelSpec& spec,
                        const Batch& batch);

/// out[i] = params[i] - lr * grad[i]; lr == 0 returns params unchanged.
ParameterVector sgd_step(const ParameterVector& params, const GradientVector& grad,
                         double lr);

/// Fraction of samples whose argmax logit matches the label. Ties break
/// toward the lowest class index.
double accuracy(const ParameterVector& params, const ModelSpec& spec, const Batch& batch);

}  // namespace flpre
