#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "pfedgat/data.hpp"
#include "pfedgat/numerics.hpp"

// A client's local model: a small multilayer perceptron with leaky-ReLU
// hidden activations and a softmax cross-entropy head, trained by
// mini-batch SGD. Parameters live in a single flat vector (weights row-major
// then bias, per layer) so the server can treat every model as one point in
// R^d. All gradients are exact analytic backprop, checked against finite
// differences in the tests.

namespace pfedgat {

struct MlpSpec {
    std::vector<int> layer_widths;  // [feature_dim, hidden..., num_classes]
    double hidden_slope = 0.01;

    int param_count() const;
    int num_layers() const { return static_cast<int>(layer_widths.size()) - 1; }
    void validate() const;
};

struct FlatParams {
    Vec values;
    MlpSpec spec;
};

// Per-layer glorot-style uniform init, biases zero.
FlatParams init_params(const MlpSpec& spec, std::uint64_t seed);

struct ForwardResult {
    double loss = 0.0;  // mean cross-entropy over the batch
    Mat probs;          // batch_size x num_classes softmax rows
};

ForwardResult forward_loss(const FlatParams& params, const Dataset& ds,
                           std::span<const int> batch);

struct EvalResult {
    double loss = 0.0;
    double accuracy = 0.0;  // top-1; argmax ties break to the lowest class index
};

EvalResult evaluate(const FlatParams& params, const Dataset& ds, std::span<const int> view);

// Exact gradient of the mean cross-entropy over `view` w.r.t. the flat
// parameter vector.
Vec loss_gradient_wrt_params(const FlatParams& params, const Dataset& ds,
                             std::span<const int> view);

// Mean loss plus its gradient in one pass (the SGD step kernel).
std::pair<double, Vec> batch_loss_gradient(const FlatParams& params, const Dataset& ds,
                                           std::span<const int> batch);

struct ClientState {
    int id = 0;
    FlatParams params;
    const Dataset* data = nullptr;
    std::vector<int> train_idx;
    std::vector<int> test_idx;
    std::vector<int> feedback_idx;  // where the uploaded loss is measured; == test_idx
                                    // unless a validation carve-out is configured
    std::mt19937_64 rng;            // private shuffle stream, derived from (seed, id)
};

// E epochs of mini-batch SGD over the client's shuffled training set. The
// last partial batch is kept. Updates state.params in place.
void local_train(ClientState& state, int epochs, double lr, int batch_size);

struct ClientFeedback {
    double loss = 0.0;          // L_i of the received personalized model
    Vec grad_wrt_received;      // dL_i / d(theta_received), length d
    double test_accuracy = 0.0;
};

}  // namespace pfedgat
