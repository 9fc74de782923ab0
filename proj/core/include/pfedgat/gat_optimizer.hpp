#pragma once

#include <vector>

#include "pfedgat/gat.hpp"

// Server-side backward pass: the summed client feedback losses are
// backpropagated through aggregation, head averaging, the row softmax, the
// LeakyReLU scores and the feature projection to yield dL/dW and dL/da per
// head, applied as one SGD step per round. Node features are treated as
// constants: no gradient flows back into client parameters.

namespace pfedgat {

struct HeadGradient {
    Mat dW;  // d' x d
    Vec da;  // 2d'
};

struct GatGradients {
    std::vector<HeadGradient> heads;
};

// L = sum_i L_i
double total_loss(const std::vector<ClientFeedback>& feedback);

// Exact chain rule through the forward tape. feedback[i].grad_wrt_received
// must hold dL_i/d(theta_i'), length d; non-finite entries are rejected with
// the offending client named.
GatGradients backward(const ForwardTape& tape, const std::vector<FlatParams>& uploads,
                      const std::vector<ClientFeedback>& feedback);

// One SGD step: W -= lr dW, a -= lr da per head. When max_norm > 0 the
// gradient stack is rescaled so its global L2 norm does not exceed max_norm.
void apply_update(GatParams& gat, const GatGradients& grads, double lr, double max_norm = 0.0);

}  // namespace pfedgat
