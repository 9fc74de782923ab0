#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "pfedgat/client.hpp"
#include "pfedgat/numerics.hpp"

// Server-side forward pass over the complete client graph: node features are
// the layer-normalized flattened client parameters; each attention head
// projects them with W, scores every ordered pair (self-edges included)
// with LeakyReLU(a . [z_i || z_j]) and row-softmaxes the scores; heads are
// averaged into the row-stochastic allocation matrix R; row i of R mixes all
// uploaded parameter vectors into client i's personalized model.

namespace pfedgat {

struct GatHead {
    Mat W;  // d' x d projection
    Vec a;  // length 2d' attention vector, [a_left || a_right]
};

struct GatParams {
    std::vector<GatHead> heads;
    double leaky_slope = 0.2;
    int d = 0;
    int d_prime = 0;

    void validate() const;
};

// W entries uniform in +-1/sqrt(d), a entries uniform in +-1/sqrt(2d'),
// one derived stream per head.
GatParams init_gat(int n_heads, int d, int d_prime, double slope, std::uint64_t seed);

struct NodeFeatures {
    Mat H;  // N x d, row i = layer_norm(flatten(theta_i))
};

struct AllocationMatrix {
    Mat R;  // N x N, rows sum to 1, entries in (0,1)
};

// Intermediates one head's backward pass needs.
struct HeadCache {
    Mat z;      // N x d' projected features
    Mat raw;    // N x N pre-activation scores a . [z_i || z_j]
    Mat alpha;  // N x N row-softmaxed attention
};

struct ForwardTape {
    NodeFeatures features;
    GatParams params;  // snapshot the forward pass ran with
    std::vector<HeadCache> heads;
};

NodeFeatures build_node_features(const std::vector<FlatParams>& uploads,
                                 double layer_norm_epsilon = 1e-5);

// One head's attention matrix plus its cache.
std::pair<Mat, HeadCache> attention_head(const NodeFeatures& features, const GatHead& head,
                                         double slope);

// Head-averaged allocation matrix with the full tape for the backward pass.
std::pair<AllocationMatrix, ForwardTape> allocation_matrix(const NodeFeatures& features,
                                                           const GatParams& gat);

// theta_i' = sum_j R_ij theta_j
std::vector<FlatParams> aggregate(const AllocationMatrix& alloc,
                                  const std::vector<FlatParams>& uploads);

}  // namespace pfedgat
