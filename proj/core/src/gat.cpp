#include "pfedgat/gat.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "pfedgat/rng.hpp"

namespace pfedgat {

namespace {

void require(bool ok, const std::string& msg) {
    if (!ok) throw std::invalid_argument(msg);
}

}  // namespace

void GatParams::validate() const {
    require(!heads.empty(), "gat: need at least one head");
    require(d >= 1 && d_prime >= 1, "gat: dimensions must be >= 1");
    require(leaky_slope > 0.0 && leaky_slope < 1.0, "gat: leaky_slope must lie in (0,1)");
    for (const GatHead& h : heads) {
        require(h.W.rows == d_prime && h.W.cols == d, "gat: head W must be d' x d");
        require(static_cast<int>(h.a.size()) == 2 * d_prime, "gat: head a must have length 2d'");
    }
}

GatParams init_gat(int n_heads, int d, int d_prime, double slope, std::uint64_t seed) {
    require(n_heads >= 1, "init_gat: need at least one head");
    require(d >= 1 && d_prime >= 1, "init_gat: dimensions must be >= 1");
    GatParams gat;
    gat.leaky_slope = slope;
    gat.d = d;
    gat.d_prime = d_prime;
    gat.heads.resize(n_heads);
    const double w_bound = 1.0 / std::sqrt(static_cast<double>(d));
    const double a_bound = 1.0 / std::sqrt(2.0 * d_prime);
    for (int k = 0; k < n_heads; ++k) {
        auto eng = make_engine(seed, seed_tag::kGatHead, static_cast<std::uint64_t>(k));
        std::uniform_real_distribution<double> w_uni(-w_bound, w_bound);
        std::uniform_real_distribution<double> a_uni(-a_bound, a_bound);
        GatHead& h = gat.heads[k];
        h.W = Mat(d_prime, d);
        for (double& v : h.W.data) v = w_uni(eng);
        h.a.resize(2 * static_cast<std::size_t>(d_prime));
        for (double& v : h.a) v = a_uni(eng);
    }
    gat.validate();
    return gat;
}

NodeFeatures build_node_features(const std::vector<FlatParams>& uploads,
                                 double layer_norm_epsilon) {
    require(!uploads.empty(), "build_node_features: no uploads");
    const std::size_t d = uploads[0].values.size();
    for (std::size_t i = 1; i < uploads.size(); ++i)
        require(uploads[i].values.size() == d,
                "build_node_features: upload " + std::to_string(i) + " has mixed dimension");
    NodeFeatures nf;
    nf.H = Mat(static_cast<int>(uploads.size()), static_cast<int>(d));
    for (std::size_t i = 0; i < uploads.size(); ++i) {
        const Vec h = layer_norm(uploads[i].values, layer_norm_epsilon);
        std::copy(h.begin(), h.end(), nf.H.row(static_cast<int>(i)).begin());
    }
    return nf;
}

std::pair<Mat, HeadCache> attention_head(const NodeFeatures& features, const GatHead& head,
                                         double slope) {
    const int n = features.H.rows;
    const int d_prime = head.W.rows;
    require(head.W.cols == features.H.cols, "attention_head: W width must match feature dim");
    require(static_cast<int>(head.a.size()) == 2 * d_prime,
            "attention_head: a must have length 2d'");

    HeadCache cache;
    cache.z = Mat(n, d_prime);
    for (int i = 0; i < n; ++i) {
        const Vec zi = matvec(head.W, features.H.row(i));
        std::copy(zi.begin(), zi.end(), cache.z.row(i).begin());
    }

    // raw(i,j) = a_left . z_i + a_right . z_j
    const std::span<const double> a_left(head.a.data(), d_prime);
    const std::span<const double> a_right(head.a.data() + d_prime, d_prime);
    Vec u(n), v(n);
    for (int i = 0; i < n; ++i) {
        u[i] = dot(a_left, cache.z.row(i));
        v[i] = dot(a_right, cache.z.row(i));
    }

    cache.raw = Mat(n, n);
    Mat alpha(n, n);
    for (int i = 0; i < n; ++i) {
        Vec scores(n);
        for (int j = 0; j < n; ++j) {
            cache.raw(i, j) = u[i] + v[j];
            scores[j] = leaky_relu(cache.raw(i, j), slope);
        }
        const Vec row = softmax_row(scores);
        std::copy(row.begin(), row.end(), alpha.row(i).begin());
    }
    cache.alpha = alpha;
    return {std::move(alpha), std::move(cache)};
}

std::pair<AllocationMatrix, ForwardTape> allocation_matrix(const NodeFeatures& features,
                                                           const GatParams& gat) {
    gat.validate();
    require(features.H.cols == gat.d, "allocation_matrix: feature dim does not match gat.d");
    const int n = features.H.rows;
    const int k_heads = static_cast<int>(gat.heads.size());

    ForwardTape tape;
    tape.features = features;
    tape.params = gat;
    tape.heads.reserve(k_heads);

    AllocationMatrix alloc;
    alloc.R = Mat(n, n);
    for (int k = 0; k < k_heads; ++k) {
        auto [alpha, cache] = attention_head(features, gat.heads[k], gat.leaky_slope);
        for (std::size_t idx = 0; idx < alloc.R.data.size(); ++idx)
            alloc.R.data[idx] += alpha.data[idx];
        tape.heads.push_back(std::move(cache));
    }
    for (double& v : alloc.R.data) v /= static_cast<double>(k_heads);
    return {std::move(alloc), std::move(tape)};
}

std::vector<FlatParams> aggregate(const AllocationMatrix& alloc,
                                  const std::vector<FlatParams>& uploads) {
    const int n = static_cast<int>(uploads.size());
    require(n >= 1, "aggregate: no uploads");
    require(alloc.R.rows == n && alloc.R.cols == n,
            "aggregate: R is " + std::to_string(alloc.R.rows) + "x" +
                std::to_string(alloc.R.cols) + " but there are " + std::to_string(n) +
                " uploads");
    const std::size_t d = uploads[0].values.size();
    for (const FlatParams& up : uploads)
        require(up.values.size() == d, "aggregate: mixed upload dimensions");

    std::vector<FlatParams> out(uploads.size());
    for (int i = 0; i < n; ++i) {
        out[i].spec = uploads[i].spec;
        out[i].values.assign(d, 0.0);
        for (int j = 0; j < n; ++j) axpy(out[i].values, uploads[j].values, alloc.R(i, j));
    }
    return out;
}

}  // namespace pfedgat
