#include "pfedgat/client.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "pfedgat/rng.hpp"

namespace pfedgat {

namespace {

void require(bool ok, const std::string& msg) {
    if (!ok) throw std::invalid_argument(msg);
}

// Offset of layer l's weight block; bias follows the weights.
struct LayerView {
    const double* w;  // out x in, row-major
    const double* b;  // out
    int in, out;
};

LayerView layer_view(const FlatParams& p, int l, int offset) {
    LayerView v;
    v.in = p.spec.layer_widths[l];
    v.out = p.spec.layer_widths[l + 1];
    v.w = p.values.data() + offset;
    v.b = v.w + static_cast<std::size_t>(v.in) * v.out;
    return v;
}

int layer_size(const MlpSpec& spec, int l) {
    return spec.layer_widths[l + 1] * (spec.layer_widths[l] + 1);
}

// log(sum(exp(z))) with max shift.
double log_sum_exp(const Vec& z) {
    double mx = z[0];
    for (double v : z) mx = std::max(mx, v);
    double acc = 0.0;
    for (double v : z) acc += std::exp(v - mx);
    return mx + std::log(acc);
}

struct SampleTape {
    std::vector<Vec> activations;      // a_0 = x, ..., a_L (post-activation)
    std::vector<Vec> pre_activations;  // z_1 .. z_L
};

Vec forward_sample(const FlatParams& p, const Vec& x, SampleTape* tape) {
    const int layers = p.spec.num_layers();
    Vec a = x;
    if (tape) tape->activations.push_back(a);
    int offset = 0;
    for (int l = 0; l < layers; ++l) {
        const LayerView lv = layer_view(p, l, offset);
        Vec z(lv.out);
        for (int o = 0; o < lv.out; ++o) {
            const double* wrow = lv.w + static_cast<std::size_t>(o) * lv.in;
            double acc = lv.b[o];
            for (int i = 0; i < lv.in; ++i) acc += wrow[i] * a[i];
            z[o] = acc;
        }
        if (tape) tape->pre_activations.push_back(z);
        if (l + 1 < layers) {
            for (double& v : z) v = leaky_relu(v, p.spec.hidden_slope);
        }
        a = std::move(z);
        if (tape) tape->activations.push_back(a);
        offset += layer_size(p.spec, l);
    }
    return a;  // logits
}

void check_batch(const FlatParams& p, const Dataset& ds, std::span<const int> batch,
                 const char* who) {
    p.spec.validate();
    require(!batch.empty(), std::string(who) + ": empty batch");
    require(static_cast<int>(p.values.size()) == p.spec.param_count(),
            std::string(who) + ": parameter vector length does not match spec");
    require(ds.feature_dim() == p.spec.layer_widths.front(),
            std::string(who) + ": feature dimension mismatch");
    require(ds.num_classes == p.spec.layer_widths.back(),
            std::string(who) + ": class count mismatch");
    for (int idx : batch)
        require(idx >= 0 && idx < ds.size(), std::string(who) + ": index out of range");
}

}  // namespace

int MlpSpec::param_count() const {
    int total = 0;
    for (int l = 0; l + 1 < static_cast<int>(layer_widths.size()); ++l)
        total += layer_widths[l + 1] * (layer_widths[l] + 1);
    return total;
}

void MlpSpec::validate() const {
    require(layer_widths.size() >= 2, "mlp: need at least input and output widths");
    for (int w : layer_widths) require(w >= 1, "mlp: layer widths must be >= 1");
    require(hidden_slope > 0.0 && hidden_slope < 1.0, "mlp: hidden_slope must lie in (0,1)");
}

FlatParams init_params(const MlpSpec& spec, std::uint64_t seed) {
    spec.validate();
    FlatParams p;
    p.spec = spec;
    p.values.assign(spec.param_count(), 0.0);
    auto eng = make_engine(seed, seed_tag::kClientInit);
    int offset = 0;
    for (int l = 0; l < spec.num_layers(); ++l) {
        const int in = spec.layer_widths[l], out = spec.layer_widths[l + 1];
        const double bound = std::sqrt(6.0 / (in + out));
        std::uniform_real_distribution<double> uni(-bound, bound);
        for (int k = 0; k < in * out; ++k) p.values[offset + k] = uni(eng);
        offset += layer_size(spec, l);  // biases stay zero
    }
    return p;
}

ForwardResult forward_loss(const FlatParams& params, const Dataset& ds,
                           std::span<const int> batch) {
    check_batch(params, ds, batch, "forward_loss");
    const int classes = ds.num_classes;
    ForwardResult res;
    res.probs = Mat(static_cast<int>(batch.size()), classes);
    double total = 0.0;
    for (std::size_t s = 0; s < batch.size(); ++s) {
        const Vec logits = forward_sample(params, ds.features[batch[s]], nullptr);
        total += log_sum_exp(logits) - logits[ds.labels[batch[s]]];
        const Vec probs = softmax_row(logits);
        std::copy(probs.begin(), probs.end(), res.probs.row(s).begin());
    }
    res.loss = total / static_cast<double>(batch.size());
    return res;
}

std::pair<double, Vec> batch_loss_gradient(const FlatParams& params, const Dataset& ds,
                                           std::span<const int> batch) {
    check_batch(params, ds, batch, "batch_loss_gradient");
    const int layers = params.spec.num_layers();
    const double inv_batch = 1.0 / static_cast<double>(batch.size());

    Vec grad(params.values.size(), 0.0);
    std::vector<int> offsets(layers, 0);
    for (int l = 1; l < layers; ++l) offsets[l] = offsets[l - 1] + layer_size(params.spec, l - 1);

    double total = 0.0;
    for (int idx : batch) {
        SampleTape tape;
        const Vec logits = forward_sample(params, ds.features[idx], &tape);
        total += log_sum_exp(logits) - logits[ds.labels[idx]];

        // dL/dz_L = (softmax - onehot) / batch
        Vec dz = softmax_row(logits);
        dz[ds.labels[idx]] -= 1.0;
        for (double& v : dz) v *= inv_batch;

        for (int l = layers - 1; l >= 0; --l) {
            const LayerView lv = layer_view(params, l, offsets[l]);
            const Vec& a_prev = tape.activations[l];
            double* gw = grad.data() + offsets[l];
            double* gb = gw + static_cast<std::size_t>(lv.in) * lv.out;
            Vec da_prev(lv.in, 0.0);
            for (int o = 0; o < lv.out; ++o) {
                double* gwrow = gw + static_cast<std::size_t>(o) * lv.in;
                const double* wrow = lv.w + static_cast<std::size_t>(o) * lv.in;
                const double g = dz[o];
                gb[o] += g;
                for (int i = 0; i < lv.in; ++i) {
                    gwrow[i] += g * a_prev[i];
                    da_prev[i] += g * wrow[i];
                }
            }
            if (l > 0) {
                const Vec& z_prev = tape.pre_activations[l - 1];
                dz.resize(da_prev.size());
                for (std::size_t i = 0; i < da_prev.size(); ++i)
                    dz[i] = da_prev[i] * leaky_relu_grad(z_prev[i], params.spec.hidden_slope);
            }
        }
    }
    return {total * inv_batch, std::move(grad)};
}

EvalResult evaluate(const FlatParams& params, const Dataset& ds, std::span<const int> view) {
    check_batch(params, ds, view, "evaluate");
    double total = 0.0;
    int correct = 0;
    for (int idx : view) {
        const Vec logits = forward_sample(params, ds.features[idx], nullptr);
        total += log_sum_exp(logits) - logits[ds.labels[idx]];
        int best = 0;
        for (int c = 1; c < static_cast<int>(logits.size()); ++c)
            if (logits[c] > logits[best]) best = c;
        if (best == ds.labels[idx]) ++correct;
    }
    return {total / static_cast<double>(view.size()),
            static_cast<double>(correct) / static_cast<double>(view.size())};
}

Vec loss_gradient_wrt_params(const FlatParams& params, const Dataset& ds,
                             std::span<const int> view) {
    return batch_loss_gradient(params, ds, view).second;
}

void local_train(ClientState& state, int epochs, double lr, int batch_size) {
    require(state.data != nullptr, "local_train: client has no dataset");
    require(!state.train_idx.empty(), "local_train: empty training set");
    require(epochs >= 0, "local_train: negative epoch count");
    require(lr > 0.0, "local_train: learning rate must be positive");
    require(batch_size >= 1, "local_train: batch_size must be >= 1");

    std::vector<int> order = state.train_idx;
    for (int e = 0; e < epochs; ++e) {
        std::shuffle(order.begin(), order.end(), state.rng);
        for (std::size_t start = 0; start < order.size(); start += batch_size) {
            const std::size_t stop = std::min(order.size(), start + batch_size);
            auto [loss, grad] = batch_loss_gradient(
                state.params, *state.data,
                std::span<const int>(order.data() + start, stop - start));
            (void)loss;
            axpy(state.params.values, grad, -lr);
        }
    }
}

}  // namespace pfedgat
