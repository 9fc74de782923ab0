#include "pfedgat/gat_optimizer.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace pfedgat {

namespace {

void require(bool ok, const std::string& msg) {
    if (!ok) throw std::invalid_argument(msg);
}

}  // namespace

double total_loss(const std::vector<ClientFeedback>& feedback) {
    require(!feedback.empty(), "total_loss: empty feedback list");
    double total = 0.0;
    for (const ClientFeedback& fb : feedback) total += fb.loss;
    return total;
}

GatGradients backward(const ForwardTape& tape, const std::vector<FlatParams>& uploads,
                      const std::vector<ClientFeedback>& feedback) {
    const int n = tape.features.H.rows;
    const int d = tape.params.d;
    const int d_prime = tape.params.d_prime;
    const int k_heads = static_cast<int>(tape.params.heads.size());
    require(static_cast<int>(uploads.size()) == n && static_cast<int>(feedback.size()) == n,
            "backward: uploads/feedback count does not match the tape");
    require(static_cast<int>(tape.heads.size()) == k_heads, "backward: tape head count mismatch");
    for (int i = 0; i < n; ++i) {
        require(static_cast<int>(uploads[i].values.size()) == d,
                "backward: upload " + std::to_string(i) + " dimension mismatch");
        require(static_cast<int>(feedback[i].grad_wrt_received.size()) == d,
                "backward: feedback gradient of client " + std::to_string(i) +
                    " has wrong length");
        for (double g : feedback[i].grad_wrt_received)
            require(std::isfinite(g), "backward: non-finite feedback gradient from client " +
                                          std::to_string(i));
    }

    // dL/dR_ij = g_i . theta_j  (from theta_i' = sum_j R_ij theta_j)
    Mat d_alloc(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            d_alloc(i, j) = dot(feedback[i].grad_wrt_received, uploads[j].values);

    const double inv_heads = 1.0 / static_cast<double>(k_heads);
    const double slope = tape.params.leaky_slope;

    GatGradients grads;
    grads.heads.resize(k_heads);
    for (int k = 0; k < k_heads; ++k) {
        const HeadCache& cache = tape.heads[k];
        const GatHead& head = tape.params.heads[k];
        const std::span<const double> a_left(head.a.data(), d_prime);
        const std::span<const double> a_right(head.a.data() + d_prime, d_prime);

        // dL/dalpha = dL/dR / K, then softmax and LeakyReLU backward.
        Mat d_raw(n, n);
        for (int i = 0; i < n; ++i) {
            Vec d_alpha(n);
            for (int j = 0; j < n; ++j) d_alpha[j] = d_alloc(i, j) * inv_heads;
            const Vec d_score = softmax_backward_row(cache.alpha.row(i), d_alpha);
            for (int j = 0; j < n; ++j)
                d_raw(i, j) = d_score[j] * leaky_relu_grad(cache.raw(i, j), slope);
        }

        // raw(i,j) = a_left . z_i + a_right . z_j
        Vec du(n, 0.0), dv(n, 0.0);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                du[i] += d_raw(i, j);
                dv[j] += d_raw(i, j);
            }

        HeadGradient& hg = grads.heads[k];
        hg.da.assign(2 * static_cast<std::size_t>(d_prime), 0.0);
        std::span<double> da_left(hg.da.data(), d_prime);
        std::span<double> da_right(hg.da.data() + d_prime, d_prime);
        hg.dW = Mat(d_prime, d);
        for (int i = 0; i < n; ++i) {
            const auto z_i = cache.z.row(i);
            for (int p = 0; p < d_prime; ++p) {
                da_left[p] += du[i] * z_i[p];
                da_right[p] += dv[i] * z_i[p];
            }
            // dL/dz_i = du_i a_left + dv_i a_right; dL/dW += dz_i h_i^T
            Vec dz(d_prime);
            for (int p = 0; p < d_prime; ++p) dz[p] = du[i] * a_left[p] + dv[i] * a_right[p];
            add_outer(hg.dW, dz, tape.features.H.row(i));
        }
    }
    return grads;
}

void apply_update(GatParams& gat, const GatGradients& grads, double lr, double max_norm) {
    require(static_cast<int>(grads.heads.size()) == static_cast<int>(gat.heads.size()),
            "apply_update: head count mismatch");
    require(lr >= 0.0, "apply_update: negative learning rate");
    for (std::size_t k = 0; k < gat.heads.size(); ++k) {
        require(grads.heads[k].dW.rows == gat.heads[k].W.rows &&
                    grads.heads[k].dW.cols == gat.heads[k].W.cols &&
                    grads.heads[k].da.size() == gat.heads[k].a.size(),
                "apply_update: gradient shape mismatch in head " + std::to_string(k));
    }

    double scale = 1.0;
    if (max_norm > 0.0) {
        double sq = 0.0;
        for (const HeadGradient& hg : grads.heads) {
            for (double v : hg.dW.data) sq += v * v;
            for (double v : hg.da) sq += v * v;
        }
        const double norm = std::sqrt(sq);
        if (norm > max_norm) scale = max_norm / norm;
    }

    for (std::size_t k = 0; k < gat.heads.size(); ++k) {
        GatHead& h = gat.heads[k];
        const HeadGradient& hg = grads.heads[k];
        for (std::size_t idx = 0; idx < h.W.data.size(); ++idx)
            h.W.data[idx] -= lr * scale * hg.dW.data[idx];
        for (std::size_t idx = 0; idx < h.a.size(); ++idx) h.a[idx] -= lr * scale * hg.da[idx];
    }
}

}  // namespace pfedgat
