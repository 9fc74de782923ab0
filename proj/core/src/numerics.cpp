#include "pfedgat/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pfedgat {

Mat Mat::identity(int n) {
    Mat m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Vec layer_norm(std::span<const double> v, double epsilon) {
    if (v.empty()) throw std::invalid_argument("layer_norm: empty vector");
    if (epsilon < 0.0) throw std::invalid_argument("layer_norm: negative epsilon");
    const double m = mean(v);
    const double var = population_variance(v);
    const double inv_sd = 1.0 / std::sqrt(var + epsilon);
    Vec out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = (v[i] - m) * inv_sd;
    return out;
}

double leaky_relu(double x, double slope) {
    return x >= 0.0 ? x : slope * x;
}

double leaky_relu_grad(double x, double slope) {
    return x >= 0.0 ? 1.0 : slope;
}

Vec softmax_row(std::span<const double> scores) {
    if (scores.empty()) throw std::invalid_argument("softmax_row: empty input");
    double mx = scores[0];
    for (double s : scores) {
        if (std::isnan(s)) throw std::invalid_argument("softmax_row: input contains NaN");
        mx = std::max(mx, s);
    }
    Vec out(scores.size());
    double total = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        out[i] = std::exp(scores[i] - mx);
        total += out[i];
    }
    for (double& x : out) x /= total;
    return out;
}

Vec softmax_backward_row(std::span<const double> alpha, std::span<const double> dalpha) {
    if (alpha.size() != dalpha.size())
        throw std::invalid_argument("softmax_backward_row: size mismatch");
    double inner = 0.0;
    for (std::size_t i = 0; i < alpha.size(); ++i) inner += dalpha[i] * alpha[i];
    Vec out(alpha.size());
    for (std::size_t i = 0; i < alpha.size(); ++i) out[i] = alpha[i] * (dalpha[i] - inner);
    return out;
}

Vec matvec(const Mat& m, std::span<const double> v) {
    if (static_cast<std::size_t>(m.cols) != v.size())
        throw std::invalid_argument("matvec: dimension mismatch");
    Vec out(static_cast<std::size_t>(m.rows), 0.0);
    for (int r = 0; r < m.rows; ++r) {
        const double* row = m.data.data() + static_cast<std::size_t>(r) * m.cols;
        double acc = 0.0;
        for (int c = 0; c < m.cols; ++c) acc += row[c] * v[c];
        out[r] = acc;
    }
    return out;
}

Vec matvec_transposed(const Mat& m, std::span<const double> v) {
    if (static_cast<std::size_t>(m.rows) != v.size())
        throw std::invalid_argument("matvec_transposed: dimension mismatch");
    Vec out(static_cast<std::size_t>(m.cols), 0.0);
    for (int r = 0; r < m.rows; ++r) {
        const double* row = m.data.data() + static_cast<std::size_t>(r) * m.cols;
        const double s = v[r];
        for (int c = 0; c < m.cols; ++c) out[c] += s * row[c];
    }
    return out;
}

void add_outer(Mat& m, std::span<const double> u, std::span<const double> v, double scale) {
    if (static_cast<std::size_t>(m.rows) != u.size() || static_cast<std::size_t>(m.cols) != v.size())
        throw std::invalid_argument("add_outer: dimension mismatch");
    for (int r = 0; r < m.rows; ++r) {
        double* row = m.data.data() + static_cast<std::size_t>(r) * m.cols;
        const double s = scale * u[r];
        for (int c = 0; c < m.cols; ++c) row[c] += s * v[c];
    }
}

double dot(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw std::invalid_argument("dot: size mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

void axpy(Vec& y, std::span<const double> x, double scale) {
    if (y.size() != x.size()) throw std::invalid_argument("axpy: size mismatch");
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += scale * x[i];
}

double mean(std::span<const double> v) {
    if (v.empty()) throw std::invalid_argument("mean: empty vector");
    double acc = 0.0;
    for (double x : v) acc += x;
    return acc / static_cast<double>(v.size());
}

double population_variance(std::span<const double> v) {
    const double m = mean(v);
    double acc = 0.0;
    for (double x : v) acc += (x - m) * (x - m);
    return acc / static_cast<double>(v.size());
}

}  // namespace pfedgat
