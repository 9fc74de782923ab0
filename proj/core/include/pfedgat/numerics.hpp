#pragma once

#include <span>
#include <vector>

// Minimal dense linear algebra and activation primitives. Everything is a
// pure function over 64-bit reals; callers own all storage. Dimension or
// domain violations throw std::invalid_argument.

namespace pfedgat {

using Vec = std::vector<double>;

// Row-major dense matrix.
struct Mat {
    int rows = 0;
    int cols = 0;
    Vec data;

    Mat() = default;
    Mat(int r, int c, double fill = 0.0)
        : rows(r), cols(c), data(static_cast<std::size_t>(r) * static_cast<std::size_t>(c), fill) {}

    double& operator()(int r, int c) {
        return data[static_cast<std::size_t>(r) * cols + c];
    }
    double operator()(int r, int c) const {
        return data[static_cast<std::size_t>(r) * cols + c];
    }

    std::span<double> row(int r) {
        return {data.data() + static_cast<std::size_t>(r) * cols, static_cast<std::size_t>(cols)};
    }
    std::span<const double> row(int r) const {
        return {data.data() + static_cast<std::size_t>(r) * cols, static_cast<std::size_t>(cols)};
    }

    static Mat identity(int n);
};

// (x - mean) / sqrt(population_variance + epsilon), no learned affine.
Vec layer_norm(std::span<const double> v, double epsilon = 1e-5);

// x for x >= 0, slope * x otherwise.
double leaky_relu(double x, double slope);

// Derivative of leaky_relu; the kink at 0 takes the positive branch.
double leaky_relu_grad(double x, double slope);

// Max-shifted softmax. Entries strictly positive, summing to 1.
Vec softmax_row(std::span<const double> scores);

// Given alpha = softmax(e) and an upstream gradient d/d(alpha), returns
// d/d(e) for the same row: alpha_j * (g_j - sum_m g_m alpha_m).
Vec softmax_backward_row(std::span<const double> alpha, std::span<const double> dalpha);

Vec matvec(const Mat& m, std::span<const double> v);

// m^T v (column-space product without materializing the transpose).
Vec matvec_transposed(const Mat& m, std::span<const double> v);

// m += scale * u v^T
void add_outer(Mat& m, std::span<const double> u, std::span<const double> v, double scale = 1.0);

double dot(std::span<const double> a, std::span<const double> b);

// y += scale * x
void axpy(Vec& y, std::span<const double> x, double scale);

double mean(std::span<const double> v);
double population_variance(std::span<const double> v);

}  // namespace pfedgat
