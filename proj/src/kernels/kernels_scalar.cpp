// Scalar reference kernels. These define the semantics the SIMD variants are tested against.

#include "genprior/kernels.hpp"

namespace genprior::kernels {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) sum += a[i] * b[i];
    return sum;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void gemv_scalar(const double* m, std::size_t rows, std::size_t cols, const double* x, double* y) {
    for (std::size_t r = 0; r < rows; ++r) y[r] = dot_scalar(m + r * cols, x, cols);
}

void gemv_t_scalar(const double* m, std::size_t rows, std::size_t cols, const double* x, double* y) {
    for (std::size_t c = 0; c < cols; ++c) y[c] = 0.0;
    for (std::size_t r = 0; r < rows; ++r) {
        if (x[r] != 0.0) axpy_scalar(x[r], m + r * cols, y, cols);
    }
}

void weighted_gram_scalar(const double* m, std::size_t rows, std::size_t cols, const double* weights,
                          double* out) {
    for (std::size_t r = 0; r < rows; ++r) {
        const double w = weights[r];
        if (w == 0.0) continue;
        const double* row = m + r * cols;
        for (std::size_t i = 0; i < cols; ++i) {
            const double s = w * row[i];
            if (s != 0.0) axpy_scalar(s, row, out + i * cols, cols);
        }
    }
}

void relu_scalar(double* v, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) v[i] = v[i] > 0.0 ? v[i] : 0.0;
}

}  // namespace

const KernelTable& scalar_table() {
    static const KernelTable table{dot_scalar,    axpy_scalar,          gemv_scalar,
                                   gemv_t_scalar, weighted_gram_scalar, relu_scalar};
    return table;
}

}  // namespace genprior::kernels
