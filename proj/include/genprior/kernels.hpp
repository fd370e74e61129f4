#pragma once

// Data-parallel inner loops. Every routine has a scalar reference version and,
// where the target supports it, an AVX2/FMA version picked at runtime. The
// variants agree up to floating-point reassociation of the reductions.

#include <cstddef>
#include <span>
#include <string_view>

namespace genprior::kernels {

enum class Backend { scalar, avx2 };

struct KernelTable {
    double (*dot)(const double* a, const double* b, std::size_t n);
    // y += alpha * x
    void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
    // y = M x, M row-major rows x cols
    void (*gemv)(const double* m, std::size_t rows, std::size_t cols, const double* x, double* y);
    // y = M^T x
    void (*gemv_t)(const double* m, std::size_t rows, std::size_t cols, const double* x, double* y);
    // out (cols x cols, row-major) += sum_i weight_i * m_i m_i^T; rows with zero weight are skipped
    void (*weighted_gram)(const double* m, std::size_t rows, std::size_t cols, const double* weights,
                          double* out);
    void (*relu)(double* v, std::size_t n);
};

const KernelTable& scalar_table();
#if defined(GENPRIOR_HAVE_AVX2)
const KernelTable& avx2_table();
#endif

bool backend_available(Backend backend);
Backend active_backend();
// Throws std::invalid_argument when the backend is not compiled in or the CPU lacks it.
void set_backend(Backend backend);
std::string_view backend_name(Backend backend);
const KernelTable& table();

/// Swaps the active backend for the lifetime of the guard (tests only; not thread-safe
/// with respect to concurrent kernel calls that expect a specific backend).
class ScopedBackend {
public:
    explicit ScopedBackend(Backend backend) : previous_(active_backend()) { set_backend(backend); }
    ~ScopedBackend() { set_backend(previous_); }
    ScopedBackend(const ScopedBackend&) = delete;
    ScopedBackend& operator=(const ScopedBackend&) = delete;

private:
    Backend previous_;
};

inline double dot(std::span<const double> a, std::span<const double> b) {
    return table().dot(a.data(), b.data(), a.size());
}

inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
    table().axpy(alpha, x.data(), y.data(), x.size());
}

inline void relu(std::span<double> v) { table().relu(v.data(), v.size()); }

}  // namespace genprior::kernels
