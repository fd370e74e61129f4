// Backend selection only; no intrinsics here.

#include "genprior/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

namespace genprior::kernels {
namespace {

bool cpu_has_avx2() {
#if defined(GENPRIOR_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

const KernelTable* table_for(Backend backend) {
    switch (backend) {
        case Backend::scalar:
            return &scalar_table();
        case Backend::avx2:
#if defined(GENPRIOR_HAVE_AVX2)
            return &avx2_table();
#else
            return nullptr;
#endif
    }
    return nullptr;
}

Backend initial_backend() {
    // GENPRIOR_KERNELS=scalar forces the reference path.
    if (const char* env = std::getenv("GENPRIOR_KERNELS")) {
        const std::string requested(env);
        if (requested == "scalar") return Backend::scalar;
        if (requested == "avx2" && backend_available(Backend::avx2)) return Backend::avx2;
    }
    return backend_available(Backend::avx2) ? Backend::avx2 : Backend::scalar;
}

std::atomic<Backend>& current() {
    static std::atomic<Backend> backend{initial_backend()};
    return backend;
}

}  // namespace

bool backend_available(Backend backend) {
    if (backend == Backend::scalar) return true;
    static const bool avx2 = cpu_has_avx2();
    return avx2 && table_for(Backend::avx2) != nullptr;
}

Backend active_backend() { return current().load(std::memory_order_relaxed); }

void set_backend(Backend backend) {
    if (!backend_available(backend)) {
        throw std::invalid_argument("kernel backend not available: " + std::string(backend_name(backend)));
    }
    current().store(backend, std::memory_order_relaxed);
}

std::string_view backend_name(Backend backend) {
    switch (backend) {
        case Backend::scalar:
            return "scalar";
        case Backend::avx2:
            return "avx2";
    }
    return "unknown";
}

const KernelTable& table() { return *table_for(active_backend()); }

}  // namespace genprior::kernels
