#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "flowsentinel/kernels.hpp"

namespace flowsentinel::kernels {

#if FLOWSENTINEL_HAVE_AVX2
namespace avx2 {
float dot(const float* a, const float* b, std::size_t n);
double dot(const double* a, const double* b, std::size_t n);
void axpy(float alpha, const float* x, float* y, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
}  // namespace avx2
#endif

namespace {

template <class T>
constexpr Table<T> scalar_table{
    static_cast<T (*)(const T*, const T*, std::size_t)>(&scalar::dot),
    static_cast<void (*)(T, const T*, T*, std::size_t)>(&scalar::axpy),
};

#if FLOWSENTINEL_HAVE_AVX2
template <class T>
constexpr Table<T> avx2_table{
    static_cast<T (*)(const T*, const T*, std::size_t)>(&avx2::dot),
    static_cast<void (*)(T, const T*, T*, std::size_t)>(&avx2::axpy),
};
#endif

Isa initial_isa() {
    const Isa best = detected_isa();
    const char* env = std::getenv("FLOWSENTINEL_SIMD");
    if (env == nullptr) return best;
    const std::string choice(env);
    if (choice == "scalar") return Isa::Scalar;
    if (choice == "avx2" && isa_supported(Isa::Avx2)) return Isa::Avx2;
    return best;
}

std::atomic<Isa>& active() {
    static std::atomic<Isa> isa{initial_isa()};
    return isa;
}

}  // namespace

std::string_view to_string(Isa isa) {
    switch (isa) {
        case Isa::Scalar: return "scalar";
        case Isa::Avx2: return "avx2";
    }
    return "unknown";
}

Isa detected_isa() noexcept {
#if FLOWSENTINEL_HAVE_AVX2
    __builtin_cpu_init();
    if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma")) return Isa::Avx2;
#endif
    return Isa::Scalar;
}

bool isa_supported(Isa isa) noexcept {
    if (isa == Isa::Scalar) return true;
    return detected_isa() == Isa::Avx2;
}

Isa active_isa() noexcept { return active().load(std::memory_order_relaxed); }

void set_isa(Isa isa) {
    if (!isa_supported(isa)) throw std::invalid_argument("ISA not supported on this CPU: " + std::string(to_string(isa)));
    active().store(isa, std::memory_order_relaxed);
}

template <class T>
const Table<T>& table_for(Isa isa) {
#if FLOWSENTINEL_HAVE_AVX2
    if (isa == Isa::Avx2) return avx2_table<T>;
#else
    (void)isa;
#endif
    return scalar_table<T>;
}

template const Table<float>& table_for<float>(Isa);
template const Table<double>& table_for<double>(Isa);

}  // namespace flowsentinel::kernels
