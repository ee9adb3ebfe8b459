#pragma once

// Inner-loop arithmetic shared by every layer. Each kernel has a scalar
// reference implementation and an AVX2+FMA variant; the variant is picked
// once at runtime from CPUID and can be overridden with FLOWSENTINEL_SIMD
// (scalar | avx2 | auto) or set_isa().
//
// The two variants sum in different orders, so results agree to rounding
// error, not bit-for-bit. Within one process the choice is fixed, which is
// what training determinism relies on.

#include <cstddef>
#include <span>
#include <string_view>

namespace flowsentinel::kernels {

enum class Isa { Scalar, Avx2 };

std::string_view to_string(Isa isa);

template <class T>
struct Table {
    /// sum_i a[i] * b[i]
    T (*dot)(const T* a, const T* b, std::size_t n);
    /// y[i] += alpha * x[i]
    void (*axpy)(T alpha, const T* x, T* y, std::size_t n);
};

/// Best ISA this CPU supports (ignores overrides).
Isa detected_isa() noexcept;
bool isa_supported(Isa isa) noexcept;

Isa active_isa() noexcept;
/// Throws std::invalid_argument when the ISA is not available on this machine.
void set_isa(Isa isa);

template <class T>
const Table<T>& table_for(Isa isa);

template <class T>
const Table<T>& table() {
    return table_for<T>(active_isa());
}

// Scalar references, exported for equivalence tests.
namespace scalar {
float dot(const float* a, const float* b, std::size_t n);
double dot(const double* a, const double* b, std::size_t n);
void axpy(float alpha, const float* x, float* y, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
}  // namespace scalar

template <class T>
inline T dot(std::span<const T> a, std::span<const T> b) {
    return table<T>().dot(a.data(), b.data(), a.size());
}

template <class T>
inline void axpy(T alpha, std::span<const T> x, std::span<T> y) {
    table<T>().axpy(alpha, x.data(), y.data(), x.size());
}

/// y = W x, W row-major [rows x cols].
template <class T>
void gemv(const T* w, std::size_t rows, std::size_t cols, const T* x, T* y) {
    const auto& k = table<T>();
    for (std::size_t r = 0; r < rows; ++r) y[r] = k.dot(w + r * cols, x, cols);
}

/// out += W^T g, W row-major [rows x cols], g length rows, out length cols.
template <class T>
void gemv_t_acc(const T* w, std::size_t rows, std::size_t cols, const T* g, T* out) {
    const auto& k = table<T>();
    for (std::size_t r = 0; r < rows; ++r)
        if (g[r] != T{0}) k.axpy(g[r], w + r * cols, out, cols);
}

/// G += g x^T, G row-major [rows x cols].
template <class T>
void ger_acc(const T* g, std::size_t rows, const T* x, std::size_t cols, T* out) {
    const auto& k = table<T>();
    for (std::size_t r = 0; r < rows; ++r)
        if (g[r] != T{0}) k.axpy(g[r], x, out + r * cols, cols);
}

}  // namespace flowsentinel::kernels
