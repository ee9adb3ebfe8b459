#pragma once

#include <cmath>
#include <span>

#include "flowsentinel/tensor.hpp"

namespace flowsentinel {

template <class T>
inline T sigmoid(T x) {
    // Split on sign so exp() never overflows.
    if (x >= T{0}) return T{1} / (T{1} + std::exp(-x));
    const T e = std::exp(x);
    return e / (T{1} + e);
}

template <class T>
inline T relu(T x) {
    return x > T{0} ? x : T{0};
}

template <class T>
Tensor<T> relu(const Tensor<T>& x);
template <class T>
Tensor<T> sigmoid(const Tensor<T>& x);
template <class T>
Tensor<T> tanh(const Tensor<T>& x);

/// Softmax over the final axis, with max subtraction.
template <class T>
Tensor<T> softmax(const Tensor<T>& x);
template <class T>
void softmax_inplace(std::span<T> row);

// Backward forms. relu takes the forward input; the others take the forward
// output, which is all their derivatives need.
template <class T>
Tensor<T> relu_backward(const Tensor<T>& grad_out, const Tensor<T>& input);
template <class T>
Tensor<T> sigmoid_backward(const Tensor<T>& grad_out, const Tensor<T>& output);
template <class T>
Tensor<T> tanh_backward(const Tensor<T>& grad_out, const Tensor<T>& output);
/// Jacobian-vector product: out_i = y_i * (g_i - sum_j g_j y_j), per final-axis row.
template <class T>
Tensor<T> softmax_backward(const Tensor<T>& grad_out, const Tensor<T>& output);

}  // namespace flowsentinel
