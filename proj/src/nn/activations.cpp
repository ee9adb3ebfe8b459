#include "flowsentinel/activations.hpp"

#include <algorithm>

namespace flowsentinel {

namespace {

template <class T, class F>
Tensor<T> map(const Tensor<T>& x, F f) {
    Tensor<T> out(x.shape());
    auto src = x.data();
    auto dst = out.data();
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] = f(src[i]);
    return out;
}

template <class T>
std::size_t last_dim(const Tensor<T>& x) {
    return x.shape().back();
}

}  // namespace

template <class T>
Tensor<T> relu(const Tensor<T>& x) {
    return map(x, [](T v) { return relu(v); });
}

template <class T>
Tensor<T> sigmoid(const Tensor<T>& x) {
    return map(x, [](T v) { return sigmoid(v); });
}

template <class T>
Tensor<T> tanh(const Tensor<T>& x) {
    return map(x, [](T v) { return std::tanh(v); });
}

template <class T>
void softmax_inplace(std::span<T> row) {
    const T peak = *std::max_element(row.begin(), row.end());
    T total{0};
    for (auto& v : row) {
        v = std::exp(v - peak);
        total += v;
    }
    for (auto& v : row) v /= total;
}

template <class T>
Tensor<T> softmax(const Tensor<T>& x) {
    Tensor<T> out = x;
    const std::size_t width = last_dim(x);
    auto data = out.data();
    for (std::size_t start = 0; start < data.size(); start += width) softmax_inplace(data.subspan(start, width));
    return out;
}

template <class T>
Tensor<T> relu_backward(const Tensor<T>& grad_out, const Tensor<T>& input) {
    require_shape(grad_out.same_shape(input), "relu_backward: gradient and input shapes differ");
    Tensor<T> out(input.shape());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = input[i] > T{0} ? grad_out[i] : T{0};
    return out;
}

template <class T>
Tensor<T> sigmoid_backward(const Tensor<T>& grad_out, const Tensor<T>& output) {
    require_shape(grad_out.same_shape(output), "sigmoid_backward: gradient and output shapes differ");
    Tensor<T> out(output.shape());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = grad_out[i] * output[i] * (T{1} - output[i]);
    return out;
}

template <class T>
Tensor<T> tanh_backward(const Tensor<T>& grad_out, const Tensor<T>& output) {
    require_shape(grad_out.same_shape(output), "tanh_backward: gradient and output shapes differ");
    Tensor<T> out(output.shape());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = grad_out[i] * (T{1} - output[i] * output[i]);
    return out;
}

template <class T>
Tensor<T> softmax_backward(const Tensor<T>& grad_out, const Tensor<T>& output) {
    require_shape(grad_out.same_shape(output), "softmax_backward: gradient and output shapes differ");
    Tensor<T> out(output.shape());
    const std::size_t width = last_dim(output);
    for (std::size_t start = 0; start < out.size(); start += width) {
        T inner{0};
        for (std::size_t j = 0; j < width; ++j) inner += grad_out[start + j] * output[start + j];
        for (std::size_t j = 0; j < width; ++j)
            out[start + j] = output[start + j] * (grad_out[start + j] - inner);
    }
    return out;
}

#define FLOWSENTINEL_INSTANTIATE(T)                                                  \
    template Tensor<T> relu(const Tensor<T>&);                                       \
    template Tensor<T> sigmoid(const Tensor<T>&);                                    \
    template Tensor<T> tanh(const Tensor<T>&);                                       \
    template Tensor<T> softmax(const Tensor<T>&);                                    \
    template void softmax_inplace(std::span<T>);                                     \
    template Tensor<T> relu_backward(const Tensor<T>&, const Tensor<T>&);            \
    template Tensor<T> sigmoid_backward(const Tensor<T>&, const Tensor<T>&);         \
    template Tensor<T> tanh_backward(const Tensor<T>&, const Tensor<T>&);            \
    template Tensor<T> softmax_backward(const Tensor<T>&, const Tensor<T>&);

FLOWSENTINEL_INSTANTIATE(float)
FLOWSENTINEL_INSTANTIATE(double)

#undef FLOWSENTINEL_INSTANTIATE

}  // namespace flowsentinel
