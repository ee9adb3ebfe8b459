#include "flowsentinel/layers.hpp"

#include <string>

#include "flowsentinel/activations.hpp"
#include "flowsentinel/kernels.hpp"

namespace flowsentinel {

namespace {

void require_cache(bool present, const char* layer) {
    if (!present) fail(ErrorKind::MissingCache, std::string(layer) + ": backward called without a cached forward pass");
}

// col[t][i*K + k] = input[i][t + k]
template <class T>
void im2col(const Tensor<T>& input, std::size_t kernel, std::size_t out_len, std::vector<T>& cols) {
    const std::size_t channels = input.dim(0);
    const std::size_t width = channels * kernel;
    cols.resize(out_len * width);
    for (std::size_t t = 0; t < out_len; ++t)
        for (std::size_t i = 0; i < channels; ++i)
            for (std::size_t k = 0; k < kernel; ++k) cols[t * width + i * kernel + k] = input(i, t + k);
}

template <class T>
void check_conv_shapes(const Tensor<T>& input, const Tensor<T>& weights, const Tensor<T>& bias) {
    require_shape(input.rank() == 2, "conv1d: input must be [C_in x L], got " + shape_string(input.shape()));
    require_shape(weights.rank() == 3, "conv1d: weights must be [C_out x C_in x K], got " + shape_string(weights.shape()));
    require_shape(bias.rank() == 1 && bias.dim(0) == weights.dim(0), "conv1d: bias length must equal C_out");
    require_shape(input.dim(0) == weights.dim(1),
                  "conv1d: input has " + std::to_string(input.dim(0)) + " channels, weights expect " +
                      std::to_string(weights.dim(1)));
    require_shape(input.dim(1) >= weights.dim(2),
                  "conv1d: length " + std::to_string(input.dim(1)) + " shorter than kernel " + std::to_string(weights.dim(2)));
}

template <class T>
Tensor<T> conv_from_columns(const std::vector<T>& cols, const Tensor<T>& weights, const Tensor<T>& bias,
                            std::size_t out_len) {
    const std::size_t out_channels = weights.dim(0);
    const std::size_t width = weights.dim(1) * weights.dim(2);
    const auto& k = kernels::table<T>();
    Tensor<T> out({out_channels, out_len});
    for (std::size_t c = 0; c < out_channels; ++c) {
        const T* w = weights.data().data() + c * width;
        for (std::size_t t = 0; t < out_len; ++t) out(c, t) = bias[c] + k.dot(w, cols.data() + t * width, width);
    }
    return out;
}

}  // namespace

void validate_dropout_rate(double rate) {
    if (!(rate >= 0.0 && rate < 1.0)) fail(ErrorKind::InvalidRate, "dropout rate must be in [0, 1), got " + std::to_string(rate));
}

template <class T>
Tensor<T> conv1d_forward(const Tensor<T>& input, const Tensor<T>& weights, const Tensor<T>& bias) {
    check_conv_shapes(input, weights, bias);
    const std::size_t out_len = input.dim(1) - weights.dim(2) + 1;
    std::vector<T> cols;
    im2col(input, weights.dim(2), out_len, cols);
    return conv_from_columns(cols, weights, bias, out_len);
}

template <class T>
Tensor<T> maxpool1d_forward(const Tensor<T>& input, std::size_t pool, std::vector<std::size_t>* argmax) {
    require_shape(input.rank() == 2, "maxpool1d: input must be [C x L], got " + shape_string(input.shape()));
    require_shape(pool >= 1 && input.dim(1) >= pool,
                  "maxpool1d: length " + std::to_string(input.dim(1)) + " shorter than pool " + std::to_string(pool));
    const std::size_t channels = input.dim(0);
    const std::size_t length = input.dim(1);
    const std::size_t out_len = length / pool;
    Tensor<T> out({channels, out_len});
    if (argmax) argmax->assign(channels * out_len, 0);
    for (std::size_t c = 0; c < channels; ++c) {
        for (std::size_t t = 0; t < out_len; ++t) {
            std::size_t best = t * pool;
            for (std::size_t j = best + 1; j < (t + 1) * pool; ++j)
                if (input(c, j) > input(c, best)) best = j;
            out(c, t) = input(c, best);
            if (argmax) (*argmax)[c * out_len + t] = c * length + best;
        }
    }
    return out;
}

template <class T>
Tensor<T> dense_forward(const Tensor<T>& input, const Tensor<T>& weights, const Tensor<T>& bias) {
    require_shape(input.rank() == 1, "dense: input must be rank 1, got " + shape_string(input.shape()));
    require_shape(weights.rank() == 2 && weights.dim(1) == input.dim(0),
                  "dense: weights " + shape_string(weights.shape()) + " incompatible with input " + shape_string(input.shape()));
    require_shape(bias.rank() == 1 && bias.dim(0) == weights.dim(0), "dense: bias length must equal output size");
    const std::size_t rows = weights.dim(0);
    Tensor<T> out({rows});
    kernels::gemv(weights.data().data(), rows, weights.dim(1), input.data().data(), out.data().data());
    for (std::size_t r = 0; r < rows; ++r) out[r] += bias[r];
    return out;
}

template <class T>
Tensor<T> dropout(const Tensor<T>& input, double rate, Rng& rng, bool training, std::vector<T>* mask) {
    validate_dropout_rate(rate);
    if (!training || rate == 0.0) {
        if (mask) mask->assign(input.size(), T{1});
        return input;
    }
    const T scale = static_cast<T>(1.0 / (1.0 - rate));
    Tensor<T> out(input.shape());
    if (mask) mask->resize(input.size());
    for (std::size_t i = 0; i < input.size(); ++i) {
        const T m = rng.uniform() < rate ? T{0} : scale;
        out[i] = input[i] * m;
        if (mask) (*mask)[i] = m;
    }
    return out;
}

// ---- Conv1d -------------------------------------------------------------

template <class T>
Conv1d<T>::Conv1d(std::size_t in_channels, std::size_t out_channels, std::size_t kernel)
    : weight({out_channels, in_channels, kernel}),
      bias({out_channels}),
      in_channels_(in_channels),
      out_channels_(out_channels),
      kernel_(kernel) {}

template <class T>
void Conv1d<T>::init(Rng& rng) {
    glorot_uniform(weight.value, in_channels_ * kernel_, out_channels_ * kernel_, rng);
    bias.value.zero();
}

template <class T>
std::size_t Conv1d<T>::output_length(std::size_t length) const {
    require_shape(length >= kernel_, "conv1d: length shorter than kernel");
    return length - kernel_ + 1;
}

template <class T>
Tensor<T> Conv1d<T>::forward(const Tensor<T>& input) {
    check_conv_shapes(input, weight.value, bias.value);
    const std::size_t out_len = input.dim(1) - kernel_ + 1;
    im2col(input, kernel_, out_len, columns_);
    input_ = input;
    return conv_from_columns(columns_, weight.value, bias.value, out_len);
}

template <class T>
Tensor<T> Conv1d<T>::backward(const Tensor<T>& grad_out) {
    require_cache(has_cache(), "conv1d");
    const Tensor<T>& input = *input_;
    const std::size_t out_len = input.dim(1) - kernel_ + 1;
    require_shape(grad_out.shape() == Shape{out_channels_, out_len},
                  "conv1d backward: expected gradient " + shape_string({out_channels_, out_len}) + ", got " +
                      shape_string(grad_out.shape()));
    const std::size_t width = in_channels_ * kernel_;
    const auto& k = kernels::table<T>();

    std::vector<T> grad_cols(out_len * width, T{0});
    T* wgrad = weight.grad.data().data();
    const T* w = weight.value.data().data();
    for (std::size_t c = 0; c < out_channels_; ++c) {
        T bias_acc{0};
        for (std::size_t t = 0; t < out_len; ++t) {
            const T g = grad_out(c, t);
            bias_acc += g;
            if (g == T{0}) continue;
            k.axpy(g, columns_.data() + t * width, wgrad + c * width, width);
            k.axpy(g, w + c * width, grad_cols.data() + t * width, width);
        }
        bias.grad[c] += bias_acc;
    }

    Tensor<T> grad_in(input.shape());
    for (std::size_t t = 0; t < out_len; ++t)
        for (std::size_t i = 0; i < in_channels_; ++i)
            for (std::size_t kk = 0; kk < kernel_; ++kk) grad_in(i, t + kk) += grad_cols[t * width + i * kernel_ + kk];

    input_.reset();
    columns_.clear();
    return grad_in;
}

// ---- MaxPool1d ----------------------------------------------------------

template <class T>
Tensor<T> MaxPool1d<T>::forward(const Tensor<T>& input) {
    Tensor<T> out = maxpool1d_forward(input, pool_, &argmax_);
    input_shape_ = input.shape();
    return out;
}

template <class T>
Tensor<T> MaxPool1d<T>::backward(const Tensor<T>& grad_out) {
    require_cache(has_cache(), "maxpool1d");
    const Shape expected{(*input_shape_)[0], (*input_shape_)[1] / pool_};
    require_shape(grad_out.shape() == expected, "maxpool1d backward: expected gradient " + shape_string(expected) +
                                                    ", got " + shape_string(grad_out.shape()));
    Tensor<T> grad_in(*input_shape_);
    for (std::size_t i = 0; i < argmax_.size(); ++i) grad_in[argmax_[i]] += grad_out[i];
    input_shape_.reset();
    argmax_.clear();
    return grad_in;
}

// ---- Dense --------------------------------------------------------------

template <class T>
Dense<T>::Dense(std::size_t in_features, std::size_t out_features)
    : weight({out_features, in_features}), bias({out_features}) {}

template <class T>
void Dense<T>::init(Rng& rng) {
    glorot_uniform(weight.value, weight.value.dim(1), weight.value.dim(0), rng);
    bias.value.zero();
}

template <class T>
Tensor<T> Dense<T>::forward(const Tensor<T>& input) {
    Tensor<T> out = dense_forward(input, weight.value, bias.value);
    input_ = input;
    return out;
}

template <class T>
Tensor<T> Dense<T>::backward(const Tensor<T>& grad_out) {
    require_cache(has_cache(), "dense");
    const std::size_t rows = weight.value.dim(0);
    const std::size_t cols = weight.value.dim(1);
    require_shape(grad_out.shape() == Shape{rows}, "dense backward: expected gradient [" + std::to_string(rows) +
                                                       "], got " + shape_string(grad_out.shape()));
    const Tensor<T>& input = *input_;
    for (std::size_t r = 0; r < rows; ++r) bias.grad[r] += grad_out[r];
    kernels::ger_acc(grad_out.data().data(), rows, input.data().data(), cols, weight.grad.data().data());
    Tensor<T> grad_in({cols});
    kernels::gemv_t_acc(weight.value.data().data(), rows, cols, grad_out.data().data(), grad_in.data().data());
    input_.reset();
    return grad_in;
}

// ---- Relu ---------------------------------------------------------------

template <class T>
Tensor<T> Relu<T>::forward(const Tensor<T>& input) {
    input_ = input;
    return relu(input);
}

template <class T>
Tensor<T> Relu<T>::backward(const Tensor<T>& grad_out) {
    require_cache(has_cache(), "relu");
    Tensor<T> grad_in = relu_backward(grad_out, *input_);
    input_.reset();
    return grad_in;
}

// ---- Dropout ------------------------------------------------------------

template <class T>
Dropout<T>::Dropout(double rate) : rate_(rate) {
    validate_dropout_rate(rate);
}

template <class T>
Tensor<T> Dropout<T>::forward(const Tensor<T>& input, Rng& rng, bool training) {
    Tensor<T> out = dropout(input, rate_, rng, training, &mask_);
    cached_ = true;
    return out;
}

template <class T>
Tensor<T> Dropout<T>::backward(const Tensor<T>& grad_out) {
    require_cache(cached_, "dropout");
    require_shape(grad_out.size() == mask_.size(), "dropout backward: gradient size differs from forward input");
    Tensor<T> grad_in = grad_out;
    for (std::size_t i = 0; i < mask_.size(); ++i) grad_in[i] *= mask_[i];
    cached_ = false;
    mask_.clear();
    return grad_in;
}

#define FLOWSENTINEL_INSTANTIATE(T)                                                                       \
    template Tensor<T> conv1d_forward(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);              \
    template Tensor<T> maxpool1d_forward(const Tensor<T>&, std::size_t, std::vector<std::size_t>*);       \
    template Tensor<T> dense_forward(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);               \
    template Tensor<T> dropout(const Tensor<T>&, double, Rng&, bool, std::vector<T>*);                    \
    template class Conv1d<T>;                                                                             \
    template class MaxPool1d<T>;                                                                          \
    template class Dense<T>;                                                                              \
    template class Relu<T>;                                                                               \
    template class Dropout<T>;

FLOWSENTINEL_INSTANTIATE(float)
FLOWSENTINEL_INSTANTIATE(double)

#undef FLOWSENTINEL_INSTANTIATE

}  // namespace flowsentinel
