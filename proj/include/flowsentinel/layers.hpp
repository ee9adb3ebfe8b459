#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "flowsentinel/parameter.hpp"
#include "flowsentinel/rng.hpp"
#include "flowsentinel/tensor.hpp"

namespace flowsentinel {

// Stateless forward passes. Shapes are per sample; the models loop over a
// batch and accumulate gradients.

/// Valid (unpadded) stride-1 cross-correlation.
/// input [C_in x L], weights [C_out x C_in x K], bias [C_out] -> [C_out x (L-K+1)]
template <class T>
Tensor<T> conv1d_forward(const Tensor<T>& input, const Tensor<T>& weights, const Tensor<T>& bias);

/// Non-overlapping windows of `pool`, trailing remainder dropped, ties go to
/// the lower index. Writes the flat argmax input position of each output
/// element into `argmax` when given.
template <class T>
Tensor<T> maxpool1d_forward(const Tensor<T>& input, std::size_t pool = 2,
                            std::vector<std::size_t>* argmax = nullptr);

/// input [N], weights [M x N], bias [M] -> [M]
template <class T>
Tensor<T> dense_forward(const Tensor<T>& input, const Tensor<T>& weights, const Tensor<T>& bias);

/// Inverted dropout. Writes the per-element scale (0 or 1/(1-rate)) to `mask`
/// when given. Identity when !training or rate == 0.
template <class T>
Tensor<T> dropout(const Tensor<T>& input, double rate, Rng& rng, bool training,
                  std::vector<T>* mask = nullptr);

template <class T>
class Conv1d {
public:
    Conv1d(std::size_t in_channels, std::size_t out_channels, std::size_t kernel);

    void init(Rng& rng);

    Tensor<T> forward(const Tensor<T>& input);
    /// Accumulates into weight.grad / bias.grad and returns the input gradient.
    Tensor<T> backward(const Tensor<T>& grad_out);

    bool has_cache() const noexcept { return input_.has_value(); }
    std::size_t output_length(std::size_t length) const;
    std::size_t parameter_count() const noexcept { return weight.size() + bias.size(); }

    std::size_t in_channels() const noexcept { return in_channels_; }
    std::size_t out_channels() const noexcept { return out_channels_; }
    std::size_t kernel() const noexcept { return kernel_; }

    Parameter<T> weight;  // [C_out x C_in x K]
    Parameter<T> bias;    // [C_out]

private:
    std::size_t in_channels_;
    std::size_t out_channels_;
    std::size_t kernel_;
    std::optional<Tensor<T>> input_;
    std::vector<T> columns_;  // im2col patches, [L_out x (C_in*K)]
};

template <class T>
class MaxPool1d {
public:
    explicit MaxPool1d(std::size_t pool = 2) : pool_(pool) {}

    Tensor<T> forward(const Tensor<T>& input);
    Tensor<T> backward(const Tensor<T>& grad_out);

    bool has_cache() const noexcept { return input_shape_.has_value(); }
    const std::vector<std::size_t>& argmax() const noexcept { return argmax_; }
    std::size_t pool() const noexcept { return pool_; }

private:
    std::size_t pool_;
    std::optional<Shape> input_shape_;
    std::vector<std::size_t> argmax_;
};

template <class T>
class Dense {
public:
    Dense(std::size_t in_features, std::size_t out_features);

    void init(Rng& rng);

    Tensor<T> forward(const Tensor<T>& input);
    Tensor<T> backward(const Tensor<T>& grad_out);

    bool has_cache() const noexcept { return input_.has_value(); }
    std::size_t parameter_count() const noexcept { return weight.size() + bias.size(); }

    Parameter<T> weight;  // [M x N]
    Parameter<T> bias;    // [M]

private:
    std::optional<Tensor<T>> input_;
};

template <class T>
class Relu {
public:
    Tensor<T> forward(const Tensor<T>& input);
    Tensor<T> backward(const Tensor<T>& grad_out);
    bool has_cache() const noexcept { return input_.has_value(); }

private:
    std::optional<Tensor<T>> input_;
};

template <class T>
class Dropout {
public:
    /// Throws InvalidRate unless 0 <= rate < 1.
    explicit Dropout(double rate);

    Tensor<T> forward(const Tensor<T>& input, Rng& rng, bool training);
    Tensor<T> backward(const Tensor<T>& grad_out);

    double rate() const noexcept { return rate_; }
    bool has_cache() const noexcept { return cached_; }

private:
    double rate_;
    bool cached_ = false;
    std::vector<T> mask_;
};

void validate_dropout_rate(double rate);

}  // namespace flowsentinel
