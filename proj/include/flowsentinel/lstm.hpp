#pragma once

#include <cstddef>
#include <optional>
#include <utility>
#include <vector>

#include "flowsentinel/parameter.hpp"
#include "flowsentinel/tensor.hpp"

namespace flowsentinel {

/// Read-only view of one LSTM layer's weights. Gate rows are stacked in the
/// order input, forget, cell candidate, output, H rows each.
template <class T>
struct LstmWeights {
    const Tensor<T>& input;      // [4H x D]
    const Tensor<T>& recurrent;  // [4H x H]
    const Tensor<T>& bias;       // [4H]

    std::size_t hidden() const { return bias.dim(0) / 4; }
    std::size_t input_dim() const { return input.dim(1); }
};

/// One time step:
///   [i f g o] = W_x x + W_h h_prev + b
///   i, f, o = sigmoid(.), g = tanh(.)
///   c = f * c_prev + i * g
///   h = o * tanh(c)
/// Returns (h, c).
template <class T>
std::pair<Tensor<T>, Tensor<T>> lstm_step(const Tensor<T>& x, const Tensor<T>& h_prev, const Tensor<T>& c_prev,
                                          const LstmWeights<T>& weights);

template <class T>
class Lstm {
public:
    Lstm(std::size_t input_dim, std::size_t hidden);

    /// Glorot-uniform input and recurrent kernels, zero bias, forget bias 1.
    void init(Rng& rng);

    /// seq [T x D] -> [T x H] when return_sequences, else the last hidden
    /// state [H]. Starts from h_0 = c_0 = 0.
    Tensor<T> forward(const Tensor<T>& seq, bool return_sequences);

    /// Backpropagation through time. grad_out matches the forward output
    /// shape. Accumulates parameter gradients and returns d/d seq.
    Tensor<T> backward(const Tensor<T>& grad_out);

    bool has_cache() const noexcept { return cache_.has_value(); }
    std::size_t hidden() const noexcept { return hidden_; }
    std::size_t input_dim() const noexcept { return input_dim_; }
    std::size_t parameter_count() const noexcept { return w_input.size() + w_recurrent.size() + bias.size(); }
    LstmWeights<T> weights() const { return {w_input.value, w_recurrent.value, bias.value}; }

    Parameter<T> w_input;      // [4H x D]
    Parameter<T> w_recurrent;  // [4H x H]
    Parameter<T> bias;         // [4H]

private:
    struct Cache {
        std::size_t steps = 0;
        bool return_sequences = false;
        std::vector<T> inputs;  // [T x D]
        std::vector<T> gates;   // [T x 4H], post-activation
        std::vector<T> cells;   // [(T+1) x H], row 0 = c_0
        std::vector<T> hiddens; // [(T+1) x H], row 0 = h_0
        std::vector<T> cell_tanh; // [T x H]
    };

    std::size_t input_dim_;
    std::size_t hidden_;
    std::optional<Cache> cache_;
};

}  // namespace flowsentinel
