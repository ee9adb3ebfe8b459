#include "flowsentinel/lstm.hpp"

#include <cmath>
#include <string>

#include "flowsentinel/activations.hpp"
#include "flowsentinel/kernels.hpp"

namespace flowsentinel {

namespace {

template <class T>
void check_weights(const LstmWeights<T>& w) {
    require_shape(w.bias.rank() == 1 && w.bias.dim(0) % 4 == 0 && w.bias.dim(0) > 0, "lstm: bias must be [4H]");
    const std::size_t h4 = w.bias.dim(0);
    const std::size_t h = h4 / 4;
    require_shape(w.input.rank() == 2 && w.input.dim(0) == h4, "lstm: input kernel must be [4H x D]");
    require_shape(w.recurrent.rank() == 2 && w.recurrent.dim(0) == h4 && w.recurrent.dim(1) == h,
                  "lstm: recurrent kernel must be [4H x H]");
}

// Writes post-activation gates [4H], the new cell and hidden state, and tanh(c).
template <class T>
void step_core(const T* x, const T* h_prev, const T* c_prev, const LstmWeights<T>& w, T* gates, T* c, T* h,
               T* c_tanh) {
    const std::size_t hidden = w.hidden();
    const std::size_t d = w.input_dim();
    const auto& k = kernels::table<T>();
    const T* wx = w.input.data().data();
    const T* wh = w.recurrent.data().data();
    for (std::size_t r = 0; r < 4 * hidden; ++r)
        gates[r] = w.bias[r] + k.dot(wx + r * d, x, d) + k.dot(wh + r * hidden, h_prev, hidden);
    for (std::size_t j = 0; j < hidden; ++j) {
        const T gi = sigmoid(gates[j]);
        const T gf = sigmoid(gates[hidden + j]);
        const T gg = std::tanh(gates[2 * hidden + j]);
        const T go = sigmoid(gates[3 * hidden + j]);
        gates[j] = gi;
        gates[hidden + j] = gf;
        gates[2 * hidden + j] = gg;
        gates[3 * hidden + j] = go;
        c[j] = gf * c_prev[j] + gi * gg;
        c_tanh[j] = std::tanh(c[j]);
        h[j] = go * c_tanh[j];
    }
}

}  // namespace

template <class T>
std::pair<Tensor<T>, Tensor<T>> lstm_step(const Tensor<T>& x, const Tensor<T>& h_prev, const Tensor<T>& c_prev,
                                          const LstmWeights<T>& weights) {
    check_weights(weights);
    const std::size_t hidden = weights.hidden();
    require_shape(x.rank() == 1 && x.dim(0) == weights.input_dim(),
                  "lstm_step: x must have length " + std::to_string(weights.input_dim()));
    require_shape(h_prev.shape() == Shape{hidden} && c_prev.shape() == Shape{hidden},
                  "lstm_step: h_prev and c_prev must have length " + std::to_string(hidden));
    std::vector<T> gates(4 * hidden);
    std::vector<T> c_tanh(hidden);
    Tensor<T> h({hidden});
    Tensor<T> c({hidden});
    step_core(x.data().data(), h_prev.data().data(), c_prev.data().data(), weights, gates.data(), c.data().data(),
              h.data().data(), c_tanh.data());
    return {std::move(h), std::move(c)};
}

template <class T>
Lstm<T>::Lstm(std::size_t input_dim, std::size_t hidden)
    : w_input({4 * hidden, input_dim}),
      w_recurrent({4 * hidden, hidden}),
      bias({4 * hidden}),
      input_dim_(input_dim),
      hidden_(hidden) {}

template <class T>
void Lstm<T>::init(Rng& rng) {
    glorot_uniform(w_input.value, input_dim_, 4 * hidden_, rng);
    glorot_uniform(w_recurrent.value, hidden_, 4 * hidden_, rng);
    bias.value.zero();
    for (std::size_t j = 0; j < hidden_; ++j) bias.value[hidden_ + j] = T{1};
}

template <class T>
Tensor<T> Lstm<T>::forward(const Tensor<T>& seq, bool return_sequences) {
    require_shape(seq.rank() == 2, "lstm: sequence must be [T x D], got " + shape_string(seq.shape()));
    if (seq.dim(0) == 0) fail(ErrorKind::EmptySequence, "lstm: sequence has no time steps");
    require_shape(seq.dim(1) == input_dim_, "lstm: sequence feature size " + std::to_string(seq.dim(1)) +
                                                " does not match input dim " + std::to_string(input_dim_));
    const LstmWeights<T> w = weights();
    const std::size_t steps = seq.dim(0);
    const std::size_t h = hidden_;

    Cache cache;
    cache.steps = steps;
    cache.return_sequences = return_sequences;
    cache.inputs.assign(seq.data().begin(), seq.data().end());
    cache.gates.assign(steps * 4 * h, T{0});
    cache.cells.assign((steps + 1) * h, T{0});
    cache.hiddens.assign((steps + 1) * h, T{0});
    cache.cell_tanh.assign(steps * h, T{0});

    for (std::size_t t = 0; t < steps; ++t) {
        step_core(cache.inputs.data() + t * input_dim_, cache.hiddens.data() + t * h, cache.cells.data() + t * h, w,
                  cache.gates.data() + t * 4 * h, cache.cells.data() + (t + 1) * h,
                  cache.hiddens.data() + (t + 1) * h, cache.cell_tanh.data() + t * h);
    }

    Tensor<T> out;
    if (return_sequences) {
        out = Tensor<T>({steps, h}, std::vector<T>(cache.hiddens.begin() + h, cache.hiddens.end()));
    } else {
        out = Tensor<T>({h}, std::vector<T>(cache.hiddens.end() - h, cache.hiddens.end()));
    }
    cache_ = std::move(cache);
    return out;
}

template <class T>
Tensor<T> Lstm<T>::backward(const Tensor<T>& grad_out) {
    if (!cache_) fail(ErrorKind::MissingCache, "lstm: backward called without a cached forward pass");
    const Cache& cache = *cache_;
    const std::size_t steps = cache.steps;
    const std::size_t h = hidden_;
    const std::size_t d = input_dim_;
    const Shape expected = cache.return_sequences ? Shape{steps, h} : Shape{h};
    require_shape(grad_out.shape() == expected, "lstm backward: expected gradient " + shape_string(expected) +
                                                    ", got " + shape_string(grad_out.shape()));

    const T* wx = w_input.value.data().data();
    const T* wh = w_recurrent.value.data().data();
    T* gwx = w_input.grad.data().data();
    T* gwh = w_recurrent.grad.data().data();

    Tensor<T> grad_seq({steps, d});
    std::vector<T> dh_next(h, T{0});
    std::vector<T> dc_next(h, T{0});
    std::vector<T> dh(h);
    std::vector<T> dpre(4 * h);

    for (std::size_t t = steps; t-- > 0;) {
        for (std::size_t j = 0; j < h; ++j) {
            T upstream{0};
            if (cache.return_sequences) upstream = grad_out(t, j);
            else if (t + 1 == steps) upstream = grad_out[j];
            dh[j] = upstream + dh_next[j];
        }
        const T* gates = cache.gates.data() + t * 4 * h;
        const T* c_prev = cache.cells.data() + t * h;
        const T* c_tanh = cache.cell_tanh.data() + t * h;
        for (std::size_t j = 0; j < h; ++j) {
            const T gi = gates[j];
            const T gf = gates[h + j];
            const T gg = gates[2 * h + j];
            const T go = gates[3 * h + j];
            const T d_o = dh[j] * c_tanh[j];
            const T dc = dh[j] * go * (T{1} - c_tanh[j] * c_tanh[j]) + dc_next[j];
            dpre[j] = dc * gg * gi * (T{1} - gi);
            dpre[h + j] = dc * c_prev[j] * gf * (T{1} - gf);
            dpre[2 * h + j] = dc * gi * (T{1} - gg * gg);
            dpre[3 * h + j] = d_o * go * (T{1} - go);
            dc_next[j] = dc * gf;
        }
        const T* x_t = cache.inputs.data() + t * d;
        const T* h_prev = cache.hiddens.data() + t * h;
        for (std::size_t r = 0; r < 4 * h; ++r) bias.grad[r] += dpre[r];
        kernels::ger_acc(dpre.data(), 4 * h, x_t, d, gwx);
        kernels::ger_acc(dpre.data(), 4 * h, h_prev, h, gwh);
        kernels::gemv_t_acc(wx, 4 * h, d, dpre.data(), grad_seq.data().data() + t * d);
        std::fill(dh_next.begin(), dh_next.end(), T{0});
        kernels::gemv_t_acc(wh, 4 * h, h, dpre.data(), dh_next.data());
    }
    cache_.reset();
    return grad_seq;
}

template std::pair<Tensor<float>, Tensor<float>> lstm_step(const Tensor<float>&, const Tensor<float>&,
                                                           const Tensor<float>&, const LstmWeights<float>&);
template std::pair<Tensor<double>, Tensor<double>> lstm_step(const Tensor<double>&, const Tensor<double>&,
                                                             const Tensor<double>&, const LstmWeights<double>&);
template class Lstm<float>;
template class Lstm<double>;

}  // namespace flowsentinel
