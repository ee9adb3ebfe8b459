#pragma once

#include "flowsentinel/rng.hpp"
#include "flowsentinel/tensor.hpp"

namespace flowsentinel {

/// Trainable tensor with its gradient and Adam moment accumulators.
/// All four tensors always share one shape.
template <class T>
struct Parameter {
    Tensor<T> value;
    Tensor<T> grad;
    Tensor<T> adam_m;
    Tensor<T> adam_v;

    Parameter() = default;
    explicit Parameter(const Shape& shape) : value(shape), grad(shape), adam_m(shape), adam_v(shape) {}

    const Shape& shape() const noexcept { return value.shape(); }
    std::size_t size() const noexcept { return value.size(); }
    void zero_grad() noexcept { grad.zero(); }
    void reset_moments() noexcept {
        adam_m.zero();
        adam_v.zero();
    }
};

/// U(-limit, limit) with limit = sqrt(6 / (fan_in + fan_out)).
template <class T>
void glorot_uniform(Tensor<T>& target, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (auto& v : target.data()) v = static_cast<T>(rng.uniform(-limit, limit));
}

}  // namespace flowsentinel
