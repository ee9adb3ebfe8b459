#pragma once

#include <cstdint>
#include <span>

#include "flowsentinel/parameter.hpp"

namespace flowsentinel {

struct AdamConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// One Adam step on a single parameter, t >= 1:
///   m = b1 m + (1-b1) g
///   v = b2 v + (1-b2) g^2
///   value -= lr * (m / (1-b1^t)) / (sqrt(v / (1-b2^t)) + eps)
/// Throws NonFiniteGradient before touching anything if g has NaN/Inf.
template <class T>
void adam_update(Parameter<T>& param, std::uint64_t step, const AdamConfig& config);

template <class T>
class Adam {
public:
    explicit Adam(AdamConfig config = {}) : config_(config) {}

    /// Advances the step counter and updates every parameter.
    void step(std::span<Parameter<T>* const> params);

    std::uint64_t steps_taken() const noexcept { return step_; }
    const AdamConfig& config() const noexcept { return config_; }

private:
    AdamConfig config_;
    std::uint64_t step_ = 0;
};

}  // namespace flowsentinel
