#include "flowsentinel/adam.hpp"

#include <cmath>
#include <string>

namespace flowsentinel {

template <class T>
void adam_update(Parameter<T>& param, std::uint64_t step, const AdamConfig& config) {
    if (step == 0) fail(ErrorKind::InvalidConfig, "adam step count starts at 1");
    if (!param.grad.all_finite()) fail(ErrorKind::NonFiniteGradient, "adam: gradient contains NaN or Inf");
    const T b1 = static_cast<T>(config.beta1);
    const T b2 = static_cast<T>(config.beta2);
    const T lr = static_cast<T>(config.learning_rate);
    const T eps = static_cast<T>(config.epsilon);
    const T correction1 = T{1} - static_cast<T>(std::pow(config.beta1, static_cast<double>(step)));
    const T correction2 = T{1} - static_cast<T>(std::pow(config.beta2, static_cast<double>(step)));

    auto value = param.value.data();
    auto grad = param.grad.data();
    auto m = param.adam_m.data();
    auto v = param.adam_v.data();
    for (std::size_t i = 0; i < value.size(); ++i) {
        const T g = grad[i];
        m[i] = b1 * m[i] + (T{1} - b1) * g;
        v[i] = b2 * v[i] + (T{1} - b2) * g * g;
        const T m_hat = m[i] / correction1;
        const T v_hat = v[i] / correction2;
        value[i] -= lr * m_hat / (std::sqrt(v_hat) + eps);
    }
}

template <class T>
void Adam<T>::step(std::span<Parameter<T>* const> params) {
    for (const auto* p : params)
        if (!p->grad.all_finite()) fail(ErrorKind::NonFiniteGradient, "adam: gradient contains NaN or Inf");
    ++step_;
    for (auto* p : params) adam_update(*p, step_, config_);
}

template void adam_update(Parameter<float>&, std::uint64_t, const AdamConfig&);
template void adam_update(Parameter<double>&, std::uint64_t, const AdamConfig&);
template class Adam<float>;
template class Adam<double>;

}  // namespace flowsentinel
