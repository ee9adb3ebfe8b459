#include "flowsentinel/losses.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "flowsentinel/error.hpp"

namespace flowsentinel {

namespace {

void check_binary_label(int y) {
    if (y != 0 && y != 1) fail(ErrorKind::InvalidLabel, "binary label must be 0 or 1, got " + std::to_string(y));
}

double clamp_probability(double p) { return std::clamp(p, kProbabilityEpsilon, 1.0 - kProbabilityEpsilon); }

template <class T>
void check_class_index(std::span<const T> probs, std::size_t y) {
    if (y >= probs.size())
        fail(ErrorKind::IndexOutOfRange,
             "class index " + std::to_string(y) + " out of range for " + std::to_string(probs.size()) + " classes");
}

}  // namespace

double binary_cross_entropy(double p, int y) {
    check_binary_label(y);
    const double q = clamp_probability(p);
    return y == 1 ? -std::log(q) : -std::log(1.0 - q);
}

double binary_cross_entropy_grad(double p, int y) {
    check_binary_label(y);
    const double q = clamp_probability(p);
    return y == 1 ? -1.0 / q : 1.0 / (1.0 - q);
}

double binary_cross_entropy(std::span<const double> p, std::span<const int> y) {
    if (p.size() != y.size() || p.empty()) fail(ErrorKind::ShapeMismatch, "binary_cross_entropy: batch size mismatch");
    double total = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) total += binary_cross_entropy(p[i], y[i]);
    return total / static_cast<double>(p.size());
}

template <class T>
double sparse_categorical_cross_entropy(std::span<const T> probs, std::size_t y) {
    check_class_index(probs, y);
    return -std::log(std::max(static_cast<double>(probs[y]), kProbabilityEpsilon));
}

template <class T>
std::vector<T> sparse_categorical_logit_grad(std::span<const T> probs, std::size_t y) {
    check_class_index(probs, y);
    std::vector<T> grad(probs.begin(), probs.end());
    grad[y] -= T{1};
    return grad;
}

template double sparse_categorical_cross_entropy(std::span<const float>, std::size_t);
template double sparse_categorical_cross_entropy(std::span<const double>, std::size_t);
template std::vector<float> sparse_categorical_logit_grad(std::span<const float>, std::size_t);
template std::vector<double> sparse_categorical_logit_grad(std::span<const double>, std::size_t);

}  // namespace flowsentinel
