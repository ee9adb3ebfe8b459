#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace flowsentinel {

inline constexpr double kProbabilityEpsilon = 1e-7;

/// -[y ln p + (1-y) ln(1-p)] with p clamped to [eps, 1-eps]. y must be 0 or 1.
double binary_cross_entropy(double p, int y);
/// d loss / d p at the clamped probability.
double binary_cross_entropy_grad(double p, int y);
/// Batch mean of binary_cross_entropy.
double binary_cross_entropy(std::span<const double> p, std::span<const int> y);

/// -ln probs[y], probs[y] clamped below at eps.
template <class T>
double sparse_categorical_cross_entropy(std::span<const T> probs, std::size_t y);

/// Gradient of the softmax + cross-entropy pair with respect to the logits:
/// probs - onehot(y).
template <class T>
std::vector<T> sparse_categorical_logit_grad(std::span<const T> probs, std::size_t y);

}  // namespace flowsentinel
