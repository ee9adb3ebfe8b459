#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "flowsentinel/parameter.hpp"
#include "flowsentinel/tensor.hpp"

namespace flowsentinel {

/// |a - n| / max(|a|, |n|, 1e-12)
double relative_error(double analytic, double numeric);

struct GradCheckEntry {
    std::string name;
    double max_rel_error = 0.0;
    std::size_t worst_index = 0;
    double analytic = 0.0;
    double numeric = 0.0;
};

struct GradCheckReport {
    std::vector<GradCheckEntry> entries;

    double max_rel_error() const;
    const GradCheckEntry* worst() const;
};

/// A tensor to perturb and the analytic gradient to compare against. The
/// analytic gradient must already be computed and must not alias anything
/// the loss function overwrites.
struct GradTarget {
    std::string name;
    Tensor<double>* value;
    Tensor<double> analytic;
};

/// Central differences, (L(x+h) - L(x-h)) / 2h, for every element of every
/// target. Each element is restored before moving on.
GradCheckReport gradient_check(std::vector<GradTarget>& targets, const std::function<double()>& loss,
                               double step = 1e-5);

/// Convenience for parameter sets: runs `analytic_pass` (which must zero the
/// grads, then forward and backward) once, snapshots each Parameter::grad,
/// then checks against `loss`.
GradCheckReport check_parameters(const std::vector<std::pair<std::string, Parameter<double>*>>& params,
                                 const std::function<void()>& analytic_pass, const std::function<double()>& loss,
                                 double step = 1e-5);

}  // namespace flowsentinel
