#pragma once

// Small datasets shared by the training tests and the acceptance binary.

#include <cmath>
#include <string>
#include <vector>

#include "flowsentinel/dataset.hpp"
#include "flowsentinel/rng.hpp"

namespace flowsentinel::testdata {

// Binary set split by a random hyperplane through the centre of [0,1]^d,
// with every point at least `margin` away from it. Classes alternate, so
// the set is balanced.
inline FlowDataset separable_binary(std::size_t rows, std::size_t cols, std::uint64_t seed, double margin = 0.05) {
    Rng rng(seed);
    std::vector<double> w(cols);
    double norm = 0;
    for (auto& v : w) {
        v = rng.normal();
        norm += v * v;
    }
    norm = std::sqrt(norm);
    for (auto& v : w) v /= norm;

    FlowDataset d;
    d.mode = ClassificationMode::Binary;
    d.classes = {"Benign", "Attack"};
    for (std::size_t c = 0; c < cols; ++c) d.feature_names.push_back("f" + std::to_string(c));
    std::vector<double> x(cols);
    while (d.rows() < rows) {
        const int want = static_cast<int>(d.rows() % 2);
        double s = 0;
        for (std::size_t c = 0; c < cols; ++c) {
            x[c] = rng.uniform();
            s += w[c] * (x[c] - 0.5);
        }
        if (std::abs(s) < margin || (s > 0) != (want == 1)) continue;
        for (double v : x) d.X.push_back(static_cast<float>(v));
        d.y.push_back(static_cast<std::uint16_t>(want));
    }
    return d;
}

}  // namespace flowsentinel::testdata
