#include "flowsentinel/tensor.hpp"

namespace flowsentinel {

std::string shape_string(const Shape& shape) {
    std::string out = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) out += " x ";
        out += std::to_string(shape[i]);
    }
    return out + "]";
}

template class Tensor<float>;
template class Tensor<double>;

}  // namespace flowsentinel
