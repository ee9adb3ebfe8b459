#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "flowsentinel/error.hpp"

namespace flowsentinel {

using Shape = std::vector<std::size_t>;

std::string shape_string(const Shape& shape);

/// Dense row-major array of rank 1..3. float in production, double for
/// gradient checking.
template <class T>
class Tensor {
public:
    using value_type = T;

    Tensor() = default;

    explicit Tensor(Shape shape) : shape_(std::move(shape)) {
        validate_shape();
        data_.assign(element_count(shape_), T{0});
    }

    Tensor(Shape shape, std::vector<T> data) : shape_(std::move(shape)), data_(std::move(data)) {
        validate_shape();
        if (data_.size() != element_count(shape_))
            fail(ErrorKind::ShapeMismatch, "data length " + std::to_string(data_.size()) +
                                               " does not match shape " + shape_string(shape_));
    }

    /// Same as the two-argument constructor but also rejects NaN/Inf.
    static Tensor checked(Shape shape, std::vector<T> data) {
        Tensor t(std::move(shape), std::move(data));
        if (!t.all_finite()) fail(ErrorKind::NonFiniteValue, "tensor contains NaN or Inf");
        return t;
    }

    static Tensor filled(Shape shape, T value) {
        Tensor t(std::move(shape));
        std::fill(t.data_.begin(), t.data_.end(), value);
        return t;
    }

    const Shape& shape() const noexcept { return shape_; }
    std::size_t rank() const noexcept { return shape_.size(); }
    std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    std::span<T> data() noexcept { return data_; }
    std::span<const T> data() const noexcept { return data_; }
    std::vector<T>& storage() noexcept { return data_; }
    const std::vector<T>& storage() const noexcept { return data_; }

    T& operator[](std::size_t i) noexcept { return data_[i]; }
    const T& operator[](std::size_t i) const noexcept { return data_[i]; }

    T& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * shape_[1] + j]; }
    const T& operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * shape_[1] + j]; }
    T& operator()(std::size_t i, std::size_t j, std::size_t k) noexcept {
        return data_[(i * shape_[1] + j) * shape_[2] + k];
    }
    const T& operator()(std::size_t i, std::size_t j, std::size_t k) const noexcept {
        return data_[(i * shape_[1] + j) * shape_[2] + k];
    }

    /// Contiguous view of row i along the leading axis.
    std::span<T> row(std::size_t i) noexcept {
        const std::size_t stride = data_.size() / shape_[0];
        return std::span<T>(data_).subspan(i * stride, stride);
    }
    std::span<const T> row(std::size_t i) const noexcept {
        const std::size_t stride = data_.size() / shape_[0];
        return std::span<const T>(data_).subspan(i * stride, stride);
    }

    void fill(T value) noexcept { std::fill(data_.begin(), data_.end(), value); }
    void zero() noexcept { fill(T{0}); }

    Tensor reshaped(Shape shape) const& { return Tensor(std::move(shape), data_); }
    Tensor reshaped(Shape shape) && { return Tensor(std::move(shape), std::move(data_)); }

    bool all_finite() const noexcept {
        return std::all_of(data_.begin(), data_.end(), [](T v) { return std::isfinite(v); });
    }

    bool same_shape(const Tensor& other) const noexcept { return shape_ == other.shape_; }

    friend bool operator==(const Tensor&, const Tensor&) = default;

    template <class U>
    Tensor<U> cast() const {
        std::vector<U> out(data_.begin(), data_.end());
        return Tensor<U>(shape_, std::move(out));
    }

    static std::size_t element_count(const Shape& shape) {
        return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
    }

private:
    void validate_shape() const {
        if (shape_.empty() || shape_.size() > 3)
            fail(ErrorKind::ShapeMismatch, "tensor rank must be 1..3, got " + std::to_string(shape_.size()));
        for (auto d : shape_)
            if (d == 0) fail(ErrorKind::ShapeMismatch, "zero-sized dimension in " + shape_string(shape_));
    }

    Shape shape_;
    std::vector<T> data_;
};

inline void require_shape(bool ok, const std::string& what) {
    if (!ok) fail(ErrorKind::ShapeMismatch, what);
}

}  // namespace flowsentinel
