#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "aart/errors.hpp"

namespace aart {

// Dense row-major float32 array of rank 0..3. Rank 0 is a scalar with one
// element. Immutable by convention once handed to a Graph.
class Tensor {
public:
    Tensor() = default;

    explicit Tensor(std::vector<std::size_t> shape)
        : shape_(std::move(shape)), data_(checked_numel(shape_), 0.0f) {}

    Tensor(std::vector<std::size_t> shape, std::vector<float> data)
        : shape_(std::move(shape)), data_(std::move(data)) {
        if (data_.size() != checked_numel(shape_)) {
            throw ShapeError("Tensor: data length " + std::to_string(data_.size()) +
                             " does not match shape " + shape_string(shape_));
        }
    }

    static Tensor scalar(float v) { return Tensor({}, {v}); }

    static Tensor zeros(std::vector<std::size_t> shape) { return Tensor(std::move(shape)); }

    static Tensor full(std::vector<std::size_t> shape, float v) {
        Tensor t(std::move(shape));
        for (auto& x : t.data_) x = v;
        return t;
    }

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t numel() const { return data_.size(); }

    std::size_t dim(std::size_t i) const { return shape_.at(i); }

    const float* data() const { return data_.data(); }
    float* data() { return data_.data(); }
    const std::vector<float>& vec() const { return data_; }

    float at(std::size_t i) const { return data_[i]; }
    float& at(std::size_t i) { return data_[i]; }

    // Row-major 2-D access.
    float at2(std::size_t r, std::size_t c) const { return data_[r * shape_[1] + c]; }
    float& at2(std::size_t r, std::size_t c) { return data_[r * shape_[1] + c]; }

    // Row-major 3-D access.
    float at3(std::size_t a, std::size_t b, std::size_t c) const {
        return data_[(a * shape_[1] + b) * shape_[2] + c];
    }
    float& at3(std::size_t a, std::size_t b, std::size_t c) {
        return data_[(a * shape_[1] + b) * shape_[2] + c];
    }

    bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

    bool all_finite() const {
        for (float v : data_) {
            if (!std::isfinite(v)) return false;
        }
        return true;
    }

    // Global L2 norm, accumulated in double.
    double l2_norm() const {
        double s = 0.0;
        for (float v : data_) s += static_cast<double>(v) * static_cast<double>(v);
        return std::sqrt(s);
    }

    bool operator==(const Tensor& o) const { return shape_ == o.shape_ && data_ == o.data_; }

    static std::string shape_string(const std::vector<std::size_t>& shape) {
        std::ostringstream os;
        os << "[";
        for (std::size_t i = 0; i < shape.size(); ++i) {
            if (i) os << "x";
            os << shape[i];
        }
        os << "]";
        return os.str();
    }

    std::string shape_string() const { return shape_string(shape_); }

private:
    static std::size_t checked_numel(const std::vector<std::size_t>& shape) {
        if (shape.size() > 3) {
            throw ShapeError("Tensor: rank " + std::to_string(shape.size()) + " exceeds 3");
        }
        std::size_t n = 1;
        for (std::size_t e : shape) {
            if (e == 0) throw ShapeError("Tensor: zero extent in shape " + shape_string(shape));
            n *= e;
        }
        return n;
    }

    std::vector<std::size_t> shape_;
    std::vector<float> data_;
};

}  // namespace aart
