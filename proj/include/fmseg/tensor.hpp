#ifndef FMSEG_TENSOR_HPP
#define FMSEG_TENSOR_HPP

#include <cstddef>
#include <initializer_list>
#include <vector>

namespace fmseg {

using real = double;

/// Dense row-major tensor of doubles. Rank and shape are dynamic; most of
/// the codebase uses rank 1 (vectors), rank 2 (H x W maps) and rank 3
/// (C x H x W feature planes).
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> shape, real fill = 0.0);
    Tensor(std::initializer_list<std::size_t> shape, real fill = 0.0);

    static Tensor zeros_like(const Tensor& other);

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t dim(std::size_t axis) const { return shape_[axis]; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }
    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

    real* data() { return data_.data(); }
    const real* data() const { return data_.data(); }

    real& operator[](std::size_t i) { return data_[i]; }
    real operator[](std::size_t i) const { return data_[i]; }

    // rank-2 {H, W}
    real& at(std::size_t h, std::size_t w) { return data_[h * shape_[1] + w]; }
    real at(std::size_t h, std::size_t w) const { return data_[h * shape_[1] + w]; }

    // rank-3 {C, H, W}
    real& at(std::size_t c, std::size_t h, std::size_t w) {
        return data_[(c * shape_[1] + h) * shape_[2] + w];
    }
    real at(std::size_t c, std::size_t h, std::size_t w) const {
        return data_[(c * shape_[1] + h) * shape_[2] + w];
    }

    void fill(real value);
    void zero() { fill(0.0); }

    Tensor& operator+=(const Tensor& other);
    Tensor& operator-=(const Tensor& other);
    Tensor& operator*=(real scalar);

    bool operator==(const Tensor& other) const {
        return shape_ == other.shape_ && data_ == other.data_;
    }

private:
    std::vector<std::size_t> shape_;
    std::vector<real> data_;
};

Tensor operator+(Tensor lhs, const Tensor& rhs);
Tensor operator-(Tensor lhs, const Tensor& rhs);
Tensor operator*(Tensor lhs, real scalar);

/// Largest absolute entry, 0 for empty tensors.
real max_abs(const Tensor& t);

/// Mean of all entries; throws on empty input.
real mean(const Tensor& t);

}  // namespace fmseg

#endif
