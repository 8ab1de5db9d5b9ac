#include "fmseg/tensor.hpp"

#include <cmath>
#include <stdexcept>

namespace fmseg {

namespace {

std::size_t shape_size(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return shape.empty() ? 0 : n;
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> shape, real fill)
    : shape_(std::move(shape)), data_(shape_size(shape_), fill) {}

Tensor::Tensor(std::initializer_list<std::size_t> shape, real fill)
    : Tensor(std::vector<std::size_t>(shape), fill) {}

Tensor Tensor::zeros_like(const Tensor& other) { return Tensor(other.shape_); }

void Tensor::fill(real value) {
    for (real& v : data_) v = value;
}

Tensor& Tensor::operator+=(const Tensor& other) {
    if (!same_shape(other)) throw std::invalid_argument("Tensor::operator+=: shape mismatch");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
    return *this;
}

Tensor& Tensor::operator-=(const Tensor& other) {
    if (!same_shape(other)) throw std::invalid_argument("Tensor::operator-=: shape mismatch");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
    return *this;
}

Tensor& Tensor::operator*=(real scalar) {
    for (real& v : data_) v *= scalar;
    return *this;
}

Tensor operator+(Tensor lhs, const Tensor& rhs) { return lhs += rhs; }
Tensor operator-(Tensor lhs, const Tensor& rhs) { return lhs -= rhs; }
Tensor operator*(Tensor lhs, real scalar) { return lhs *= scalar; }

real max_abs(const Tensor& t) {
    real m = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) m = std::max(m, std::abs(t[i]));
    return m;
}

real mean(const Tensor& t) {
    if (t.empty()) throw std::invalid_argument("mean: empty tensor");
    real s = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) s += t[i];
    return s / static_cast<real>(t.size());
}

}  // namespace fmseg
