#include "nlsal/tensor.hpp"

#include <algorithm>

#include <fmt/format.h>

namespace nlsal {

std::string Shape::str() const { return fmt::format("{}x{}x{}x{}", n, h, w, c); }

Tensor::Tensor(Shape shape, double fill) : shape_(shape) {
  if (shape.n < 0 || shape.h < 0 || shape.w < 0 || shape.c < 0) {
    throw ShapeError(fmt::format("negative tensor extent {}", shape.str()));
  }
  data_.assign(shape.numel(), fill);
}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(shape), data_(std::move(data)) {
  if (shape.n < 0 || shape.h < 0 || shape.w < 0 || shape.c < 0) {
    throw ShapeError(fmt::format("negative tensor extent {}", shape.str()));
  }
  if (data_.size() != shape.numel()) {
    throw ShapeError(fmt::format("tensor {} needs {} values, got {}", shape.str(), shape.numel(),
                                 data_.size()));
  }
}

double Tensor::item() const {
  if (data_.size() != 1) {
    throw ShapeError(fmt::format("item() on non-scalar tensor {}", shape_.str()));
  }
  return data_[0];
}

std::span<double> Tensor::grad() {
  if (grad_.size() != data_.size()) grad_.assign(data_.size(), 0.0);
  return grad_;
}

std::span<const double> Tensor::grad() const {
  if (grad_.size() != data_.size()) {
    throw std::logic_error("gradient requested before it was allocated");
  }
  return grad_;
}

void Tensor::zero_grad() {
  if (grad_.size() != data_.size()) {
    grad_.assign(data_.size(), 0.0);
  } else {
    std::fill(grad_.begin(), grad_.end(), 0.0);
  }
}

Tensor Tensor::reshaped(Shape shape) const {
  if (shape.numel() != data_.size()) {
    throw ShapeError(fmt::format("cannot reshape {} to {}", shape_.str(), shape.str()));
  }
  return Tensor(shape, data_);
}

void require_same_shape(const Shape& a, const Shape& b, const char* what) {
  if (!(a == b)) {
    throw ShapeError(fmt::format("{}: shape {} does not match {}", what, a.str(), b.str()));
  }
}

}  // namespace nlsal
