#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace nlsal {

/// Raised whenever operand shapes are inconsistent with an operation.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// NHWC extents. Kernels reuse the same four slots as (kh, kw, cin, cout).
struct Shape {
  int n = 0;
  int h = 0;
  int w = 0;
  int c = 0;

  [[nodiscard]] std::size_t numel() const {
    return static_cast<std::size_t>(n) * static_cast<std::size_t>(h) *
           static_cast<std::size_t>(w) * static_cast<std::size_t>(c);
  }
  // Matrix view: every (n, y, x) position is a row, channels are columns.
  [[nodiscard]] std::size_t rows() const {
    return static_cast<std::size_t>(n) * static_cast<std::size_t>(h) *
           static_cast<std::size_t>(w);
  }
  [[nodiscard]] std::size_t cols() const { return static_cast<std::size_t>(c); }
  [[nodiscard]] std::string str() const;

  friend bool operator==(const Shape&, const Shape&) = default;
};

/// Dense 4-D array of doubles in row-major NHWC order with an optional
/// same-shape gradient buffer.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> data);

  [[nodiscard]] static Tensor scalar(double value) { return Tensor({1, 1, 1, 1}, value); }

  [[nodiscard]] const Shape& shape() const { return shape_; }
  [[nodiscard]] std::size_t size() const { return data_.size(); }
  [[nodiscard]] bool empty() const { return data_.empty(); }

  [[nodiscard]] std::span<double> data() { return data_; }
  [[nodiscard]] std::span<const double> data() const { return data_; }
  [[nodiscard]] std::vector<double>& storage() { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  [[nodiscard]] std::size_t offset(int n, int y, int x, int c) const {
    return ((static_cast<std::size_t>(n) * shape_.h + y) * shape_.w + x) * shape_.c + c;
  }
  double& at(int n, int y, int x, int c) { return data_[offset(n, y, x, c)]; }
  [[nodiscard]] double at(int n, int y, int x, int c) const { return data_[offset(n, y, x, c)]; }

  [[nodiscard]] double item() const;

  // Gradient slot. Allocated lazily; absent until the first request.
  [[nodiscard]] bool has_grad() const { return grad_.size() == data_.size(); }
  std::span<double> grad();
  [[nodiscard]] std::span<const double> grad() const;
  void zero_grad();
  void drop_grad() { grad_.clear(); grad_.shrink_to_fit(); }

  /// Same storage reinterpreted with another shape of equal element count.
  [[nodiscard]] Tensor reshaped(Shape shape) const;

 private:
  Shape shape_{};
  std::vector<double> data_;
  std::vector<double> grad_;
};

/// Throws ShapeError with `what` prefixed unless `a == b`.
void require_same_shape(const Shape& a, const Shape& b, const char* what);

}  // namespace nlsal
