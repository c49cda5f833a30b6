#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "nlsal/tensor.hpp"

// Plain forward/adjoint kernels on NHWC tensors. These carry no autodiff
// state; ops.hpp composes them into taped operations.
//
// Kernel tensors are stored HWIO: shape {kh, kw, cin, cout}.

namespace nlsal::kernels {

enum class Padding { kSame, kValid };

struct ConvGeometry {
  int out_h = 0;
  int out_w = 0;
  int pad_top = 0;
  int pad_left = 0;
};

/// Output extent and leading padding of a strided convolution. `same` pads
/// so that out = ceil(in / stride), placing the odd pixel at the bottom/right.
ConvGeometry conv_geometry(int in_h, int in_w, int kh, int kw, int stride, Padding padding);

Tensor conv2d(const Tensor& input, const Tensor& kernel, std::span<const double> bias, int stride,
              Padding padding);

/// Adjoint of conv2d with respect to its input.
Tensor conv2d_grad_input(const Tensor& grad_out, const Tensor& kernel, const Shape& input_shape,
                         int stride, Padding padding);

/// Adjoint of conv2d with respect to its kernel.
Tensor conv2d_grad_kernel(const Tensor& input, const Tensor& grad_out, const Shape& kernel_shape,
                          int stride, Padding padding);

/// Sum of grad_out over every position, one value per channel.
std::vector<double> channel_sums(const Tensor& grad_out);

/// Shape of conv2d_transpose's output: spatial dims scaled by stride,
/// channels = kernel's cin slot.
Shape conv2d_transpose_shape(const Shape& input, const Shape& kernel, int stride);

/// Transposed convolution realised as the exact adjoint of a `same`-padded
/// conv2d whose input is `stride` times larger. `kernel` is
/// {kh, kw, out_channels, in_channels}.
Tensor conv2d_transpose(const Tensor& input, const Tensor& kernel, std::span<const double> bias,
                        int stride);

/// Non-overlapping max pooling with stride == window. Trailing rows/columns
/// that do not fill a window are handled by replicating the last row/column.
/// `argmax` receives, per output element, the flat input index of the max.
Tensor maxpool2d(const Tensor& input, int window, std::vector<std::size_t>* argmax);

/// C = op(A) * op(B) (+ C when accumulate). op(A) is m x k, op(B) is k x n,
/// all row-major.
void gemm(bool trans_a, bool trans_b, std::size_t m, std::size_t n, std::size_t k,
          std::span<const double> a, std::span<const double> b, std::span<double> c,
          bool accumulate = false);

}  // namespace nlsal::kernels
