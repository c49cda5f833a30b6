#pragma once

#include "nlsal/kernels.hpp"
#include "nlsal/tape.hpp"

// Differentiable operations. Each records its output on the tape of its
// first operand together with the adjoint needed by Tape::backward().
//
// Matrix-valued ops (matmul, transpose, softmax_rows) view a tensor as a
// (n*h*w) x c matrix, so a 1xHxWxC feature map is an HW x C matrix.

namespace nlsal {

using kernels::Padding;

Var add(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double factor);
/// Scalar sum of every element.
Var sum(Var a);

/// Convolution with HWIO kernel and {1,1,1,cout} bias.
Var conv2d(Var input, Var kernel, Var bias, int stride, Padding padding);
Var conv2d(Var input, Var kernel, int stride, Padding padding);

/// Upsampling by `stride`; kernel is {kh, kw, out_channels, in_channels}.
Var conv2d_transpose(Var input, Var kernel, Var bias, int stride);
Var conv2d_transpose(Var input, Var kernel, int stride);

Var maxpool2d(Var input, int window);

Var relu(Var input);
Var sigmoid(Var input);

/// Numerically stabilised softmax along the channel (column) axis.
Var softmax_rows(Var input);
/// (rows(a) x c(a)) * (rows(b) x c(b)); requires c(a) == rows(b). The output
/// keeps a's leading extents with b's column count.
Var matmul(Var a, Var b);
/// Matrix transpose; the result has shape {1, 1, cols, rows}.
Var transpose(Var m);

Var concat_channels(Var a, Var b);

/// Grow to (height, width) by repeating the last row/column.
Var pad_replicate(Var input, int height, int width);
/// Keep the top-left (height, width) window.
Var crop(Var input, int height, int width);

Var reshape(Var input, Shape shape);

}  // namespace nlsal
