#include "nlsal/ops.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <stdexcept>

#include <fmt/format.h>

namespace nlsal {

namespace {

Tape& tape_of(Var v) {
  if (v.tape == nullptr) throw std::invalid_argument("Var is not attached to a tape");
  return *v.tape;
}

void same_tape(Var a, Var b) {
  if (a.tape != b.tape) throw std::invalid_argument("operands live on different tapes");
}

double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Tensor bias_tensor(const Tape& t, Var bias, int channels, const char* op) {
  const Tensor& b = t.value(bias);
  if (b.size() != static_cast<std::size_t>(channels)) {
    throw ShapeError(fmt::format("{}: bias {} does not match {} output channels", op,
                                 b.shape().str(), channels));
  }
  return b;
}

}  // namespace

Var add(Var a, Var b) {
  same_tape(a, b);
  Tape& t = tape_of(a);
  const Tensor& x = t.value(a);
  const Tensor& y = t.value(b);
  require_same_shape(x.shape(), y.shape(), "add");
  Tensor out(x.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] + y[i];
  return t.record(std::move(out), {a, b}, [a, b](Tape& tp, const Tensor& g) {
    tp.accumulate(a, g);
    tp.accumulate(b, g);
  });
}

Var mul(Var a, Var b) {
  same_tape(a, b);
  Tape& t = tape_of(a);
  const Tensor& x = t.value(a);
  const Tensor& y = t.value(b);
  require_same_shape(x.shape(), y.shape(), "mul");
  Tensor out(x.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] * y[i];
  return t.record(std::move(out), {a, b}, [a, b](Tape& tp, const Tensor& g) {
    const Tensor& xa = tp.value(a);
    const Tensor& xb = tp.value(b);
    if (tp.requires_grad(a)) {
      auto ga = tp.grad_buffer(a).data();
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g[i] * xb[i];
    }
    if (tp.requires_grad(b)) {
      auto gb = tp.grad_buffer(b).data();
      for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += g[i] * xa[i];
    }
  });
}

Var scale(Var a, double factor) {
  Tape& t = tape_of(a);
  const Tensor& x = t.value(a);
  Tensor out(x.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] * factor;
  return t.record(std::move(out), {a}, [a, factor](Tape& tp, const Tensor& g) {
    auto ga = tp.grad_buffer(a).data();
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g[i] * factor;
  });
}

Var sum(Var a) {
  Tape& t = tape_of(a);
  double s = 0.0;
  for (double v : t.value(a).data()) s += v;
  return t.record(Tensor::scalar(s), {a}, [a](Tape& tp, const Tensor& g) {
    const double d = g[0];
    for (double& v : tp.grad_buffer(a).data()) v += d;
  });
}

Var conv2d(Var input, Var kernel, Var bias, int stride, Padding padding) {
  same_tape(input, kernel);
  same_tape(input, bias);
  Tape& t = tape_of(input);
  const Tensor b = bias_tensor(t, bias, t.value(kernel).shape().c, "conv2d");
  Tensor out = kernels::conv2d(t.value(input), t.value(kernel), b.data(), stride, padding);
  return t.record(std::move(out), {input, kernel, bias},
                  [input, kernel, bias, stride, padding](Tape& tp, const Tensor& g) {
                    const Tensor& x = tp.value(input);
                    const Tensor& k = tp.value(kernel);
                    if (tp.requires_grad(input)) {
                      tp.accumulate(input, kernels::conv2d_grad_input(g, k, x.shape(), stride, padding));
                    }
                    if (tp.requires_grad(kernel)) {
                      tp.accumulate(kernel, kernels::conv2d_grad_kernel(x, g, k.shape(), stride, padding));
                    }
                    if (tp.requires_grad(bias)) {
                      const auto sums = kernels::channel_sums(g);
                      auto gb = tp.grad_buffer(bias).data();
                      for (std::size_t i = 0; i < sums.size(); ++i) gb[i] += sums[i];
                    }
                  });
}

Var conv2d(Var input, Var kernel, int stride, Padding padding) {
  same_tape(input, kernel);
  Tape& t = tape_of(input);
  Tensor out = kernels::conv2d(t.value(input), t.value(kernel), {}, stride, padding);
  return t.record(std::move(out), {input, kernel},
                  [input, kernel, stride, padding](Tape& tp, const Tensor& g) {
                    const Tensor& x = tp.value(input);
                    const Tensor& k = tp.value(kernel);
                    if (tp.requires_grad(input)) {
                      tp.accumulate(input, kernels::conv2d_grad_input(g, k, x.shape(), stride, padding));
                    }
                    if (tp.requires_grad(kernel)) {
                      tp.accumulate(kernel, kernels::conv2d_grad_kernel(x, g, k.shape(), stride, padding));
                    }
                  });
}

namespace {

// Shared adjoint of conv2d_transpose. Forward is A^T(K) x with A(K) the
// same-padded strided conv, so d/dx = A(K) g and d/dK = grad_kernel(g, x).
void conv_transpose_backward(Tape& tp, const Tensor& g, Var input, Var kernel, int stride) {
  const Tensor& x = tp.value(input);
  const Tensor& k = tp.value(kernel);
  if (tp.requires_grad(input)) {
    tp.accumulate(input, kernels::conv2d(g, k, {}, stride, Padding::kSame));
  }
  if (tp.requires_grad(kernel)) {
    tp.accumulate(kernel, kernels::conv2d_grad_kernel(g, x, k.shape(), stride, Padding::kSame));
  }
}

}  // namespace

Var conv2d_transpose(Var input, Var kernel, Var bias, int stride) {
  same_tape(input, kernel);
  same_tape(input, bias);
  Tape& t = tape_of(input);
  const Tensor b = bias_tensor(t, bias, t.value(kernel).shape().w, "conv2d_transpose");
  Tensor out = kernels::conv2d_transpose(t.value(input), t.value(kernel), b.data(), stride);
  return t.record(std::move(out), {input, kernel, bias},
                  [input, kernel, bias, stride](Tape& tp, const Tensor& g) {
                    conv_transpose_backward(tp, g, input, kernel, stride);
                    if (tp.requires_grad(bias)) {
                      const auto sums = kernels::channel_sums(g);
                      auto gb = tp.grad_buffer(bias).data();
                      for (std::size_t i = 0; i < sums.size(); ++i) gb[i] += sums[i];
                    }
                  });
}

Var conv2d_transpose(Var input, Var kernel, int stride) {
  same_tape(input, kernel);
  Tape& t = tape_of(input);
  Tensor out = kernels::conv2d_transpose(t.value(input), t.value(kernel), {}, stride);
  return t.record(std::move(out), {input, kernel}, [input, kernel, stride](Tape& tp, const Tensor& g) {
    conv_transpose_backward(tp, g, input, kernel, stride);
  });
}

Var maxpool2d(Var input, int window) {
  Tape& t = tape_of(input);
  auto argmax = std::make_shared<std::vector<std::size_t>>();
  Tensor out = kernels::maxpool2d(t.value(input), window, argmax.get());
  return t.record(std::move(out), {input}, [input, argmax](Tape& tp, const Tensor& g) {
    auto gi = tp.grad_buffer(input).data();
    for (std::size_t i = 0; i < argmax->size(); ++i) gi[(*argmax)[i]] += g[i];
  });
}

Var relu(Var input) {
  Tape& t = tape_of(input);
  const Tensor& x = t.value(input);
  Tensor out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] > 0.0 ? x[i] : 0.0;
  return t.record(std::move(out), {input}, [input](Tape& tp, const Tensor& g) {
    const Tensor& xv = tp.value(input);
    auto gi = tp.grad_buffer(input).data();
    for (std::size_t i = 0; i < gi.size(); ++i) {
      if (xv[i] > 0.0) gi[i] += g[i];
    }
  });
}

Var sigmoid(Var input) {
  Tape& t = tape_of(input);
  const Tensor& x = t.value(input);
  Tensor out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = stable_sigmoid(x[i]);
  const std::size_t self = t.size();
  return t.record(std::move(out), {input}, [input, self](Tape& tp, const Tensor& g) {
    const Tensor& y = tp.value(tp.var(self));
    auto gi = tp.grad_buffer(input).data();
    for (std::size_t i = 0; i < gi.size(); ++i) gi[i] += g[i] * y[i] * (1.0 - y[i]);
  });
}

Var softmax_rows(Var input) {
  Tape& t = tape_of(input);
  const Tensor& x = t.value(input);
  const std::size_t rows = x.shape().rows();
  const std::size_t cols = x.shape().cols();
  Tensor out(x.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* xr = &x.data()[r * cols];
    double* yr = &out.data()[r * cols];
    const double mx = *std::max_element(xr, xr + cols);
    double z = 0.0;
    for (std::size_t j = 0; j < cols; ++j) {
      yr[j] = std::exp(xr[j] - mx);
      z += yr[j];
    }
    const double inv = 1.0 / z;
    for (std::size_t j = 0; j < cols; ++j) yr[j] *= inv;
  }
  const std::size_t self = t.size();
  return t.record(std::move(out), {input}, [input, self, rows, cols](Tape& tp, const Tensor& g) {
    const Tensor& y = tp.value(tp.var(self));
    auto gi = tp.grad_buffer(input).data();
    for (std::size_t r = 0; r < rows; ++r) {
      const std::size_t base = r * cols;
      double dot = 0.0;
      for (std::size_t j = 0; j < cols; ++j) dot += g[base + j] * y[base + j];
      for (std::size_t j = 0; j < cols; ++j) gi[base + j] += y[base + j] * (g[base + j] - dot);
    }
  });
}

Var matmul(Var a, Var b) {
  same_tape(a, b);
  Tape& t = tape_of(a);
  const Tensor& x = t.value(a);
  const Tensor& y = t.value(b);
  const std::size_t m = x.shape().rows();
  const std::size_t k = x.shape().cols();
  const std::size_t n = y.shape().cols();
  if (y.shape().rows() != k) {
    throw ShapeError(fmt::format("matmul: inner dimensions differ ({} is {}x{}, {} is {}x{})",
                                 x.shape().str(), m, k, y.shape().str(), y.shape().rows(), n));
  }
  const Shape& xs = x.shape();
  Tensor out({xs.n, xs.h, xs.w, static_cast<int>(n)});
  kernels::gemm(false, false, m, n, k, x.data(), y.data(), out.data());
  return t.record(std::move(out), {a, b}, [a, b, m, n, k](Tape& tp, const Tensor& g) {
    if (tp.requires_grad(a)) {
      // dA = G * B^T
      kernels::gemm(false, true, m, k, n, g.data(), tp.value(b).data(), tp.grad_buffer(a).data(), true);
    }
    if (tp.requires_grad(b)) {
      // dB = A^T * G
      kernels::gemm(true, false, k, n, m, tp.value(a).data(), g.data(), tp.grad_buffer(b).data(), true);
    }
  });
}

Var transpose(Var m) {
  Tape& t = tape_of(m);
  const Tensor& x = t.value(m);
  const std::size_t rows = x.shape().rows();
  const std::size_t cols = x.shape().cols();
  Tensor out({1, 1, static_cast<int>(cols), static_cast<int>(rows)});
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) out[j * rows + i] = x[i * cols + j];
  }
  return t.record(std::move(out), {m}, [m, rows, cols](Tape& tp, const Tensor& g) {
    auto gi = tp.grad_buffer(m).data();
    for (std::size_t i = 0; i < rows; ++i) {
      for (std::size_t j = 0; j < cols; ++j) gi[i * cols + j] += g[j * rows + i];
    }
  });
}

Var concat_channels(Var a, Var b) {
  same_tape(a, b);
  Tape& t = tape_of(a);
  const Tensor& x = t.value(a);
  const Tensor& y = t.value(b);
  const Shape& xs = x.shape();
  const Shape& ys = y.shape();
  if (xs.n != ys.n || xs.h != ys.h || xs.w != ys.w) {
    throw ShapeError(fmt::format("concat_channels: spatial shapes {} and {} differ", xs.str(), ys.str()));
  }
  const std::size_t ca = xs.cols();
  const std::size_t cb = ys.cols();
  const std::size_t rows = xs.rows();
  Tensor out({xs.n, xs.h, xs.w, xs.c + ys.c});
  for (std::size_t r = 0; r < rows; ++r) {
    std::copy_n(&x.data()[r * ca], ca, &out.data()[r * (ca + cb)]);
    std::copy_n(&y.data()[r * cb], cb, &out.data()[r * (ca + cb) + ca]);
  }
  return t.record(std::move(out), {a, b}, [a, b, ca, cb, rows](Tape& tp, const Tensor& g) {
    if (tp.requires_grad(a)) {
      auto ga = tp.grad_buffer(a).data();
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t j = 0; j < ca; ++j) ga[r * ca + j] += g[r * (ca + cb) + j];
      }
    }
    if (tp.requires_grad(b)) {
      auto gb = tp.grad_buffer(b).data();
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t j = 0; j < cb; ++j) gb[r * cb + j] += g[r * (ca + cb) + ca + j];
      }
    }
  });
}

Var pad_replicate(Var input, int height, int width) {
  Tape& t = tape_of(input);
  const Tensor& x = t.value(input);
  const Shape& s = x.shape();
  if (height < s.h || width < s.w || s.h == 0 || s.w == 0) {
    throw ShapeError(fmt::format("pad_replicate: cannot pad {} to {}x{}", s.str(), height, width));
  }
  Tensor out({s.n, height, width, s.c});
  for (int n = 0; n < s.n; ++n) {
    for (int y = 0; y < height; ++y) {
      for (int xx = 0; xx < width; ++xx) {
        std::copy_n(&x.data()[x.offset(n, std::min(y, s.h - 1), std::min(xx, s.w - 1), 0)], s.c,
                    &out.data()[out.offset(n, y, xx, 0)]);
      }
    }
  }
  return t.record(std::move(out), {input}, [input, height, width](Tape& tp, const Tensor& g) {
    Tensor& gi = tp.grad_buffer(input);
    const Shape& is = gi.shape();
    for (int n = 0; n < is.n; ++n) {
      for (int y = 0; y < height; ++y) {
        for (int xx = 0; xx < width; ++xx) {
          const std::size_t src = g.offset(n, y, xx, 0);
          const std::size_t dst = gi.offset(n, std::min(y, is.h - 1), std::min(xx, is.w - 1), 0);
          for (int c = 0; c < is.c; ++c) gi[dst + c] += g[src + c];
        }
      }
    }
  });
}

Var crop(Var input, int height, int width) {
  Tape& t = tape_of(input);
  const Tensor& x = t.value(input);
  const Shape& s = x.shape();
  if (height > s.h || width > s.w || height < 0 || width < 0) {
    throw ShapeError(fmt::format("crop: cannot crop {} to {}x{}", s.str(), height, width));
  }
  Tensor out({s.n, height, width, s.c});
  for (int n = 0; n < s.n; ++n) {
    for (int y = 0; y < height; ++y) {
      std::copy_n(&x.data()[x.offset(n, y, 0, 0)], static_cast<std::size_t>(width) * s.c,
                  &out.data()[out.offset(n, y, 0, 0)]);
    }
  }
  return t.record(std::move(out), {input}, [input, height, width](Tape& tp, const Tensor& g) {
    Tensor& gi = tp.grad_buffer(input);
    const int c = gi.shape().c;
    for (int n = 0; n < gi.shape().n; ++n) {
      for (int y = 0; y < height; ++y) {
        const std::size_t src = g.offset(n, y, 0, 0);
        const std::size_t dst = gi.offset(n, y, 0, 0);
        for (std::size_t i = 0; i < static_cast<std::size_t>(width) * c; ++i) gi[dst + i] += g[src + i];
      }
    }
  });
}

Var reshape(Var input, Shape shape) {
  Tape& t = tape_of(input);
  Tensor out = t.value(input).reshaped(shape);
  return t.record(std::move(out), {input}, [input](Tape& tp, const Tensor& g) {
    auto gi = tp.grad_buffer(input).data();
    for (std::size_t i = 0; i < gi.size(); ++i) gi[i] += g[i];
  });
}

}  // namespace nlsal
