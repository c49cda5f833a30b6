#include "nlsal/kernels.hpp"

#include <algorithm>
#include <stdexcept>

#include <fmt/format.h>

namespace nlsal::kernels {

namespace {

void check_conv_operands(const Shape& input, const Shape& kernel, int stride) {
  if (stride < 1) throw std::invalid_argument(fmt::format("conv stride must be >= 1, got {}", stride));
  if (kernel.n < 1 || kernel.h < 1) {
    throw ShapeError(fmt::format("conv kernel {} has empty spatial extent", kernel.str()));
  }
  if (kernel.w != input.c) {
    throw ShapeError(fmt::format("conv kernel {} expects {} input channels, input {} has {}",
                                 kernel.str(), kernel.w, input.str(), input.c));
  }
}

// Kernel reordered to {kh, kw, cout, cin} so the input-gradient scatter runs
// contiguously over cin.
std::vector<double> swap_io(const Tensor& kernel) {
  const auto& ks = kernel.shape();
  std::vector<double> out(kernel.size());
  const auto k = kernel.data();
  for (int ky = 0; ky < ks.n; ++ky) {
    for (int kx = 0; kx < ks.h; ++kx) {
      const std::size_t base = (static_cast<std::size_t>(ky) * ks.h + kx) * ks.w * ks.c;
      for (int ci = 0; ci < ks.w; ++ci) {
        for (int co = 0; co < ks.c; ++co) {
          out[base + static_cast<std::size_t>(co) * ks.w + ci] =
              k[base + static_cast<std::size_t>(ci) * ks.c + co];
        }
      }
    }
  }
  return out;
}

}  // namespace

ConvGeometry conv_geometry(int in_h, int in_w, int kh, int kw, int stride, Padding padding) {
  if (stride < 1) throw std::invalid_argument(fmt::format("conv stride must be >= 1, got {}", stride));
  ConvGeometry g;
  if (padding == Padding::kSame) {
    g.out_h = (in_h + stride - 1) / stride;
    g.out_w = (in_w + stride - 1) / stride;
    const int pad_h = std::max((g.out_h - 1) * stride + kh - in_h, 0);
    const int pad_w = std::max((g.out_w - 1) * stride + kw - in_w, 0);
    g.pad_top = pad_h / 2;
    g.pad_left = pad_w / 2;
  } else {
    if (in_h < kh || in_w < kw) {
      throw ShapeError(fmt::format("valid conv: input {}x{} smaller than kernel {}x{}", in_h, in_w,
                                   kh, kw));
    }
    g.out_h = (in_h - kh) / stride + 1;
    g.out_w = (in_w - kw) / stride + 1;
  }
  return g;
}

Tensor conv2d(const Tensor& input, const Tensor& kernel, std::span<const double> bias, int stride,
              Padding padding) {
  const auto& is = input.shape();
  const auto& ks = kernel.shape();
  check_conv_operands(is, ks, stride);
  if (!bias.empty() && bias.size() != static_cast<std::size_t>(ks.c)) {
    throw ShapeError(fmt::format("conv bias has {} entries, kernel {} has {} outputs", bias.size(),
                                 ks.str(), ks.c));
  }
  const auto g = conv_geometry(is.h, is.w, ks.n, ks.h, stride, padding);
  Tensor out({is.n, g.out_h, g.out_w, ks.c});
  const auto x = input.data();
  const auto k = kernel.data();
  auto y = out.data();
  const std::size_t cin = static_cast<std::size_t>(is.c);
  const std::size_t cout = static_cast<std::size_t>(ks.c);

  for (int n = 0; n < is.n; ++n) {
    for (int oy = 0; oy < g.out_h; ++oy) {
      for (int ox = 0; ox < g.out_w; ++ox) {
        double* o = &y[out.offset(n, oy, ox, 0)];
        if (!bias.empty()) std::copy(bias.begin(), bias.end(), o);
        for (int ky = 0; ky < ks.n; ++ky) {
          const int iy = oy * stride - g.pad_top + ky;
          if (iy < 0 || iy >= is.h) continue;
          for (int kx = 0; kx < ks.h; ++kx) {
            const int ix = ox * stride - g.pad_left + kx;
            if (ix < 0 || ix >= is.w) continue;
            const double* xp = &x[input.offset(n, iy, ix, 0)];
            const double* kp = &k[(static_cast<std::size_t>(ky) * ks.h + kx) * cin * cout];
            for (std::size_t ci = 0; ci < cin; ++ci) {
              const double v = xp[ci];
              const double* kr = kp + ci * cout;
              for (std::size_t co = 0; co < cout; ++co) o[co] += v * kr[co];
            }
          }
        }
      }
    }
  }
  return out;
}

Tensor conv2d_grad_input(const Tensor& grad_out, const Tensor& kernel, const Shape& input_shape,
                         int stride, Padding padding) {
  const auto& ks = kernel.shape();
  check_conv_operands(input_shape, ks, stride);
  const auto g = conv_geometry(input_shape.h, input_shape.w, ks.n, ks.h, stride, padding);
  const auto& gs = grad_out.shape();
  if (gs.n != input_shape.n || gs.h != g.out_h || gs.w != g.out_w || gs.c != ks.c) {
    throw ShapeError(fmt::format("conv adjoint: gradient {} inconsistent with input {} and kernel {}",
                                 gs.str(), input_shape.str(), ks.str()));
  }
  const auto kt = swap_io(kernel);
  Tensor dx(input_shape);
  auto dxd = dx.data();
  const auto dy = grad_out.data();
  const std::size_t cin = static_cast<std::size_t>(ks.w);
  const std::size_t cout = static_cast<std::size_t>(ks.c);

  for (int n = 0; n < gs.n; ++n) {
    for (int oy = 0; oy < gs.h; ++oy) {
      for (int ox = 0; ox < gs.w; ++ox) {
        const double* dyp = &dy[grad_out.offset(n, oy, ox, 0)];
        for (int ky = 0; ky < ks.n; ++ky) {
          const int iy = oy * stride - g.pad_top + ky;
          if (iy < 0 || iy >= input_shape.h) continue;
          for (int kx = 0; kx < ks.h; ++kx) {
            const int ix = ox * stride - g.pad_left + kx;
            if (ix < 0 || ix >= input_shape.w) continue;
            double* dxp = &dxd[dx.offset(n, iy, ix, 0)];
            const double* kp = &kt[(static_cast<std::size_t>(ky) * ks.h + kx) * cin * cout];
            for (std::size_t co = 0; co < cout; ++co) {
              const double v = dyp[co];
              const double* kr = kp + co * cin;
              for (std::size_t ci = 0; ci < cin; ++ci) dxp[ci] += v * kr[ci];
            }
          }
        }
      }
    }
  }
  return dx;
}

Tensor conv2d_grad_kernel(const Tensor& input, const Tensor& grad_out, const Shape& kernel_shape,
                          int stride, Padding padding) {
  const auto& is = input.shape();
  const auto& ks = kernel_shape;
  check_conv_operands(is, ks, stride);
  const auto g = conv_geometry(is.h, is.w, ks.n, ks.h, stride, padding);
  const auto& gs = grad_out.shape();
  if (gs.n != is.n || gs.h != g.out_h || gs.w != g.out_w || gs.c != ks.c) {
    throw ShapeError(fmt::format("conv adjoint: gradient {} inconsistent with input {} and kernel {}",
                                 gs.str(), is.str(), ks.str()));
  }
  Tensor dk(ks);
  auto dkd = dk.data();
  const auto x = input.data();
  const auto dy = grad_out.data();
  const std::size_t cin = static_cast<std::size_t>(ks.w);
  const std::size_t cout = static_cast<std::size_t>(ks.c);

  for (int n = 0; n < gs.n; ++n) {
    for (int oy = 0; oy < gs.h; ++oy) {
      for (int ox = 0; ox < gs.w; ++ox) {
        const double* dyp = &dy[grad_out.offset(n, oy, ox, 0)];
        for (int ky = 0; ky < ks.n; ++ky) {
          const int iy = oy * stride - g.pad_top + ky;
          if (iy < 0 || iy >= is.h) continue;
          for (int kx = 0; kx < ks.h; ++kx) {
            const int ix = ox * stride - g.pad_left + kx;
            if (ix < 0 || ix >= is.w) continue;
            const double* xp = &x[input.offset(n, iy, ix, 0)];
            double* dkp = &dkd[(static_cast<std::size_t>(ky) * ks.h + kx) * cin * cout];
            for (std::size_t ci = 0; ci < cin; ++ci) {
              const double v = xp[ci];
              double* dkr = dkp + ci * cout;
              for (std::size_t co = 0; co < cout; ++co) dkr[co] += v * dyp[co];
            }
          }
        }
      }
    }
  }
  return dk;
}

std::vector<double> channel_sums(const Tensor& grad_out) {
  const std::size_t c = grad_out.shape().cols();
  std::vector<double> sums(c, 0.0);
  const auto d = grad_out.data();
  for (std::size_t i = 0; i < d.size(); i += c) {
    for (std::size_t j = 0; j < c; ++j) sums[j] += d[i + j];
  }
  return sums;
}

Shape conv2d_transpose_shape(const Shape& input, const Shape& kernel, int stride) {
  if (stride < 1) {
    throw std::invalid_argument(fmt::format("transposed conv stride must be >= 1, got {}", stride));
  }
  if (kernel.c != input.c) {
    throw ShapeError(fmt::format("transposed conv kernel {} expects {} input channels, input {} has {}",
                                 kernel.str(), kernel.c, input.str(), input.c));
  }
  return {input.n, input.h * stride, input.w * stride, kernel.w};
}

Tensor conv2d_transpose(const Tensor& input, const Tensor& kernel, std::span<const double> bias,
                        int stride) {
  const Shape out_shape = conv2d_transpose_shape(input.shape(), kernel.shape(), stride);
  if (!bias.empty() && bias.size() != static_cast<std::size_t>(out_shape.c)) {
    throw ShapeError(fmt::format("transposed conv bias has {} entries, expected {}", bias.size(),
                                 out_shape.c));
  }
  Tensor out = conv2d_grad_input(input, kernel, out_shape, stride, Padding::kSame);
  if (!bias.empty()) {
    auto d = out.data();
    const std::size_t c = bias.size();
    for (std::size_t i = 0; i < d.size(); i += c) {
      for (std::size_t j = 0; j < c; ++j) d[i + j] += bias[j];
    }
  }
  return out;
}

Tensor maxpool2d(const Tensor& input, int window, std::vector<std::size_t>* argmax) {
  if (window < 1) throw std::invalid_argument(fmt::format("pool window must be >= 1, got {}", window));
  const auto& is = input.shape();
  const int oh = (is.h + window - 1) / window;
  const int ow = (is.w + window - 1) / window;
  Tensor out({is.n, oh, ow, is.c});
  if (argmax != nullptr) argmax->assign(out.size(), 0);
  const auto x = input.data();
  auto y = out.data();

  for (int n = 0; n < is.n; ++n) {
    for (int oy = 0; oy < oh; ++oy) {
      for (int ox = 0; ox < ow; ++ox) {
        for (int c = 0; c < is.c; ++c) {
          std::size_t best = input.offset(n, std::min(oy * window, is.h - 1),
                                          std::min(ox * window, is.w - 1), c);
          for (int dy = 0; dy < window; ++dy) {
            const int iy = std::min(oy * window + dy, is.h - 1);
            for (int dx = 0; dx < window; ++dx) {
              const int ix = std::min(ox * window + dx, is.w - 1);
              const std::size_t idx = input.offset(n, iy, ix, c);
              if (x[idx] > x[best]) best = idx;
            }
          }
          const std::size_t o = out.offset(n, oy, ox, c);
          y[o] = x[best];
          if (argmax != nullptr) (*argmax)[o] = best;
        }
      }
    }
  }
  return out;
}

namespace {

std::vector<double> transpose_copy(std::span<const double> src, std::size_t rows, std::size_t cols) {
  std::vector<double> dst(rows * cols);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) dst[j * rows + i] = src[i * cols + j];
  }
  return dst;
}

}  // namespace

void gemm(bool trans_a, bool trans_b, std::size_t m, std::size_t n, std::size_t k,
          std::span<const double> a, std::span<const double> b, std::span<double> c,
          bool accumulate) {
  if (a.size() != m * k || b.size() != k * n || c.size() != m * n) {
    throw ShapeError(fmt::format("gemm operand sizes {}, {}, {} do not match m={} n={} k={}",
                                 a.size(), b.size(), c.size(), m, n, k));
  }
  std::vector<double> a_buf;
  std::vector<double> b_buf;
  if (trans_a) {
    a_buf = transpose_copy(a, k, m);
    a = a_buf;
  }
  if (trans_b) {
    b_buf = transpose_copy(b, n, k);
    b = b_buf;
  }
  if (!accumulate) std::fill(c.begin(), c.end(), 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    double* ci = &c[i * n];
    const double* ai = &a[i * k];
    for (std::size_t p = 0; p < k; ++p) {
      const double v = ai[p];
      const double* bp = &b[p * n];
      for (std::size_t j = 0; j < n; ++j) ci[j] += v * bp[j];
    }
  }
}

}  // namespace nlsal::kernels
