#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "nlsal/tape.hpp"

namespace nlsal {

using ScalarFn = std::function<double(const Tensor&)>;

/// Central-difference gradient of `fn` at `point`, one element at a time.
Tensor finite_diff_grad(const ScalarFn& fn, const Tensor& point, double eps = 1e-6);

/// max_i |analytic_i - numeric_i| / max(max_i |analytic_i|, max_i |numeric_i|).
/// Returns 0 when both are all zero.
double gradient_relative_error(std::span<const double> analytic, std::span<const double> numeric);

/// A differentiable computation over a list of input tensors that ends in a
/// scalar. `build` must record its result on the tape it is given.
struct GradCheckCase {
  std::string name;
  std::vector<Tensor> inputs;
  std::function<Var(Tape&, const std::vector<Var>&)> build;
};

struct GradCheckResult {
  std::string name;
  double max_relative_error = 0.0;
  bool passed = false;
};

/// Compares Tape::backward() against finite_diff_grad for every input.
GradCheckResult run_grad_check(const GradCheckCase& c, double eps = 1e-6, double tolerance = 1e-5);

/// One case per differentiable operation plus the non-local block, the
/// cross-entropy loss and the full static network on a 16x16 frame.
std::vector<GradCheckCase> standard_grad_cases(std::uint64_t seed);

}  // namespace nlsal
