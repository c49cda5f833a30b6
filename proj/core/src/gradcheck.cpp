#include "nlsal/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace nlsal {

Tensor finite_diff_grad(const ScalarFn& fn, const Tensor& point, double eps) {
  Tensor grad(point.shape());
  Tensor probe = point;
  for (std::size_t i = 0; i < probe.size(); ++i) {
    const double original = probe[i];
    probe[i] = original + eps;
    const double up = fn(probe);
    probe[i] = original - eps;
    const double down = fn(probe);
    probe[i] = original;
    grad[i] = (up - down) / (2.0 * eps);
  }
  return grad;
}

double gradient_relative_error(std::span<const double> analytic, std::span<const double> numeric) {
  double diff = 0.0;
  double scale = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    if (!std::isfinite(analytic[i]) || !std::isfinite(numeric[i])) return INFINITY;
    diff = std::max(diff, std::abs(analytic[i] - numeric[i]));
    scale = std::max({scale, std::abs(analytic[i]), std::abs(numeric[i])});
  }
  if (scale == 0.0) return 0.0;
  return diff / scale;
}

GradCheckResult run_grad_check(const GradCheckCase& c, double eps, double tolerance) {
  Tape tape;
  std::vector<Var> vars;
  vars.reserve(c.inputs.size());
  for (const Tensor& t : c.inputs) vars.push_back(tape.leaf(t));
  const Var loss = c.build(tape, vars);
  tape.backward(loss);

  GradCheckResult result{c.name, 0.0, true};
  for (std::size_t k = 0; k < c.inputs.size(); ++k) {
    const ScalarFn fn = [&](const Tensor& probe) {
      Tape t;
      std::vector<Var> vs;
      vs.reserve(c.inputs.size());
      for (std::size_t j = 0; j < c.inputs.size(); ++j) vs.push_back(t.constant(j == k ? probe : c.inputs[j]));
      return t.value(c.build(t, vs)).item();
    };
    const Tensor numeric = finite_diff_grad(fn, c.inputs[k], eps);
    const double err = gradient_relative_error(tape.grad(vars[k]).data(), numeric.data());
    result.max_relative_error = std::max(result.max_relative_error, err);
  }
  result.passed = result.max_relative_error <= tolerance;
  return result;
}

}  // namespace nlsal
