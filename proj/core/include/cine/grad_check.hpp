#pragma once

#include <cstdint>
#include <functional>

#include "cine/graph.hpp"

namespace cine {

struct GradCheckOptions {
  double step = 1e-4;
  // Skip coordinates with |x_i| < step (kinks of relu applied to the checked input).
  bool skip_near_zero = false;
  // Seeds the random projection used to reduce a non-scalar output to a scalar.
  std::uint64_t seed = 7;
};

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t checked = 0;
  std::size_t skipped = 0;
};

// |analytic - numeric| / max(|analytic|, |numeric|, 1e-8)
double relative_error(double analytic, double numeric);

using GraphOp = std::function<NodeId(Graph<double>&, NodeId)>;

// Central-difference check of reverse-mode gradients of `op` at `point`.
// Throws NumericError if any evaluation is NaN.
GradCheckResult grad_check(const GraphOp& op, const Tensor<double>& point, const GradCheckOptions& options = {});

}  // namespace cine
