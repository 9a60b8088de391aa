#include "cine/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <random>

namespace cine {

double relative_error(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
  return std::abs(analytic - numeric) / denom;
}

namespace {

struct ScalarizedOp {
  const GraphOp& op;
  std::uint64_t seed;
  mutable std::shared_ptr<const Tensor<double>> projection;

  NodeId build(Graph<double>& g, NodeId x) const {
    const NodeId y = op(g, x);
    if (g.value(y).size() == 1) return y;
    if (!projection || projection->shape() != g.value(y).shape()) {
      std::mt19937_64 rng(seed);
      std::uniform_real_distribution<double> dist(-1.0, 1.0);
      Tensor<double> w(g.value(y).shape());
      for (double& v : w.values()) v = dist(rng);
      projection = std::make_shared<const Tensor<double>>(std::move(w));
    }
    return g.weighted_sum(y, projection);
  }

  double evaluate(const Tensor<double>& point) const {
    Graph<double> g;
    const NodeId out = build(g, g.variable(point));
    const double v = g.value(out)[0];
    if (std::isnan(v)) throw NumericError("grad_check: NaN in forward evaluation");
    return v;
  }
};

}  // namespace

GradCheckResult grad_check(const GraphOp& op, const Tensor<double>& point, const GradCheckOptions& options) {
  const ScalarizedOp scalar{op, options.seed, nullptr};
  Graph<double> g;
  const NodeId x = g.variable(point);
  const NodeId loss = scalar.build(g, x);
  g.backward(loss);
  const Tensor<double> analytic = g.grad(x);

  GradCheckResult result;
  Tensor<double> probe = point;
  for (std::size_t i = 0; i < point.size(); ++i) {
    if (options.skip_near_zero && std::abs(point[i]) < options.step) {
      ++result.skipped;
      continue;
    }
    probe[i] = point[i] + options.step;
    const double plus = scalar.evaluate(probe);
    probe[i] = point[i] - options.step;
    const double minus = scalar.evaluate(probe);
    probe[i] = point[i];
    const double numeric = (plus - minus) / (2.0 * options.step);
    if (std::isnan(analytic[i]) || std::isnan(numeric)) throw NumericError("grad_check: NaN gradient");
    result.max_relative_error = std::max(result.max_relative_error, relative_error(analytic[i], numeric));
    ++result.checked;
  }
  return result;
}

}  // namespace cine
