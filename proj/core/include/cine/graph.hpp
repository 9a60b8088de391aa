#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include "cine/tensor.hpp"

namespace cine {

// Handle to a node inside one Graph.
struct NodeId {
  std::size_t index = 0;
  friend bool operator==(NodeId, NodeId) = default;
};

enum class OpKind {
  Constant,
  Variable,
  Parameter,
  Conv2d,
  Relu,
  Add,
  Sub,
  Scale,
  MulScalar,
  Concat,
  Slice,
  Fft2,
  Ifft2,
  Mask,
  DataConsistency,
  Mse,
  Sum,
  WeightedSum,
};

std::string_view op_name(OpKind kind);

// Reverse-mode tape over small dense tensors. Nodes are appended in evaluation order,
// so the node vector is already a topological order. Complex images travel as
// real tensors of shape [2, h, w] (real plane, imaginary plane).
//
// One Graph is used by one thread; independent graphs share nothing.
template <typename T>
class Graph {
 public:
  using MaskPtr = std::shared_ptr<const Tensor<T>>;

  NodeId constant(Tensor<T> value);
  NodeId variable(Tensor<T> value);
  // Leaf bound to an externally owned parameter tensor. Binding the same tensor twice
  // returns the same node so gradients accumulate in one place.
  NodeId parameter(const Tensor<T>& param);

  // input [c_in,h,w], kernel [c_out,c_in,k,k] (k odd, zero "same" padding), bias [c_out]
  NodeId conv2d(NodeId input, NodeId kernel, NodeId bias);
  NodeId relu(NodeId x);
  NodeId add(NodeId a, NodeId b);
  NodeId sub(NodeId a, NodeId b);
  NodeId scale(NodeId x, T factor);
  // x times a learned scalar (shape [1])
  NodeId mul_scalar(NodeId x, NodeId scalar);
  // Concatenation along axis 0.
  NodeId concat(std::span<const NodeId> parts);
  NodeId slice(NodeId x, std::size_t begin, std::size_t count);
  // Orthonormal 2D transforms of a [2,h,w] complex image.
  NodeId fft2(NodeId x);
  NodeId ifft2(NodeId x);
  // Elementwise multiply by a constant [h,w] 0/1 plane, broadcast over axis 0.
  NodeId mask(NodeId x, MaskPtr mask);
  // k-space backfill: unsampled -> pred, sampled -> (pred + lambda*measured)/(1+lambda);
  // lambda = +inf copies measured exactly.
  NodeId data_consistency(NodeId pred, NodeId measured, MaskPtr mask, double lambda);
  NodeId mse(NodeId a, NodeId b);
  NodeId sum(NodeId x);
  NodeId weighted_sum(NodeId x, MaskPtr weights);

  const Tensor<T>& value(NodeId id) const { return nodes_.at(id.index).value; }
  OpKind kind(NodeId id) const { return nodes_.at(id.index).kind; }
  std::size_t size() const { return nodes_.size(); }

  // Populates gradients of every node that the scalar `loss` depends on.
  void backward(NodeId loss);
  // Gradient after backward(); a zero tensor for nodes the loss does not reach.
  Tensor<T> grad(NodeId id) const;
  // Gradient for a bound parameter; zero tensor if it was never bound.
  Tensor<T> parameter_grad(const Tensor<T>& param) const;

 private:
  struct Node {
    OpKind kind = OpKind::Constant;
    std::vector<std::size_t> inputs{};
    Tensor<T> value{};
    Tensor<T> grad{};
    bool requires_grad = false;
    T factor{};
    double lambda = 0.0;
    std::size_t begin = 0;
    MaskPtr aux{};
    const Tensor<T>* bound = nullptr;
  };

  NodeId push(Node node);
  const Node& node(NodeId id) const { return nodes_.at(id.index); }
  Tensor<T>& grad_slot(std::size_t index);
  void backward_node(std::size_t index);

  std::vector<Node> nodes_;
};

// Same-padded convolution outside any graph.
template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& input, const Tensor<T>& kernel, const Tensor<T>& bias);

}  // namespace cine
