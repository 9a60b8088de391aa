#include "cine/graph.hpp"

#include <Eigen/Core>
#include <cmath>
#include <string>

#include "cine/fft.hpp"

namespace cine {

std::string_view op_name(OpKind kind) {
  switch (kind) {
    case OpKind::Constant: return "constant";
    case OpKind::Variable: return "variable";
    case OpKind::Parameter: return "parameter";
    case OpKind::Conv2d: return "conv2d";
    case OpKind::Relu: return "relu";
    case OpKind::Add: return "add";
    case OpKind::Sub: return "sub";
    case OpKind::Scale: return "scale";
    case OpKind::MulScalar: return "mul_scalar";
    case OpKind::Concat: return "concat";
    case OpKind::Slice: return "slice";
    case OpKind::Fft2: return "fft2";
    case OpKind::Ifft2: return "ifft2";
    case OpKind::Mask: return "mask";
    case OpKind::DataConsistency: return "data_consistency";
    case OpKind::Mse: return "mse";
    case OpKind::Sum: return "sum";
    case OpKind::WeightedSum: return "weighted_sum";
  }
  return "unknown";
}

namespace {

template <typename T>
using RowMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatrixMap = Eigen::Map<RowMatrix<T>>;
template <typename T>
using ConstMatrixMap = Eigen::Map<const RowMatrix<T>>;

struct ConvGeometry {
  std::size_t c_in, c_out, h, w, k;
};

template <typename T>
ConvGeometry conv_geometry(const Tensor<T>& input, const Tensor<T>& kernel, const Tensor<T>& bias) {
  if (input.rank() != 3) throw DimensionError("conv2d input must be [c,h,w], got " + shape_string(input.shape()));
  if (kernel.rank() != 4) throw DimensionError("conv2d kernel must be [o,c,k,k], got " + shape_string(kernel.shape()));
  const ConvGeometry g{input.dim(0), kernel.dim(0), input.dim(1), input.dim(2), kernel.dim(2)};
  if (kernel.dim(1) != g.c_in || kernel.dim(3) != g.k || g.k % 2 == 0) {
    throw DimensionError("conv2d kernel " + shape_string(kernel.shape()) + " incompatible with input " +
                         shape_string(input.shape()));
  }
  if (bias.rank() != 1 || bias.dim(0) != g.c_out) {
    throw DimensionError("conv2d bias " + shape_string(bias.shape()) + " does not match " + std::to_string(g.c_out) +
                         " output channels");
  }
  return g;
}

// Unfolds zero-padded k x k neighbourhoods: cols[(c*k+dy)*k+dx, y*w+x].
template <typename T>
std::vector<T> im2col(const Tensor<T>& input, const ConvGeometry& g) {
  const std::size_t hw = g.h * g.w;
  const long pad = static_cast<long>(g.k / 2);
  std::vector<T> cols(g.c_in * g.k * g.k * hw, T{0});
  for (std::size_t c = 0; c < g.c_in; ++c) {
    const T* plane = input.data() + c * hw;
    for (std::size_t dy = 0; dy < g.k; ++dy) {
      for (std::size_t dx = 0; dx < g.k; ++dx) {
        T* row = cols.data() + ((c * g.k + dy) * g.k + dx) * hw;
        const long oy = static_cast<long>(dy) - pad;
        const long ox = static_cast<long>(dx) - pad;
        for (std::size_t y = 0; y < g.h; ++y) {
          const long sy = static_cast<long>(y) + oy;
          if (sy < 0 || sy >= static_cast<long>(g.h)) continue;
          const std::size_t x0 = ox < 0 ? static_cast<std::size_t>(-ox) : 0;
          const std::size_t x1 = ox > 0 ? g.w - static_cast<std::size_t>(ox) : g.w;
          const T* src = plane + static_cast<std::size_t>(sy) * g.w;
          T* dst = row + y * g.w;
          for (std::size_t x = x0; x < x1; ++x) dst[x] = src[static_cast<long>(x) + ox];
        }
      }
    }
  }
  return cols;
}

template <typename T>
void col2im_accumulate(const std::vector<T>& cols, const ConvGeometry& g, Tensor<T>& out) {
  const std::size_t hw = g.h * g.w;
  const long pad = static_cast<long>(g.k / 2);
  for (std::size_t c = 0; c < g.c_in; ++c) {
    T* plane = out.data() + c * hw;
    for (std::size_t dy = 0; dy < g.k; ++dy) {
      for (std::size_t dx = 0; dx < g.k; ++dx) {
        const T* row = cols.data() + ((c * g.k + dy) * g.k + dx) * hw;
        const long oy = static_cast<long>(dy) - pad;
        const long ox = static_cast<long>(dx) - pad;
        for (std::size_t y = 0; y < g.h; ++y) {
          const long sy = static_cast<long>(y) + oy;
          if (sy < 0 || sy >= static_cast<long>(g.h)) continue;
          const std::size_t x0 = ox < 0 ? static_cast<std::size_t>(-ox) : 0;
          const std::size_t x1 = ox > 0 ? g.w - static_cast<std::size_t>(ox) : g.w;
          T* dst = plane + static_cast<std::size_t>(sy) * g.w;
          const T* src = row + y * g.w;
          for (std::size_t x = x0; x < x1; ++x) dst[static_cast<long>(x) + ox] += src[x];
        }
      }
    }
  }
}

template <typename T>
ComplexTensor<T> as_complex(const Tensor<T>& x) {
  if (x.rank() != 3 || x.dim(0) != 2) throw DimensionError("expected complex image [2,h,w], got " + shape_string(x.shape()));
  const std::size_t plane = x.dim(1) * x.dim(2);
  const Shape s{x.dim(1), x.dim(2)};
  std::vector<T> re(x.data(), x.data() + plane);
  std::vector<T> im(x.data() + plane, x.data() + 2 * plane);
  return ComplexTensor<T>(Tensor<T>(s, std::move(re)), Tensor<T>(s, std::move(im)));
}

template <typename T>
Tensor<T> as_channels(const ComplexTensor<T>& z) {
  const std::size_t plane = z.size();
  std::vector<T> data(2 * plane);
  std::copy(z.real.values().begin(), z.real.values().end(), data.begin());
  std::copy(z.imag.values().begin(), z.imag.values().end(), data.begin() + static_cast<long>(plane));
  return Tensor<T>({2, z.shape()[0], z.shape()[1]}, std::move(data));
}

template <typename T>
Tensor<T> transform_channels(const Tensor<T>& x, bool inverse) {
  const ComplexTensor<T> z = as_complex(x);
  return as_channels(inverse ? ifft2(z) : fft2(z));
}

template <typename T>
void require_mask_plane(const Tensor<T>& x, const Tensor<T>& mask, const char* what) {
  if (x.rank() != 3 || mask.rank() != 2 || mask.dim(0) != x.dim(1) || mask.dim(1) != x.dim(2)) {
    throw DimensionError(std::string(what) + ": mask " + shape_string(mask.shape()) + " vs tensor " +
                         shape_string(x.shape()));
  }
}

}  // namespace

template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& input, const Tensor<T>& kernel, const Tensor<T>& bias) {
  const ConvGeometry g = conv_geometry(input, kernel, bias);
  const std::size_t hw = g.h * g.w;
  const std::size_t patch = g.c_in * g.k * g.k;
  const std::vector<T> cols = im2col(input, g);
  Tensor<T> out({g.c_out, g.h, g.w});
  MatrixMap<T> out_m(out.data(), static_cast<long>(g.c_out), static_cast<long>(hw));
  ConstMatrixMap<T> w_m(kernel.data(), static_cast<long>(g.c_out), static_cast<long>(patch));
  ConstMatrixMap<T> c_m(cols.data(), static_cast<long>(patch), static_cast<long>(hw));
  out_m.noalias() = w_m * c_m;
  for (std::size_t o = 0; o < g.c_out; ++o) {
    T* row = out.data() + o * hw;
    for (std::size_t i = 0; i < hw; ++i) row[i] += bias[o];
  }
  return out;
}

template <typename T>
NodeId Graph<T>::push(Node node) {
  if (!node.value.all_finite()) {
    throw NumericError("non-finite value produced by " + std::string(op_name(node.kind)));
  }
  for (std::size_t in : node.inputs) node.requires_grad = node.requires_grad || nodes_[in].requires_grad;
  nodes_.push_back(std::move(node));
  return NodeId{nodes_.size() - 1};
}

template <typename T>
NodeId Graph<T>::constant(Tensor<T> value) {
  return push(Node{.kind = OpKind::Constant, .value = std::move(value)});
}

template <typename T>
NodeId Graph<T>::variable(Tensor<T> value) {
  return push(Node{.kind = OpKind::Variable, .value = std::move(value), .requires_grad = true});
}

template <typename T>
NodeId Graph<T>::parameter(const Tensor<T>& param) {
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].kind == OpKind::Parameter && nodes_[i].bound == &param) return NodeId{i};
  }
  return push(Node{.kind = OpKind::Parameter, .value = param, .requires_grad = true, .bound = &param});
}

template <typename T>
NodeId Graph<T>::conv2d(NodeId input, NodeId kernel, NodeId bias) {
  Tensor<T> out = conv2d_forward(value(input), value(kernel), value(bias));
  return push(Node{.kind = OpKind::Conv2d, .inputs = {input.index, kernel.index, bias.index}, .value = std::move(out)});
}

template <typename T>
NodeId Graph<T>::relu(NodeId x) {
  Tensor<T> out = value(x);
  for (T& v : out.values()) v = v > T{0} ? v : T{0};
  return push(Node{.kind = OpKind::Relu, .inputs = {x.index}, .value = std::move(out)});
}

template <typename T>
NodeId Graph<T>::add(NodeId a, NodeId b) {
  require_same_shape(value(a).shape(), value(b).shape(), "add");
  Tensor<T> out = value(a);
  const Tensor<T>& vb = value(b);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += vb[i];
  return push(Node{.kind = OpKind::Add, .inputs = {a.index, b.index}, .value = std::move(out)});
}

template <typename T>
NodeId Graph<T>::sub(NodeId a, NodeId b) {
  require_same_shape(value(a).shape(), value(b).shape(), "sub");
  Tensor<T> out = value(a);
  const Tensor<T>& vb = value(b);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= vb[i];
  return push(Node{.kind = OpKind::Sub, .inputs = {a.index, b.index}, .value = std::move(out)});
}

template <typename T>
NodeId Graph<T>::scale(NodeId x, T factor) {
  Tensor<T> out = value(x);
  for (T& v : out.values()) v *= factor;
  return push(Node{.kind = OpKind::Scale, .inputs = {x.index}, .value = std::move(out), .factor = factor});
}

template <typename T>
NodeId Graph<T>::mul_scalar(NodeId x, NodeId scalar) {
  if (value(scalar).size() != 1) throw DimensionError("mul_scalar expects a single-element scalar tensor");
  const T s = value(scalar)[0];
  Tensor<T> out = value(x);
  for (T& v : out.values()) v *= s;
  return push(Node{.kind = OpKind::MulScalar, .inputs = {x.index, scalar.index}, .value = std::move(out)});
}

template <typename T>
NodeId Graph<T>::concat(std::span<const NodeId> parts) {
  if (parts.empty()) throw DimensionError("concat of nothing");
  Shape shape = value(parts[0]).shape();
  if (shape.empty()) throw DimensionError("concat needs rank >= 1");
  std::size_t lead = 0;
  std::vector<std::size_t> inputs;
  for (NodeId p : parts) {
    const Shape& s = value(p).shape();
    if (s.size() != shape.size() || !std::equal(s.begin() + 1, s.end(), shape.begin() + 1)) {
      throw DimensionError("concat: " + shape_string(s) + " incompatible with " + shape_string(shape));
    }
    lead += s[0];
    inputs.push_back(p.index);
  }
  shape[0] = lead;
  std::vector<T> data;
  data.reserve(shape_size(shape));
  for (NodeId p : parts) data.insert(data.end(), value(p).values().begin(), value(p).values().end());
  return push(Node{.kind = OpKind::Concat, .inputs = std::move(inputs), .value = Tensor<T>(shape, std::move(data))});
}

template <typename T>
NodeId Graph<T>::slice(NodeId x, std::size_t begin, std::size_t count) {
  const Tensor<T>& v = value(x);
  if (v.rank() == 0 || begin + count > v.dim(0)) throw DimensionError("slice out of range for " + shape_string(v.shape()));
  Shape shape = v.shape();
  shape[0] = count;
  const std::size_t inner = v.size() / v.dim(0);
  std::vector<T> data(v.data() + begin * inner, v.data() + (begin + count) * inner);
  return push(Node{.kind = OpKind::Slice,
                   .inputs = {x.index},
                   .value = Tensor<T>(shape, std::move(data)),
                   .begin = begin});
}

template <typename T>
NodeId Graph<T>::fft2(NodeId x) {
  return push(Node{.kind = OpKind::Fft2, .inputs = {x.index}, .value = transform_channels(value(x), false)});
}

template <typename T>
NodeId Graph<T>::ifft2(NodeId x) {
  return push(Node{.kind = OpKind::Ifft2, .inputs = {x.index}, .value = transform_channels(value(x), true)});
}

template <typename T>
NodeId Graph<T>::mask(NodeId x, MaskPtr mask) {
  const Tensor<T>& v = value(x);
  require_mask_plane(v, *mask, "mask");
  Tensor<T> out = v;
  const std::size_t plane = mask->size();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= (*mask)[i % plane];
  return push(Node{.kind = OpKind::Mask, .inputs = {x.index}, .value = std::move(out), .aux = std::move(mask)});
}

template <typename T>
NodeId Graph<T>::data_consistency(NodeId pred, NodeId measured, MaskPtr mask, double lambda) {
  if (!(lambda > 0.0)) throw ConfigError("data consistency lambda must be > 0, got " + std::to_string(lambda));
  const Tensor<T>& p = value(pred);
  const Tensor<T>& m = value(measured);
  require_same_shape(p.shape(), m.shape(), "data_consistency");
  require_mask_plane(p, *mask, "data_consistency");
  const bool hard = std::isinf(lambda);
  const T lam = static_cast<T>(lambda);
  Tensor<T> out = p;
  const std::size_t plane = mask->size();
  for (std::size_t i = 0; i < out.size(); ++i) {
    if ((*mask)[i % plane] == T{0}) continue;
    out[i] = hard ? m[i] : (p[i] + lam * m[i]) / (T{1} + lam);
  }
  return push(Node{.kind = OpKind::DataConsistency,
                   .inputs = {pred.index, measured.index},
                   .value = std::move(out),
                   .lambda = lambda,
                   .aux = std::move(mask)});
}

template <typename T>
NodeId Graph<T>::mse(NodeId a, NodeId b) {
  const Tensor<T>& va = value(a);
  const Tensor<T>& vb = value(b);
  require_same_shape(va.shape(), vb.shape(), "mse");
  if (va.size() == 0) throw DimensionError("mse of empty tensors");
  T acc{0};
  for (std::size_t i = 0; i < va.size(); ++i) {
    const T d = va[i] - vb[i];
    acc += d * d;
  }
  return push(Node{.kind = OpKind::Mse,
                   .inputs = {a.index, b.index},
                   .value = Tensor<T>({1}, std::vector<T>{acc / static_cast<T>(va.size())})});
}

template <typename T>
NodeId Graph<T>::sum(NodeId x) {
  T acc{0};
  for (T v : value(x).values()) acc += v;
  return push(Node{.kind = OpKind::Sum, .inputs = {x.index}, .value = Tensor<T>({1}, std::vector<T>{acc})});
}

template <typename T>
NodeId Graph<T>::weighted_sum(NodeId x, MaskPtr weights) {
  const Tensor<T>& v = value(x);
  require_same_shape(v.shape(), weights->shape(), "weighted_sum");
  T acc{0};
  for (std::size_t i = 0; i < v.size(); ++i) acc += (*weights)[i] * v[i];
  return push(Node{.kind = OpKind::WeightedSum,
                   .inputs = {x.index},
                   .value = Tensor<T>({1}, std::vector<T>{acc}),
                   .aux = std::move(weights)});
}

template <typename T>
Tensor<T>& Graph<T>::grad_slot(std::size_t index) {
  Node& n = nodes_[index];
  if (n.grad.size() != n.value.size() || n.grad.shape() != n.value.shape()) n.grad = Tensor<T>(n.value.shape());
  return n.grad;
}

template <typename T>
void Graph<T>::backward(NodeId loss) {
  if (loss.index >= nodes_.size()) throw ContractError("backward: unknown loss node");
  if (value(loss).size() != 1) {
    throw ContractError("backward: loss must be scalar, got shape " + shape_string(value(loss).shape()));
  }
  for (Node& n : nodes_) n.grad = Tensor<T>();
  grad_slot(loss.index)[0] = T{1};
  for (std::size_t i = loss.index + 1; i-- > 0;) {
    if (nodes_[i].requires_grad && !nodes_[i].grad.empty()) backward_node(i);
  }
}

template <typename T>
void Graph<T>::backward_node(std::size_t index) {
  // nodes_ is never resized during backward, so these references stay valid.
  const Node& n = nodes_[index];
  const Tensor<T>& gout = n.grad;
  auto wants = [&](std::size_t k) { return nodes_[n.inputs[k]].requires_grad; };

  switch (n.kind) {
    case OpKind::Constant:
    case OpKind::Variable:
    case OpKind::Parameter:
      return;
    case OpKind::Conv2d: {
      const Tensor<T>& input = nodes_[n.inputs[0]].value;
      const Tensor<T>& kernel = nodes_[n.inputs[1]].value;
      const ConvGeometry g = conv_geometry(input, kernel, nodes_[n.inputs[2]].value);
      const std::size_t hw = g.h * g.w;
      const std::size_t patch = g.c_in * g.k * g.k;
      ConstMatrixMap<T> dout(gout.data(), static_cast<long>(g.c_out), static_cast<long>(hw));
      if (wants(1)) {
        const std::vector<T> cols = im2col(input, g);
        ConstMatrixMap<T> c_m(cols.data(), static_cast<long>(patch), static_cast<long>(hw));
        Tensor<T>& dk = grad_slot(n.inputs[1]);
        MatrixMap<T> dk_m(dk.data(), static_cast<long>(g.c_out), static_cast<long>(patch));
        dk_m.noalias() += dout * c_m.transpose();
      }
      if (wants(2)) {
        Tensor<T>& db = grad_slot(n.inputs[2]);
        for (std::size_t o = 0; o < g.c_out; ++o) {
          T acc{0};
          for (std::size_t i = 0; i < hw; ++i) acc += gout[o * hw + i];
          db[o] += acc;
        }
      }
      if (wants(0)) {
        std::vector<T> dcols(patch * hw);
        MatrixMap<T> dc_m(dcols.data(), static_cast<long>(patch), static_cast<long>(hw));
        ConstMatrixMap<T> w_m(kernel.data(), static_cast<long>(g.c_out), static_cast<long>(patch));
        dc_m.noalias() = w_m.transpose() * dout;
        col2im_accumulate(dcols, g, grad_slot(n.inputs[0]));
      }
      return;
    }
    case OpKind::Relu: {
      const Tensor<T>& x = nodes_[n.inputs[0]].value;
      Tensor<T>& dx = grad_slot(n.inputs[0]);
      for (std::size_t i = 0; i < x.size(); ++i) dx[i] += x[i] > T{0} ? gout[i] : T{0};
      return;
    }
    case OpKind::Add:
    case OpKind::Sub: {
      const T sign = n.kind == OpKind::Add ? T{1} : T{-1};
      if (wants(0)) {
        Tensor<T>& da = grad_slot(n.inputs[0]);
        for (std::size_t i = 0; i < gout.size(); ++i) da[i] += gout[i];
      }
      if (wants(1)) {
        Tensor<T>& db = grad_slot(n.inputs[1]);
        for (std::size_t i = 0; i < gout.size(); ++i) db[i] += sign * gout[i];
      }
      return;
    }
    case OpKind::Scale: {
      Tensor<T>& dx = grad_slot(n.inputs[0]);
      for (std::size_t i = 0; i < gout.size(); ++i) dx[i] += n.factor * gout[i];
      return;
    }
    case OpKind::MulScalar: {
      const Tensor<T>& x = nodes_[n.inputs[0]].value;
      const T s = nodes_[n.inputs[1]].value[0];
      if (wants(0)) {
        Tensor<T>& dx = grad_slot(n.inputs[0]);
        for (std::size_t i = 0; i < gout.size(); ++i) dx[i] += s * gout[i];
      }
      if (wants(1)) {
        T acc{0};
        for (std::size_t i = 0; i < gout.size(); ++i) acc += x[i] * gout[i];
        grad_slot(n.inputs[1])[0] += acc;
      }
      return;
    }
    case OpKind::Concat: {
      std::size_t offset = 0;
      for (std::size_t k = 0; k < n.inputs.size(); ++k) {
        const std::size_t len = nodes_[n.inputs[k]].value.size();
        if (wants(k)) {
          Tensor<T>& dp = grad_slot(n.inputs[k]);
          for (std::size_t i = 0; i < len; ++i) dp[i] += gout[offset + i];
        }
        offset += len;
      }
      return;
    }
    case OpKind::Slice: {
      const Tensor<T>& x = nodes_[n.inputs[0]].value;
      const std::size_t inner = x.size() / x.dim(0);
      Tensor<T>& dx = grad_slot(n.inputs[0]);
      for (std::size_t i = 0; i < gout.size(); ++i) dx[n.begin * inner + i] += gout[i];
      return;
    }
    case OpKind::Fft2:
    case OpKind::Ifft2: {
      // Unitary: the adjoint of F is its inverse.
      const Tensor<T> back = transform_channels(gout, n.kind == OpKind::Fft2);
      Tensor<T>& dx = grad_slot(n.inputs[0]);
      for (std::size_t i = 0; i < back.size(); ++i) dx[i] += back[i];
      return;
    }
    case OpKind::Mask: {
      const Tensor<T>& m = *n.aux;
      Tensor<T>& dx = grad_slot(n.inputs[0]);
      for (std::size_t i = 0; i < gout.size(); ++i) dx[i] += m[i % m.size()] * gout[i];
      return;
    }
    case OpKind::DataConsistency: {
      const Tensor<T>& m = *n.aux;
      const bool hard = std::isinf(n.lambda);
      const T lam = static_cast<T>(n.lambda);
      const T keep = hard ? T{0} : T{1} / (T{1} + lam);
      const T take = hard ? T{1} : lam / (T{1} + lam);
      if (wants(0)) {
        Tensor<T>& dp = grad_slot(n.inputs[0]);
        for (std::size_t i = 0; i < gout.size(); ++i) dp[i] += (m[i % m.size()] == T{0} ? T{1} : keep) * gout[i];
      }
      if (wants(1)) {
        Tensor<T>& dm = grad_slot(n.inputs[1]);
        for (std::size_t i = 0; i < gout.size(); ++i) dm[i] += (m[i % m.size()] == T{0} ? T{0} : take) * gout[i];
      }
      return;
    }
    case OpKind::Mse: {
      const Tensor<T>& a = nodes_[n.inputs[0]].value;
      const Tensor<T>& b = nodes_[n.inputs[1]].value;
      const T coef = T{2} * gout[0] / static_cast<T>(a.size());
      if (wants(0)) {
        Tensor<T>& da = grad_slot(n.inputs[0]);
        for (std::size_t i = 0; i < a.size(); ++i) da[i] += coef * (a[i] - b[i]);
      }
      if (wants(1)) {
        Tensor<T>& db = grad_slot(n.inputs[1]);
        for (std::size_t i = 0; i < a.size(); ++i) db[i] -= coef * (a[i] - b[i]);
      }
      return;
    }
    case OpKind::Sum: {
      Tensor<T>& dx = grad_slot(n.inputs[0]);
      for (T& v : dx.values()) v += gout[0];
      return;
    }
    case OpKind::WeightedSum: {
      const Tensor<T>& w = *n.aux;
      Tensor<T>& dx = grad_slot(n.inputs[0]);
      for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += w[i] * gout[0];
      return;
    }
  }
}

template <typename T>
Tensor<T> Graph<T>::grad(NodeId id) const {
  const Node& n = node(id);
  if (n.grad.empty() && !n.value.empty()) return Tensor<T>(n.value.shape());
  return n.grad;
}

template <typename T>
Tensor<T> Graph<T>::parameter_grad(const Tensor<T>& param) const {
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].kind == OpKind::Parameter && nodes_[i].bound == &param) return grad(NodeId{i});
  }
  return Tensor<T>(param.shape());
}

template class Graph<float>;
template class Graph<double>;
template Tensor<float> conv2d_forward(const Tensor<float>&, const Tensor<float>&, const Tensor<float>&);
template Tensor<double> conv2d_forward(const Tensor<double>&, const Tensor<double>&, const Tensor<double>&);

}  // namespace cine
