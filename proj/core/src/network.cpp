#include "cine/network.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "cine/fft.hpp"

namespace cine {

std::string to_string(ModelMode m) { return m == ModelMode::Multichannel ? "multichannel" : "single-channel"; }
std::string to_string(ReconBlock b) { return b == ReconBlock::Admm3 ? "admm3" : "d5c5"; }

ModelMode parse_model_mode(const std::string& s) {
  if (s == "multichannel") return ModelMode::Multichannel;
  if (s == "single-channel") return ModelMode::SingleChannel;
  throw ConfigError("unknown model mode '" + s + "' (expected multichannel or single-channel)");
}

ReconBlock parse_recon_block(const std::string& s) {
  if (s == "admm3") return ReconBlock::Admm3;
  if (s == "d5c5") return ReconBlock::D5C5;
  throw ConfigError("unknown recon block '" + s + "' (expected admm3 or d5c5)");
}

namespace {

std::string format_lambda(double v) {
  if (std::isinf(v)) return "inf";
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

double parse_lambda(const std::string& s) {
  if (s == "inf") return std::numeric_limits<double>::infinity();
  std::size_t pos = 0;
  const double v = std::stod(s, &pos);
  if (pos != s.size()) throw ConfigError("invalid number '" + s + "'");
  return v;
}

std::size_t parse_count(const KeyValues& kv, const std::string& key, std::size_t fallback) {
  if (!kv.contains(key)) return fallback;
  const std::string& s = kv.get(key);
  std::size_t pos = 0;
  const unsigned long v = std::stoul(s, &pos);
  if (pos != s.size()) throw ConfigError("invalid integer for " + key + ": '" + s + "'");
  return v;
}

}  // namespace

void ModelConfig::validate() const {
  if (iterations < 1) throw ConfigError("model.N must be >= 1");
  if (width < 1) throw ConfigError("model.width must be >= 1");
  if (depth < 2) throw ConfigError("model.depth must be >= 2");
  if (kernel % 2 == 0) throw ConfigError("model.kernel must be odd");
  if (cascades < 1 || cascade_depth < 2) throw ConfigError("d5c5 needs >= 1 cascade of >= 2 layers");
  if (!(dc_lambda > 0.0)) throw ConfigError("model.dc_lambda must be > 0");
  if (nc < 1) throw ConfigError("coil count must be >= 1");
}

KeyValues ModelConfig::to_key_values() const {
  KeyValues kv;
  kv.set("model.mode", to_string(mode));
  kv.set("model.block", to_string(block));
  kv.set("model.N", std::to_string(iterations));
  kv.set("model.width", std::to_string(width));
  kv.set("model.depth", std::to_string(depth));
  kv.set("model.kernel", std::to_string(kernel));
  kv.set("model.cascades", std::to_string(cascades));
  kv.set("model.cascade_depth", std::to_string(cascade_depth));
  kv.set("model.dc_lambda", format_lambda(dc_lambda));
  kv.set("model.nc", std::to_string(nc));
  return kv;
}

ModelConfig ModelConfig::from_key_values(const KeyValues& kv) {
  ModelConfig c;
  if (kv.contains("model.mode")) c.mode = parse_model_mode(kv.get("model.mode"));
  if (kv.contains("model.block")) c.block = parse_recon_block(kv.get("model.block"));
  c.iterations = parse_count(kv, "model.N", c.iterations);
  c.width = parse_count(kv, "model.width", c.width);
  c.depth = parse_count(kv, "model.depth", c.depth);
  c.kernel = parse_count(kv, "model.kernel", c.kernel);
  c.cascades = parse_count(kv, "model.cascades", c.cascades);
  c.cascade_depth = parse_count(kv, "model.cascade_depth", c.cascade_depth);
  if (kv.contains("model.dc_lambda")) c.dc_lambda = parse_lambda(kv.get("model.dc_lambda"));
  c.nc = parse_count(kv, "model.nc", c.nc);
  c.validate();
  return c;
}

namespace {

template <typename T>
ConvNet<T> make_net(std::size_t in, std::size_t out, std::size_t width, std::size_t depth, std::size_t k) {
  ConvNet<T> net;
  for (std::size_t l = 0; l < depth; ++l) {
    const std::size_t ci = l == 0 ? in : width;
    const std::size_t co = l + 1 == depth ? out : width;
    net.layers.push_back(ConvLayer<T>{Tensor<T>({co, ci, k, k}), Tensor<T>({co})});
  }
  return net;
}

template <typename P, typename Fn>
void visit_net(P& net, const std::string& prefix, Fn&& fn) {
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    fn(prefix + "/conv" + std::to_string(l) + ".w", net.layers[l].weight);
    fn(prefix + "/conv" + std::to_string(l) + ".b", net.layers[l].bias);
  }
}

template <typename M, typename Fn>
void visit_model(M& params, Fn&& fn) {
  const bool single = params.config.mode == ModelMode::SingleChannel;
  for (std::size_t s = 0; s < params.stacks.size(); ++s) {
    const std::string stack = single ? std::string("single") : "coil" + std::to_string(s);
    auto& st = params.stacks[s];
    for (std::size_t b = 0; b < st.blocks.size(); ++b) {
      const std::string block = stack + "/block" + std::to_string(b);
      visit_net(st.blocks[b].gamma, block + "/gamma", fn);
      visit_net(st.blocks[b].pi, block + "/pi", fn);
      visit_net(st.blocks[b].lambda, block + "/lambda", fn);
      fn(block + "/eta/scale.w", st.blocks[b].eta);
    }
    for (std::size_t c = 0; c < st.cascades.size(); ++c) {
      visit_net(st.cascades[c], stack + "/cascade" + std::to_string(c) + "/cnn", fn);
    }
  }
  visit_net(params.combine, "combine/block0/net", fn);
}

template <typename U, typename T>
ConvNet<U> cast_net(const ConvNet<T>& n) {
  ConvNet<U> out;
  for (const auto& l : n.layers) out.layers.push_back(ConvLayer<U>{l.weight.template cast<U>(), l.bias.template cast<U>()});
  return out;
}

}  // namespace

template <typename T>
ModelParams<T> zero_model(const ModelConfig& cfg) {
  cfg.validate();
  ModelParams<T> p;
  p.config = cfg;
  const std::size_t w = cfg.width, k = cfg.kernel;
  for (std::size_t s = 0; s < cfg.stacks(); ++s) {
    ReconStack<T> stack;
    if (cfg.block == ReconBlock::Admm3) {
      for (std::size_t b = 0; b < cfg.iterations; ++b) {
        stack.blocks.push_back(AdmmBlockParams<T>{make_net<T>(4, 2, w, cfg.depth, k), make_net<T>(6, 2, w, cfg.depth, k),
                                                  make_net<T>(2, 2, w, cfg.depth, k), Tensor<T>({1})});
      }
    } else {
      for (std::size_t c = 0; c < cfg.cascades; ++c) stack.cascades.push_back(make_net<T>(2, 2, w, cfg.cascade_depth, k));
    }
    p.stacks.push_back(std::move(stack));
  }
  if (cfg.mode == ModelMode::Multichannel) p.combine = make_net<T>(2 * cfg.nc, 2, w, cfg.depth, k);
  return p;
}

template <typename T>
void for_each_parameter(ModelParams<T>& params, const std::function<void(const std::string&, Tensor<T>&)>& fn) {
  visit_model(params, fn);
}

template <typename T>
void for_each_parameter(const ModelParams<T>& params,
                        const std::function<void(const std::string&, const Tensor<T>&)>& fn) {
  visit_model(params, fn);
}

template <typename T>
std::size_t parameter_count(const ModelParams<T>& params) {
  std::size_t n = 0;
  for_each_parameter<T>(params, [&n](const std::string&, const Tensor<T>& t) { n += t.size(); });
  return n;
}

template <typename U, typename T>
ModelParams<U> cast_model(const ModelParams<T>& params) {
  ModelParams<U> out;
  out.config = params.config;
  for (const auto& st : params.stacks) {
    ReconStack<U> s;
    for (const auto& b : st.blocks) {
      s.blocks.push_back(AdmmBlockParams<U>{cast_net<U>(b.gamma), cast_net<U>(b.pi), cast_net<U>(b.lambda),
                                            b.eta.template cast<U>()});
    }
    for (const auto& c : st.cascades) s.cascades.push_back(cast_net<U>(c));
    out.stacks.push_back(std::move(s));
  }
  out.combine = cast_net<U>(params.combine);
  return out;
}

template <typename T>
Tensor<T> to_channels(const ComplexTensor<double>& z) {
  if (z.shape().size() != 2) throw DimensionError("to_channels expects [ny, nx], got " + shape_string(z.shape()));
  const std::size_t plane = z.size();
  Tensor<T> out({2, z.shape()[0], z.shape()[1]});
  for (std::size_t i = 0; i < plane; ++i) {
    out[i] = static_cast<T>(z.real[i]);
    out[plane + i] = static_cast<T>(z.imag[i]);
  }
  return out;
}

template <typename T>
ComplexTensor<double> from_channels(const Tensor<T>& x) {
  if (x.rank() != 3 || x.dim(0) != 2) throw DimensionError("from_channels expects [2, ny, nx], got " + shape_string(x.shape()));
  const std::size_t plane = x.dim(1) * x.dim(2);
  ComplexTensor<double> out({x.dim(1), x.dim(2)});
  for (std::size_t i = 0; i < plane; ++i) {
    out.real[i] = static_cast<double>(x[i]);
    out.imag[i] = static_cast<double>(x[plane + i]);
  }
  return out;
}

template <typename T>
ModelInput<T> make_model_input(const MultiCoilKSpace& m, std::size_t frame, const SamplingMask& mask,
                               const ModelConfig& cfg, const CoilSensitivities* csm) {
  if (m.shape().size() != 4) throw DimensionError("model input expects k-space [nc, nt, ny, nx]");
  const std::size_t nc = m.shape()[0], nt = m.shape()[1], ny = m.shape()[2], nx = m.shape()[3];
  if (frame >= nt || mask.nt() != nt || mask.ny() != ny) throw DimensionError("model input: frame/mask mismatch");
  if (nc != cfg.nc) {
    throw ConfigError("k-space has " + std::to_string(nc) + " coils, model expects " + std::to_string(cfg.nc));
  }
  const std::size_t plane = ny * nx;
  ModelInput<T> in;
  in.mask = std::make_shared<const Tensor<T>>(mask.plane<T>(frame, nx));

  ComplexTensor<double> coils({nc, ny, nx});
  for (std::size_t c = 0; c < nc; ++c) {
    const std::size_t off = (c * nt + frame) * plane;
    std::copy(m.real.data() + off, m.real.data() + off + plane, coils.real.data() + c * plane);
    std::copy(m.imag.data() + off, m.imag.data() + off + plane, coils.imag.data() + c * plane);
  }

  if (cfg.mode == ModelMode::Multichannel) {
    for (std::size_t c = 0; c < nc; ++c) {
      ComplexTensor<double> k({ny, nx});
      std::copy(coils.real.data() + c * plane, coils.real.data() + (c + 1) * plane, k.real.data());
      std::copy(coils.imag.data() + c * plane, coils.imag.data() + (c + 1) * plane, k.imag.data());
      in.kspace.push_back(to_channels<T>(k));
    }
    return in;
  }

  if (csm == nullptr) throw ConfigError("single-channel mode needs coil sensitivities");
  ComplexTensor<double> combined = combine_coils(ifft2(coils), *csm);
  ComplexTensor<double> k = fft2(combined);
  const Tensor<double> plane_mask = mask.plane<double>(frame, nx);
  for (std::size_t i = 0; i < plane; ++i) {
    k.real[i] *= plane_mask[i];
    k.imag[i] *= plane_mask[i];
  }
  in.kspace.push_back(to_channels<T>(k));
  return in;
}

template <typename T>
NodeId conv_net_forward(Graph<T>& g, NodeId x, const ConvNet<T>& net) {
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    x = g.conv2d(x, g.parameter(net.layers[l].weight), g.parameter(net.layers[l].bias));
    if (l + 1 < net.layers.size()) x = g.relu(x);
  }
  return x;
}

template <typename T>
AdmmState<T> admm_block_forward(Graph<T>& g, const AdmmState<T>& state, NodeId measured,
                                const std::shared_ptr<const Tensor<T>>& mask, const AdmmBlockParams<T>& params) {
  const NodeId ed = g.mask(g.fft2(state.d), mask);
  const NodeId gamma_in[] = {ed, measured};
  const NodeId alpha = conv_net_forward(g, g.concat(gamma_in), params.gamma);
  const NodeId eh_alpha = g.ifft2(g.mask(alpha, mask));
  const NodeId pi_in[] = {state.d, g.sub(state.z, state.beta), eh_alpha};
  const NodeId d = conv_net_forward(g, g.concat(pi_in), params.pi);
  const NodeId z = conv_net_forward(g, g.add(d, state.beta), params.lambda);
  const NodeId beta = g.add(state.beta, g.mul_scalar(g.sub(d, z), g.parameter(params.eta)));
  return AdmmState<T>{d, z, beta};
}

template <typename T>
NodeId dc_layer(Graph<T>& g, NodeId pred_k, NodeId measured, const std::shared_ptr<const Tensor<T>>& mask,
                double lambda) {
  return g.data_consistency(pred_k, measured, mask, lambda);
}

template <typename T>
CoilOutput<T> coil_recon_forward(Graph<T>& g, NodeId measured, const std::shared_ptr<const Tensor<T>>& mask,
                                 const ReconStack<T>& stack, const ModelConfig& cfg) {
  if (stack.blocks.empty()) throw ConfigError("reconstruction stack has no ADMM blocks");
  const NodeId d0 = g.ifft2(measured);
  AdmmState<T> state{d0, d0, g.constant(Tensor<T>(g.value(d0).shape()))};
  NodeId k = measured;
  for (const auto& block : stack.blocks) {
    state = admm_block_forward(g, state, measured, mask, block);
    k = dc_layer(g, g.fft2(state.d), measured, mask, cfg.dc_lambda);
    state.d = g.ifft2(k);
  }
  return CoilOutput<T>{state.d, k};
}

template <typename T>
CoilOutput<T> d5c5_forward(Graph<T>& g, NodeId measured, const std::shared_ptr<const Tensor<T>>& mask,
                           const ReconStack<T>& stack, const ModelConfig& cfg) {
  if (stack.cascades.empty()) throw ConfigError("reconstruction stack has no cascades");
  NodeId x = g.ifft2(measured);
  NodeId k = measured;
  for (const auto& net : stack.cascades) {
    const NodeId refined = g.add(x, conv_net_forward(g, x, net));
    k = dc_layer(g, g.fft2(refined), measured, mask, cfg.dc_lambda);
    x = g.ifft2(k);
  }
  return CoilOutput<T>{x, k};
}

template <typename T>
NodeId model_forward(Graph<T>& g, const ModelInput<T>& input, const ModelParams<T>& params,
                     std::vector<CoilOutput<T>>* coil_outputs) {
  const ModelConfig& cfg = params.config;
  if (input.kspace.size() != cfg.stacks() || params.stacks.size() != cfg.stacks()) {
    throw ConfigError("model expects " + std::to_string(cfg.stacks()) + " input stack(s) in " + to_string(cfg.mode) +
                      " mode, got " + std::to_string(input.kspace.size()));
  }
  std::vector<NodeId> images;
  for (std::size_t s = 0; s < cfg.stacks(); ++s) {
    const NodeId measured = g.constant(input.kspace[s]);
    const CoilOutput<T> out = cfg.block == ReconBlock::Admm3
                                  ? coil_recon_forward(g, measured, input.mask, params.stacks[s], cfg)
                                  : d5c5_forward(g, measured, input.mask, params.stacks[s], cfg);
    if (coil_outputs) coil_outputs->push_back(out);
    images.push_back(out.image);
  }
  if (cfg.mode == ModelMode::SingleChannel) return images.front();
  return conv_net_forward(g, g.concat(images), params.combine);
}

template <typename T>
ComplexTensor<double> reconstruct(const ModelParams<T>& params, const ModelInput<T>& input) {
  Graph<T> g;
  return from_channels(g.value(model_forward(g, input, params)));
}

template <typename T>
void save_parameters(const std::filesystem::path& dir, const ModelParams<T>& params, const KeyValues& extra) {
  std::filesystem::create_directories(dir);
  KeyValues manifest;
  manifest.set("format", "cine-checkpoint-1");
  manifest.set("dtype", sizeof(T) == 4 ? "f32" : "f64");
  const KeyValues model_keys = params.config.to_key_values();
  for (const auto& [k, v] : model_keys.entries()) manifest.set(k, v);
  for (const auto& [k, v] : extra.entries()) manifest.set(k, v);
  manifest.set("parameters", std::to_string(parameter_count(params)));
  write_key_values(dir / "manifest.txt", manifest);
  for_each_parameter<T>(params, [&dir](const std::string& name, const Tensor<T>& t) {
    write_tns(dir / (name + ".tns"), t);
  });
}

template <typename T>
ModelParams<T> load_parameters(const std::filesystem::path& dir) {
  if (!std::filesystem::exists(dir / "manifest.txt")) throw IoError("no checkpoint manifest in " + dir.string());
  const KeyValues manifest = read_key_values(dir / "manifest.txt");
  if (manifest.get_or("format", "") != "cine-checkpoint-1") throw IoError(dir.string() + ": unknown checkpoint format");
  ModelParams<T> params = zero_model<T>(ModelConfig::from_key_values(manifest));
  for_each_parameter<T>(params, [&dir](const std::string& name, Tensor<T>& t) {
    Tensor<T> loaded = read_tns_real<T>(dir / (name + ".tns"));
    if (loaded.shape() != t.shape()) {
      throw IoError(name + ": checkpoint shape " + shape_string(loaded.shape()) + ", expected " + shape_string(t.shape()));
    }
    t = std::move(loaded);
  });
  return params;
}

#define CINE_INSTANTIATE(T)                                                                                         \
  template ModelParams<T> zero_model<T>(const ModelConfig&);                                                        \
  template void for_each_parameter<T>(ModelParams<T>&, const std::function<void(const std::string&, Tensor<T>&)>&); \
  template void for_each_parameter<T>(const ModelParams<T>&,                                                        \
                                      const std::function<void(const std::string&, const Tensor<T>&)>&);            \
  template std::size_t parameter_count<T>(const ModelParams<T>&);                                                   \
  template Tensor<T> to_channels<T>(const ComplexTensor<double>&);                                                  \
  template ComplexTensor<double> from_channels<T>(const Tensor<T>&);                                                \
  template ModelInput<T> make_model_input<T>(const MultiCoilKSpace&, std::size_t, const SamplingMask&,              \
                                             const ModelConfig&, const CoilSensitivities*);                         \
  template NodeId conv_net_forward<T>(Graph<T>&, NodeId, const ConvNet<T>&);                                        \
  template AdmmState<T> admm_block_forward<T>(Graph<T>&, const AdmmState<T>&, NodeId,                               \
                                              const std::shared_ptr<const Tensor<T>>&, const AdmmBlockParams<T>&);  \
  template NodeId dc_layer<T>(Graph<T>&, NodeId, NodeId, const std::shared_ptr<const Tensor<T>>&, double);          \
  template CoilOutput<T> coil_recon_forward<T>(Graph<T>&, NodeId, const std::shared_ptr<const Tensor<T>>&,          \
                                               const ReconStack<T>&, const ModelConfig&);                           \
  template CoilOutput<T> d5c5_forward<T>(Graph<T>&, NodeId, const std::shared_ptr<const Tensor<T>>&,                \
                                         const ReconStack<T>&, const ModelConfig&);                                 \
  template NodeId model_forward<T>(Graph<T>&, const ModelInput<T>&, const ModelParams<T>&,                          \
                                   std::vector<CoilOutput<T>>*);                                                    \
  template ComplexTensor<double> reconstruct<T>(const ModelParams<T>&, const ModelInput<T>&);                       \
  template void save_parameters<T>(const std::filesystem::path&, const ModelParams<T>&, const KeyValues&);          \
  template ModelParams<T> load_parameters<T>(const std::filesystem::path&);

CINE_INSTANTIATE(float)
CINE_INSTANTIATE(double)
#undef CINE_INSTANTIATE

template ModelParams<double> cast_model<double, float>(const ModelParams<float>&);
template ModelParams<float> cast_model<float, double>(const ModelParams<double>&);
template ModelParams<double> cast_model<double, double>(const ModelParams<double>&);
template ModelParams<float> cast_model<float, float>(const ModelParams<float>&);

}  // namespace cine
