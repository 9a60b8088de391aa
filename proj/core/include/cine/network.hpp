#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "cine/encoding.hpp"
#include "cine/graph.hpp"
#include "cine/io.hpp"

namespace cine {

enum class ModelMode { Multichannel, SingleChannel };
enum class ReconBlock { Admm3, D5C5 };

std::string to_string(ModelMode m);
std::string to_string(ReconBlock b);
ModelMode parse_model_mode(const std::string& s);
ReconBlock parse_recon_block(const std::string& s);

struct ModelConfig {
  ModelMode mode = ModelMode::Multichannel;
  ReconBlock block = ReconBlock::Admm3;
  std::size_t iterations = 8;  // unrolled ADMM blocks per stack
  std::size_t width = 16;      // hidden channels of every conv layer
  std::size_t depth = 3;       // conv layers in each of gamma / pi / lambda and in the combine net
  std::size_t kernel = 3;
  std::size_t cascades = 5;    // d5c5: cascades per stack
  std::size_t cascade_depth = 5;
  double dc_lambda = std::numeric_limits<double>::infinity();
  std::size_t nc = 4;

  void validate() const;
  // Number of reconstruction stacks: nc in multichannel mode, 1 otherwise.
  std::size_t stacks() const { return mode == ModelMode::Multichannel ? nc : 1; }

  KeyValues to_key_values() const;
  static ModelConfig from_key_values(const KeyValues& kv);
  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

template <typename T>
struct ConvLayer {
  Tensor<T> weight;  // [out, in, k, k]
  Tensor<T> bias;    // [out]
};

// conv -> relu -> ... -> conv; the final layer is linear.
template <typename T>
struct ConvNet {
  std::vector<ConvLayer<T>> layers;
};

template <typename T>
struct AdmmBlockParams {
  ConvNet<T> gamma;   // concat(E d, m): 4 -> 2 channels
  ConvNet<T> pi;      // concat(d, z - beta, E^H alpha): 6 -> 2
  ConvNet<T> lambda;  // d + beta: 2 -> 2
  Tensor<T> eta;      // [1]
};

template <typename T>
struct ReconStack {
  std::vector<AdmmBlockParams<T>> blocks;  // admm3
  std::vector<ConvNet<T>> cascades;        // d5c5
};

template <typename T>
struct ModelParams {
  ModelConfig config;
  std::vector<ReconStack<T>> stacks;
  ConvNet<T> combine;  // empty in single-channel mode
};

// All-zero parameters of the right shapes; eta = 0.
template <typename T>
ModelParams<T> zero_model(const ModelConfig& cfg);

// Visits every parameter tensor in a fixed order with its checkpoint name,
// e.g. "coil0/block1/gamma/conv2.w", "combine/block0/net/conv0.b".
template <typename T>
void for_each_parameter(ModelParams<T>& params, const std::function<void(const std::string&, Tensor<T>&)>& fn);
template <typename T>
void for_each_parameter(const ModelParams<T>& params,
                        const std::function<void(const std::string&, const Tensor<T>&)>& fn);

template <typename T>
std::size_t parameter_count(const ModelParams<T>& params);

template <typename U, typename T>
ModelParams<U> cast_model(const ModelParams<T>& params);

// Network input for one frame: per-stack k-space [2, ny, nx] and the FFT-ordered mask plane.
template <typename T>
struct ModelInput {
  std::vector<Tensor<T>> kspace;
  std::shared_ptr<const Tensor<T>> mask;
};

// Extracts `frame` of m [nc, nt, ny, nx]. In single-channel mode the coils are first
// combined with conj(csm) and the combined image's k-space is masked again.
template <typename T>
ModelInput<T> make_model_input(const MultiCoilKSpace& m, std::size_t frame, const SamplingMask& mask,
                               const ModelConfig& cfg, const CoilSensitivities* csm);

template <typename T>
struct AdmmState {
  NodeId d, z, beta;
};

template <typename T>
NodeId conv_net_forward(Graph<T>& g, NodeId x, const ConvNet<T>& net);

// One ADMM-Net-III iteration with single-coil E = P F:
//   alpha = Gamma(E d, m);  d' = Pi(d, z - beta, E^H alpha);  z' = Lambda(d' + beta);
//   beta' = beta + eta (d' - z')
template <typename T>
AdmmState<T> admm_block_forward(Graph<T>& g, const AdmmState<T>& state, NodeId measured,
                                const std::shared_ptr<const Tensor<T>>& mask, const AdmmBlockParams<T>& params);

template <typename T>
NodeId dc_layer(Graph<T>& g, NodeId pred_k, NodeId measured, const std::shared_ptr<const Tensor<T>>& mask,
                double lambda);

template <typename T>
struct CoilOutput {
  NodeId image;   // [2, ny, nx]
  NodeId kspace;  // k-space after the last DC layer
};

// d0 = ifft2(m), z0 = d0, beta0 = 0; each block is followed by a DC layer.
template <typename T>
CoilOutput<T> coil_recon_forward(Graph<T>& g, NodeId measured, const std::shared_ptr<const Tensor<T>>& mask,
                                 const ReconStack<T>& stack, const ModelConfig& cfg);

// Cascades of (conv net + residual, DC layer).
template <typename T>
CoilOutput<T> d5c5_forward(Graph<T>& g, NodeId measured, const std::shared_ptr<const Tensor<T>>& mask,
                           const ReconStack<T>& stack, const ModelConfig& cfg);

// Full model. Returns the coil-combined complex image [2, ny, nx]; per-stack outputs
// are appended to `coil_outputs` when given.
template <typename T>
NodeId model_forward(Graph<T>& g, const ModelInput<T>& input, const ModelParams<T>& params,
                     std::vector<CoilOutput<T>>* coil_outputs = nullptr);

// Graph-free convenience: evaluates the model and returns the image as complex [ny, nx].
template <typename T>
ComplexTensor<double> reconstruct(const ModelParams<T>& params, const ModelInput<T>& input);

// Checkpoint directory: one TNS1 file per parameter ("<name>.tns") plus manifest.txt.
template <typename T>
void save_parameters(const std::filesystem::path& dir, const ModelParams<T>& params, const KeyValues& extra = {});
template <typename T>
ModelParams<T> load_parameters(const std::filesystem::path& dir);

// [2, ny, nx] <-> complex [ny, nx]
template <typename T>
Tensor<T> to_channels(const ComplexTensor<double>& z);
template <typename T>
ComplexTensor<double> from_channels(const Tensor<T>& x);

}  // namespace cine
