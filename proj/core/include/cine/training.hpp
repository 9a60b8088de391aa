#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "cine/network.hpp"
#include "cine/pipeline.hpp"

namespace cine {

struct TrainConfig {
  double lr0 = 1e-3;
  double decay = 0.98;  // per epoch
  std::size_t batch = 2;
  std::size_t epochs = 50;
  std::uint64_t seed = 1;
  std::size_t threads = 0;  // 0: RECON_THREADS or hardware concurrency

  void validate() const;
};

double lr_at(std::size_t epoch, const TrainConfig& cfg);

// Worker count: `requested` if non-zero, else RECON_THREADS, else hardware concurrency.
std::size_t worker_count(std::size_t requested = 0);

// Runs fn(i) for i in [0, n) on up to `workers` threads. The first exception is rethrown.
void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn);

// Uniform in +-sqrt(6 / (fan_in + fan_out)). Conv weights [out, in, k, k] have
// fan_in = in*k*k and fan_out = out*k*k; rank-1 tensors use fan_in = fan_out = n.
template <typename T>
Tensor<T> xavier_init(const Shape& shape, std::uint64_t seed);

// Xavier weights, zero biases, eta = 1.
template <typename T>
ModelParams<T> init_model(const ModelConfig& cfg, std::uint64_t seed);

// Parameter tensors in for_each_parameter order.
template <typename T>
std::vector<Tensor<T>*> parameter_list(ModelParams<T>& params);

template <typename T>
struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t step = 0;
  std::vector<Tensor<T>> m;
  std::vector<Tensor<T>> v;
};

template <typename T>
AdamState<T> make_adam_state(const std::vector<Tensor<T>*>& params);

// Bias-corrected Adam update of every tensor in `params`. Throws NumericError naming the
// first offending tensor index if any gradient is not finite; parameters are then untouched.
template <typename T>
void adam_step(const std::vector<Tensor<T>*>& params, const std::vector<Tensor<T>>& grads, AdamState<T>& state,
               double lr);

// Mean over real and imaginary planes of the squared difference.
double mse_loss(const ComplexTensor<double>& pred, const ComplexTensor<double>& target);

template <typename T>
struct Sample {
  ModelInput<T> input;
  Tensor<T> target;  // [2, ny, nx]
};

template <typename T>
std::vector<Sample<T>> make_samples(const Dataset& dataset, const ModelConfig& cfg, const CoilSensitivities* csm);

template <typename T>
struct LossAndGrad {
  double loss = 0.0;
  std::vector<Tensor<T>> grads;  // parameter_list order
};

// Batch mean of the MSE loss and its parameter gradients. Items run on independent graphs
// and are reduced in index order, so the result does not depend on `workers`.
template <typename T>
LossAndGrad<T> loss_and_gradients(const ModelParams<T>& params, const std::vector<Sample<T>>& samples,
                                  const std::vector<std::size_t>& items, std::size_t workers = 1);

template <typename T>
struct TrainResult {
  ModelParams<T> final_params;
  ModelParams<T> best_params;
  std::size_t best_epoch = 0;
  double best_loss = 0.0;
  std::vector<double> epoch_loss;
  std::vector<double> epoch_lr;
  bool diverged = false;
  std::string failure;  // diagnostic when diverged
};

using EpochCallback = std::function<void(std::size_t epoch, double mean_loss, double lr)>;

// Mini-batch Adam. The sample order is reshuffled each epoch from seed + epoch.
// On a non-finite loss or gradient, training stops and final_params keeps the last good state.
template <typename T>
TrainResult<T> train(const ModelParams<T>& init, const TrainConfig& cfg, const std::vector<Sample<T>>& samples,
                     const EpochCallback& on_epoch = {});

}  // namespace cine
