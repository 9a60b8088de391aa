#include "cine/training.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <limits>
#include <mutex>
#include <numeric>
#include <random>
#include <thread>

namespace cine {

void TrainConfig::validate() const {
  if (!(lr0 >= 0.0) || !std::isfinite(lr0)) throw ConfigError("train.lr0 must be finite and >= 0");
  if (!(decay > 0.0 && decay <= 1.0)) throw ConfigError("train.decay must lie in (0, 1]");
  if (batch < 1) throw ConfigError("train.batch must be >= 1");
}

double lr_at(std::size_t epoch, const TrainConfig& cfg) {
  return cfg.lr0 * std::pow(cfg.decay, static_cast<double>(epoch));
}

std::size_t worker_count(std::size_t requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("RECON_THREADS")) {
    char* end = nullptr;
    const unsigned long v = std::strtoul(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return v;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn) {
  workers = std::min(std::max<std::size_t>(workers, 1), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto run = [&]() {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next = n;
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(run);
  run();
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

template <typename T>
Tensor<T> xavier_init(const Shape& shape, std::uint64_t seed) {
  double fan_in = 0.0, fan_out = 0.0;
  if (shape.size() == 1) {
    fan_in = fan_out = static_cast<double>(shape[0]);
  } else if (shape.size() >= 2) {
    const double receptive = static_cast<double>(shape_size(shape) / (shape[0] * shape[1]));
    fan_in = static_cast<double>(shape[1]) * receptive;
    fan_out = static_cast<double>(shape[0]) * receptive;
  } else {
    throw DimensionError("xavier_init needs a tensor of rank >= 1");
  }
  const double bound = std::sqrt(6.0 / (fan_in + fan_out));
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-bound, bound);
  Tensor<T> out(shape);
  for (T& v : out.values()) v = static_cast<T>(dist(rng));
  return out;
}

template <typename T>
ModelParams<T> init_model(const ModelConfig& cfg, std::uint64_t seed) {
  ModelParams<T> params = zero_model<T>(cfg);
  std::uint64_t index = 0;
  for_each_parameter<T>(params, [&](const std::string& name, Tensor<T>& t) {
    ++index;
    if (name.ends_with("eta/scale.w")) {
      t.fill(T{1});
    } else if (name.ends_with(".w")) {
      std::seed_seq seq{seed, index};
      t = xavier_init<T>(t.shape(), std::mt19937_64(seq)());
    }
  });
  return params;
}

template <typename T>
std::vector<Tensor<T>*> parameter_list(ModelParams<T>& params) {
  std::vector<Tensor<T>*> out;
  for_each_parameter<T>(params, [&out](const std::string&, Tensor<T>& t) { out.push_back(&t); });
  return out;
}

template <typename T>
AdamState<T> make_adam_state(const std::vector<Tensor<T>*>& params) {
  AdamState<T> s;
  for (const Tensor<T>* p : params) {
    s.m.emplace_back(p->shape());
    s.v.emplace_back(p->shape());
  }
  return s;
}

template <typename T>
void adam_step(const std::vector<Tensor<T>*>& params, const std::vector<Tensor<T>>& grads, AdamState<T>& state,
               double lr) {
  if (grads.size() != params.size() || state.m.size() != params.size() || state.v.size() != params.size()) {
    throw DimensionError("adam_step: " + std::to_string(params.size()) + " parameters, " +
                         std::to_string(grads.size()) + " gradients, " + std::to_string(state.m.size()) + " moments");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    require_same_shape(params[i]->shape(), grads[i].shape(), "adam_step gradient");
    require_same_shape(params[i]->shape(), state.m[i].shape(), "adam_step moment");
    if (!grads[i].all_finite()) throw NumericError("non-finite gradient in parameter tensor " + std::to_string(i));
  }
  ++state.step;
  const double b1 = state.beta1, b2 = state.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    T* p = params[i]->data();
    T* m = state.m[i].data();
    T* v = state.v[i].data();
    const T* g = grads[i].data();
    for (std::size_t k = 0; k < grads[i].size(); ++k) {
      const double gk = g[k];
      const double mk = b1 * m[k] + (1.0 - b1) * gk;
      const double vk = b2 * v[k] + (1.0 - b2) * gk * gk;
      m[k] = static_cast<T>(mk);
      v[k] = static_cast<T>(vk);
      p[k] = static_cast<T>(p[k] - lr * (mk / c1) / (std::sqrt(vk / c2) + state.eps));
    }
  }
}

double mse_loss(const ComplexTensor<double>& pred, const ComplexTensor<double>& target) {
  require_same_shape(pred.shape(), target.shape(), "mse_loss");
  if (pred.size() == 0) throw DimensionError("mse_loss of empty images");
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double dr = pred.real[i] - target.real[i];
    const double di = pred.imag[i] - target.imag[i];
    acc += dr * dr + di * di;
  }
  return acc / (2.0 * static_cast<double>(pred.size()));
}

template <typename T>
std::vector<Sample<T>> make_samples(const Dataset& dataset, const ModelConfig& cfg, const CoilSensitivities* csm) {
  std::vector<Sample<T>> out;
  out.reserve(dataset.pairs.size());
  for (const TrainingPair& p : dataset.pairs) {
    out.push_back(Sample<T>{make_model_input<T>(p.input, 0, p.mask, cfg, csm), to_channels<T>(p.target)});
  }
  return out;
}

template <typename T>
LossAndGrad<T> loss_and_gradients(const ModelParams<T>& params, const std::vector<Sample<T>>& samples,
                                  const std::vector<std::size_t>& items, std::size_t workers) {
  if (items.empty()) throw ContractError("loss_and_gradients needs at least one item");
  std::vector<const Tensor<T>*> tensors;
  for_each_parameter<T>(params, [&tensors](const std::string&, const Tensor<T>& t) { tensors.push_back(&t); });

  std::vector<LossAndGrad<T>> per_item(items.size());
  parallel_for(items.size(), workers, [&](std::size_t i) {
    const Sample<T>& s = samples.at(items[i]);
    Graph<T> g;
    const NodeId out = model_forward(g, s.input, params);
    const NodeId loss = g.mse(out, g.constant(s.target));
    g.backward(loss);
    per_item[i].loss = static_cast<double>(g.value(loss)[0]);
    per_item[i].grads.reserve(tensors.size());
    for (const Tensor<T>* t : tensors) per_item[i].grads.push_back(g.parameter_grad(*t));
  });

  LossAndGrad<T> total;
  total.grads = std::move(per_item[0].grads);
  total.loss = per_item[0].loss;
  for (std::size_t i = 1; i < per_item.size(); ++i) {
    total.loss += per_item[i].loss;
    for (std::size_t p = 0; p < total.grads.size(); ++p) {
      T* dst = total.grads[p].data();
      const T* src = per_item[i].grads[p].data();
      for (std::size_t k = 0; k < total.grads[p].size(); ++k) dst[k] += src[k];
    }
  }
  const double inv = 1.0 / static_cast<double>(items.size());
  total.loss *= inv;
  for (Tensor<T>& g : total.grads) {
    for (T& v : g.values()) v = static_cast<T>(v * inv);
  }
  return total;
}

template <typename T>
TrainResult<T> train(const ModelParams<T>& init, const TrainConfig& cfg, const std::vector<Sample<T>>& samples,
                     const EpochCallback& on_epoch) {
  cfg.validate();
  if (samples.empty()) throw ConfigError("training set is empty");
  const std::size_t workers = worker_count(cfg.threads);

  TrainResult<T> result;
  ModelParams<T> params = init;
  std::vector<Tensor<T>*> plist = parameter_list(params);
  AdamState<T> adam = make_adam_state(plist);
  result.best_params = params;
  result.best_loss = std::numeric_limits<double>::infinity();

  std::vector<std::size_t> order(samples.size());
  for (std::size_t epoch = 0; epoch < cfg.epochs && !result.diverged; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(cfg.seed + epoch);
    std::shuffle(order.begin(), order.end(), rng);
    const double lr = lr_at(epoch, cfg);
    const ModelParams<T> epoch_start = params;

    double loss_sum = 0.0;
    for (std::size_t b = 0; b < order.size(); b += cfg.batch) {
      const std::vector<std::size_t> items(order.begin() + b, order.begin() + std::min(order.size(), b + cfg.batch));
      try {
        LossAndGrad<T> lg = loss_and_gradients(params, samples, items, workers);
        if (!std::isfinite(lg.loss)) throw NumericError("loss is not finite");
        adam_step(plist, lg.grads, adam, lr);
        loss_sum += lg.loss * static_cast<double>(items.size());
      } catch (const NumericError& e) {
        result.diverged = true;
        result.failure = "epoch " + std::to_string(epoch) + ", batch " + std::to_string(b / cfg.batch) + ": " + e.what();
        break;
      }
    }
    if (result.diverged) {
      params = epoch_start;
      break;
    }
    const double mean = loss_sum / static_cast<double>(samples.size());
    result.epoch_loss.push_back(mean);
    result.epoch_lr.push_back(lr);
    if (mean < result.best_loss) {
      result.best_loss = mean;
      result.best_epoch = epoch;
      result.best_params = params;
    }
    if (on_epoch) on_epoch(epoch, mean, lr);
  }
  result.final_params = std::move(params);
  return result;
}

#define CINE_INSTANTIATE(T)                                                                                       \
  template Tensor<T> xavier_init<T>(const Shape&, std::uint64_t);                                                 \
  template ModelParams<T> init_model<T>(const ModelConfig&, std::uint64_t);                                       \
  template std::vector<Tensor<T>*> parameter_list<T>(ModelParams<T>&);                                            \
  template AdamState<T> make_adam_state<T>(const std::vector<Tensor<T>*>&);                                       \
  template void adam_step<T>(const std::vector<Tensor<T>*>&, const std::vector<Tensor<T>>&, AdamState<T>&,        \
                             double);                                                                             \
  template std::vector<Sample<T>> make_samples<T>(const Dataset&, const ModelConfig&, const CoilSensitivities*);  \
  template LossAndGrad<T> loss_and_gradients<T>(const ModelParams<T>&, const std::vector<Sample<T>>&,             \
                                                const std::vector<std::size_t>&, std::size_t);                    \
  template TrainResult<T> train<T>(const ModelParams<T>&, const TrainConfig&, const std::vector<Sample<T>>&,      \
                                   const EpochCallback&);

CINE_INSTANTIATE(float)
CINE_INSTANTIATE(double)
#undef CINE_INSTANTIATE

}  // namespace cine
