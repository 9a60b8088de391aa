#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cine/baselines.hpp"
#include "cine/io.hpp"
#include "cine/network.hpp"
#include "cine/pipeline.hpp"
#include "cine/training.hpp"

namespace recon {

struct PhantomOptions {
  std::size_t nx = 32;
  std::size_t ny = 32;
  std::size_t nt = 8;
  std::size_t count = 16;
  double motion = 0.75;  // wall excursion in pixels
  friend bool operator==(const PhantomOptions&, const PhantomOptions&) = default;
};

enum class EvalPhantom { HeldOut, Training };

struct EvalOptions {
  cine::MaskSpec mask{cine::MaskPattern::Gaussian, 4, 4};
  std::string name = "eval";
  std::string checkpoint = "final";  // final | best
  EvalPhantom phantom = EvalPhantom::HeldOut;
  bool lps = false;
  cine::LpsConfig lps_config;
  double error_range = 0.25;
  long yt_x = -1;  // -1: nx / 2
};

struct ExperimentConfig {
  std::uint64_t seed = 1;
  std::string out = "results";
  PhantomOptions phantom;
  std::size_t nc = 4;
  cine::MaskSpec acquisition{cine::MaskPattern::Uniform, 4, 4};
  cine::MaskSpec retro{cine::MaskPattern::Gaussian, 4, 4};
  std::size_t retro_draws = 4;
  cine::ModelConfig model;  // model.nc follows nc
  cine::TrainConfig train;  // train.seed is derived from seed
  EvalOptions eval;
  std::vector<std::string> report_inputs;
  std::string report_name = "report";

  static ExperimentConfig from_key_values(const cine::KeyValues& kv);
  // Every schema key in schema order, including defaults.
  cine::KeyValues to_key_values() const;
  void validate() const;
};

struct SchemaEntry {
  std::string key;
  std::string fallback;
  std::string help;
};

const std::vector<SchemaEntry>& config_schema();

ExperimentConfig load_config(const std::filesystem::path& path);

// Independent RNG stream for `stream` / `index` under the global seed.
enum class Stream : std::uint64_t {
  Coils = 1,
  Phantom,
  Acquisition,
  Retro,
  Init,
  Shuffle,
  EvalPhantom,
  EvalMask,
};
std::uint64_t derive_seed(std::uint64_t seed, Stream stream, std::uint64_t index = 0);

}  // namespace recon
