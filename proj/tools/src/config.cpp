#include "recon/config.hpp"

#include "cine/fft.hpp"

#include <charconv>
#include <cmath>
#include <limits>
#include <random>
#include <set>
#include <sstream>

namespace recon {

using cine::ConfigError;

const std::vector<SchemaEntry>& config_schema() {
  static const std::vector<SchemaEntry> schema = {
      {"seed", "1", "global seed; every random stream is derived from it"},
      {"out", "results", "output root directory"},
      {"phantom.nx", "32", "image width (power of two)"},
      {"phantom.ny", "32", "image height (power of two)"},
      {"phantom.nt", "8", "frames per cine series"},
      {"phantom.count", "16", "training phantoms"},
      {"phantom.motion", "0.75", "wall excursion in pixels"},
      {"coils.nc", "4", "receive coils"},
      {"acq.pattern", "uniform", "interleaved acquisition pattern: uniform | gaussian"},
      {"acq.R", "4", "acquisition acceleration: 4 | 8"},
      {"acq.center_lines", "4", "fully sampled centre lines per frame (even)"},
      {"retro.pattern", "gaussian", "retrospective undersampling pattern: uniform | gaussian"},
      {"retro.R", "4", "retrospective acceleration: 4 | 8"},
      {"retro.center_lines", "4", "centre lines kept by retrospective masks (even)"},
      {"retro.draws", "4", "retrospective masks per phantom"},
      {"model.mode", "multichannel", "multichannel | single-channel"},
      {"model.block", "admm3", "admm3 | d5c5"},
      {"model.N", "8", "unrolled ADMM blocks per stack"},
      {"model.width", "16", "hidden channels per conv layer"},
      {"model.depth", "3", "conv layers per sub-network"},
      {"model.kernel", "3", "conv kernel size (odd)"},
      {"model.cascades", "5", "d5c5 cascades"},
      {"model.cascade_depth", "5", "d5c5 conv layers per cascade"},
      {"model.dc_lambda", "inf", "data-consistency weight, inf for hard replacement"},
      {"train.lr0", "0.001", "initial learning rate"},
      {"train.decay", "0.98", "learning-rate decay per epoch"},
      {"train.batch", "2", "minibatch size"},
      {"train.epochs", "50", "epochs"},
      {"train.threads", "0", "batch workers; 0 uses RECON_THREADS or all cores"},
      {"eval.pattern", "gaussian", "test-time pattern: uniform | gaussian | full"},
      {"eval.R", "4", "test-time acceleration: 4 | 8"},
      {"eval.center_lines", "4", "test-time centre lines (even)"},
      {"eval.name", "eval", "results subdirectory"},
      {"eval.checkpoint", "final", "final | best"},
      {"eval.phantom", "heldout", "heldout | training (first training phantom)"},
      {"eval.lps", "false", "also run the L+S baseline"},
      {"eval.lps.lambda_l", "0.01", "L+S nuclear-norm weight"},
      {"eval.lps.lambda_s", "0.01", "L+S temporal-sparsity weight"},
      {"eval.lps.iters", "50", "L+S iterations"},
      {"eval.error_range", "0.25", "error-map display range [0, value]"},
      {"eval.yt_x", "-1", "column of the y-t profile; -1 for nx/2"},
      {"report.inputs", "", "comma-separated results directories"},
      {"report.name", "report", "report subdirectory"},
  };
  return schema;
}

namespace {

std::string format_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

class Reader {
 public:
  explicit Reader(const cine::KeyValues& kv) : kv_(kv) {}

  const std::string& str(const std::string& key) const {
    if (kv_.contains(key)) return kv_.get(key);
    for (const auto& e : config_schema()) {
      if (e.key == key) return e.fallback;
    }
    throw ConfigError("no schema entry for " + key);
  }

  std::uint64_t u64(const std::string& key) const {
    const std::string& s = str(key);
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) throw ConfigError(key + ": expected an unsigned integer, got '" + s + "'");
    return v;
  }

  std::size_t size(const std::string& key) const { return static_cast<std::size_t>(u64(key)); }

  long i64(const std::string& key) const {
    const std::string& s = str(key);
    long v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) throw ConfigError(key + ": expected an integer, got '" + s + "'");
    return v;
  }

  double real(const std::string& key) const {
    const std::string& s = str(key);
    if (s == "inf") return std::numeric_limits<double>::infinity();
    try {
      std::size_t pos = 0;
      const double v = std::stod(s, &pos);
      if (pos == s.size() && std::isfinite(v)) return v;
    } catch (const std::exception&) {
    }
    throw ConfigError(key + ": expected a number, got '" + s + "'");
  }

  bool flag(const std::string& key) const {
    const std::string& s = str(key);
    if (s == "true") return true;
    if (s == "false") return false;
    throw ConfigError(key + ": expected true or false, got '" + s + "'");
  }

  cine::MaskSpec mask(const std::string& prefix) const {
    cine::MaskSpec spec;
    try {
      spec.pattern = cine::parse_mask_pattern(str(prefix + ".pattern"));
    } catch (const ConfigError& e) {
      throw ConfigError(prefix + ".pattern: " + e.what());
    }
    spec.acceleration = size(prefix + ".R");
    spec.center_lines = size(prefix + ".center_lines");
    return spec;
  }

 private:
  const cine::KeyValues& kv_;
};

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

void check_mask(const cine::MaskSpec& spec, const std::string& prefix, bool allow_full) {
  if (spec.pattern == cine::MaskPattern::Full && !allow_full) throw ConfigError(prefix + ".pattern must be uniform or gaussian");
  if (spec.pattern != cine::MaskPattern::Full && spec.acceleration != 4 && spec.acceleration != 8) {
    throw ConfigError(prefix + ".R must be 4 or 8, got " + std::to_string(spec.acceleration));
  }
  if (spec.center_lines % 2 != 0) throw ConfigError(prefix + ".center_lines must be even");
}

}  // namespace

ExperimentConfig ExperimentConfig::from_key_values(const cine::KeyValues& kv) {
  std::set<std::string> known;
  for (const auto& e : config_schema()) known.insert(e.key);
  for (const auto& [key, value] : kv.entries()) {
    if (!known.count(key)) throw ConfigError("unknown config key '" + key + "'");
  }

  const Reader r(kv);
  ExperimentConfig c;
  c.seed = r.u64("seed");
  c.out = r.str("out");
  c.phantom.nx = r.size("phantom.nx");
  c.phantom.ny = r.size("phantom.ny");
  c.phantom.nt = r.size("phantom.nt");
  c.phantom.count = r.size("phantom.count");
  c.phantom.motion = r.real("phantom.motion");
  c.nc = r.size("coils.nc");
  c.acquisition = r.mask("acq");
  c.retro = r.mask("retro");
  c.retro_draws = r.size("retro.draws");

  cine::KeyValues model_kv;
  for (const auto& [key, value] : kv.entries()) {
    if (key.starts_with("model.")) model_kv.set(key, value);
  }
  model_kv.set("model.nc", std::to_string(c.nc));
  c.model = cine::ModelConfig::from_key_values(model_kv);

  c.train.lr0 = r.real("train.lr0");
  c.train.decay = r.real("train.decay");
  c.train.batch = r.size("train.batch");
  c.train.epochs = r.size("train.epochs");
  c.train.threads = r.size("train.threads");
  c.train.seed = derive_seed(c.seed, Stream::Shuffle);

  c.eval.mask = r.mask("eval");
  c.eval.name = r.str("eval.name");
  c.eval.checkpoint = r.str("eval.checkpoint");
  const std::string& phantom = r.str("eval.phantom");
  if (phantom == "heldout") {
    c.eval.phantom = EvalPhantom::HeldOut;
  } else if (phantom == "training") {
    c.eval.phantom = EvalPhantom::Training;
  } else {
    throw ConfigError("eval.phantom must be heldout or training, got '" + phantom + "'");
  }
  c.eval.lps = r.flag("eval.lps");
  c.eval.lps_config.lambda_l = r.real("eval.lps.lambda_l");
  c.eval.lps_config.lambda_s = r.real("eval.lps.lambda_s");
  c.eval.lps_config.iters = r.size("eval.lps.iters");
  c.eval.error_range = r.real("eval.error_range");
  c.eval.yt_x = r.i64("eval.yt_x");
  c.report_inputs = split_list(r.str("report.inputs"));
  c.report_name = r.str("report.name");
  c.validate();
  return c;
}

cine::KeyValues ExperimentConfig::to_key_values() const {
  cine::KeyValues kv;
  kv.set("seed", std::to_string(seed));
  kv.set("out", out);
  kv.set("phantom.nx", std::to_string(phantom.nx));
  kv.set("phantom.ny", std::to_string(phantom.ny));
  kv.set("phantom.nt", std::to_string(phantom.nt));
  kv.set("phantom.count", std::to_string(phantom.count));
  kv.set("phantom.motion", format_double(phantom.motion));
  kv.set("coils.nc", std::to_string(nc));
  auto mask = [&kv](const std::string& prefix, const cine::MaskSpec& spec) {
    kv.set(prefix + ".pattern", cine::to_string(spec.pattern));
    kv.set(prefix + ".R", std::to_string(spec.acceleration));
    kv.set(prefix + ".center_lines", std::to_string(spec.center_lines));
  };
  mask("acq", acquisition);
  mask("retro", retro);
  kv.set("retro.draws", std::to_string(retro_draws));
  const cine::KeyValues model_keys = model.to_key_values();
  for (const auto& [key, value] : model_keys.entries()) {
    if (key != "model.nc") kv.set(key, value);
  }
  kv.set("train.lr0", format_double(train.lr0));
  kv.set("train.decay", format_double(train.decay));
  kv.set("train.batch", std::to_string(train.batch));
  kv.set("train.epochs", std::to_string(train.epochs));
  kv.set("train.threads", std::to_string(train.threads));
  mask("eval", eval.mask);
  kv.set("eval.name", eval.name);
  kv.set("eval.checkpoint", eval.checkpoint);
  kv.set("eval.phantom", eval.phantom == EvalPhantom::HeldOut ? "heldout" : "training");
  kv.set("eval.lps", eval.lps ? "true" : "false");
  kv.set("eval.lps.lambda_l", format_double(eval.lps_config.lambda_l));
  kv.set("eval.lps.lambda_s", format_double(eval.lps_config.lambda_s));
  kv.set("eval.lps.iters", std::to_string(eval.lps_config.iters));
  kv.set("eval.error_range", format_double(eval.error_range));
  kv.set("eval.yt_x", std::to_string(eval.yt_x));
  std::string inputs;
  for (const auto& d : report_inputs) inputs += (inputs.empty() ? "" : ",") + d;
  kv.set("report.inputs", inputs);
  kv.set("report.name", report_name);
  return kv;
}

void ExperimentConfig::validate() const {
  if (!cine::is_power_of_two(phantom.nx) || !cine::is_power_of_two(phantom.ny)) {
    throw ConfigError("phantom.nx and phantom.ny must be powers of two");
  }
  if (phantom.nt < 2) throw ConfigError("phantom.nt must be >= 2");
  if (phantom.count < 1) throw ConfigError("phantom.count must be >= 1");
  if (phantom.motion < 0.0) throw ConfigError("phantom.motion must be >= 0");
  if (nc < 1) throw ConfigError("coils.nc must be >= 1");
  check_mask(acquisition, "acq", false);
  check_mask(retro, "retro", false);
  check_mask(eval.mask, "eval", true);
  if (retro_draws < 1) throw ConfigError("retro.draws must be >= 1");
  model.validate();
  train.validate();
  if (eval.checkpoint != "final" && eval.checkpoint != "best") throw ConfigError("eval.checkpoint must be final or best");
  if (eval.name.empty() || report_name.empty()) throw ConfigError("eval.name and report.name must be non-empty");
  if (eval.lps) eval.lps_config.validate();
  if (!(eval.error_range > 0.0)) throw ConfigError("eval.error_range must be > 0");
  if (eval.yt_x < -1 || eval.yt_x >= static_cast<long>(phantom.nx)) throw ConfigError("eval.yt_x out of range");
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  return ExperimentConfig::from_key_values(cine::read_key_values(path));
}

std::uint64_t derive_seed(std::uint64_t seed, Stream stream, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(index),
                    static_cast<std::uint32_t>(index >> 32)};
  return std::mt19937_64(seq)();
}

}  // namespace recon
