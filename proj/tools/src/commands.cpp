#include "recon/commands.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <iostream>
#include <set>
#include <sstream>
#include <utility>

#include "cine/baselines.hpp"
#include "cine/phantom.hpp"

namespace recon {

namespace fs = std::filesystem;
using cine::ComplexTensor;
using cine::CineVolume;
using cine::MultiCoilKSpace;
using cine::Tensor;

namespace {

cine::CineVolume phantom_volume(const ExperimentConfig& cfg, std::uint64_t seed) {
  const auto& p = cfg.phantom;
  return cine::generate_phantom(cine::random_phantom(p.nx, p.ny, p.nt, seed, p.motion));
}

cine::CoilSensitivities coil_maps(const ExperimentConfig& cfg) {
  return cine::simulate_coil_sensitivities(cfg.phantom.nx, cfg.phantom.ny, cfg.nc,
                                           derive_seed(cfg.seed, Stream::Coils));
}

std::string join(const std::vector<std::size_t>& v) {
  std::string s;
  for (std::size_t x : v) s += (s.empty() ? "" : ",") + std::to_string(x);
  return s;
}

std::string frame_id(const std::string& method, std::size_t t) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "frame%02zu", t);
  return method + "/" + buf;
}

// [nc, nt, ny, nx] -> [nc, 1, ny, nx] holding frame t.
MultiCoilKSpace frame_kspace(const MultiCoilKSpace& m, std::size_t t) {
  const std::size_t nc = m.shape()[0], nt = m.shape()[1], plane = m.shape()[2] * m.shape()[3];
  MultiCoilKSpace out({nc, 1, m.shape()[2], m.shape()[3]});
  for (std::size_t c = 0; c < nc; ++c) {
    std::copy_n(m.real.data() + (c * nt + t) * plane, plane, out.real.data() + c * plane);
    std::copy_n(m.imag.data() + (c * nt + t) * plane, plane, out.imag.data() + c * plane);
  }
  return out;
}

ComplexTensor<double> frame_of(const CineVolume& v, std::size_t t) {
  const std::size_t ny = v.shape()[1], nx = v.shape()[2], plane = ny * nx;
  ComplexTensor<double> out({ny, nx});
  std::copy_n(v.real.data() + t * plane, plane, out.real.data());
  std::copy_n(v.imag.data() + t * plane, plane, out.imag.data());
  return out;
}

void set_frame(CineVolume& v, std::size_t t, const ComplexTensor<double>& img) {
  const std::size_t plane = img.size();
  std::copy_n(img.real.data(), plane, v.real.data() + t * plane);
  std::copy_n(img.imag.data(), plane, v.imag.data() + t * plane);
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

Tensor<double> scaled(Tensor<double> img, double scale) {
  for (double& v : img.values()) v *= scale;
  return img;
}

}  // namespace

PrepareResult cmd_prepare(const ExperimentConfig& cfg) {
  const Layout layout{cfg.out};
  const auto& p = cfg.phantom;
  const cine::CoilSensitivities csm = coil_maps(cfg);
  const cine::SamplingMask acq =
      cine::make_mask(cfg.acquisition, p.ny, p.nt, derive_seed(cfg.seed, Stream::Acquisition));
  const cine::EncodingConfig acq_cfg{acq, csm};

  cine::Dataset all;
  std::vector<std::size_t> retro_lines;
  for (std::size_t i = 0; i < p.count; ++i) {
    const CineVolume vol = phantom_volume(cfg, derive_seed(cfg.seed, Stream::Phantom, i));
    const MultiCoilKSpace merged = cine::merge_frames(cine::encode(vol, acq_cfg), acq);
    cine::Dataset part =
        cine::build_training_pairs(merged, csm, cfg.retro, cfg.retro_draws, derive_seed(cfg.seed, Stream::Retro, i));
    for (auto& pair : part.pairs) {
      retro_lines.push_back(pair.mask.lines_in_frame(0));
      all.pairs.push_back(std::move(pair));
    }
  }

  std::vector<std::size_t> acq_lines;
  for (std::size_t t = 0; t < p.nt; ++t) acq_lines.push_back(acq.lines_in_frame(t));
  cine::KeyValues& m = all.manifest;
  m.set("format", "cine-dataset-1");
  m.set("seed", std::to_string(cfg.seed));
  m.set("phantom.nx", std::to_string(p.nx));
  m.set("phantom.ny", std::to_string(p.ny));
  m.set("phantom.nt", std::to_string(p.nt));
  m.set("phantom.count", std::to_string(p.count));
  m.set("coils.nc", std::to_string(cfg.nc));
  m.set("acq.pattern", cine::to_string(cfg.acquisition.pattern));
  m.set("acq.R", std::to_string(cfg.acquisition.acceleration));
  m.set("acq.center_lines", std::to_string(cfg.acquisition.center_lines));
  m.set("acq.lines_per_frame", join(acq_lines));
  m.set("retro.pattern", cine::to_string(cfg.retro.pattern));
  m.set("retro.R", std::to_string(cfg.retro.acceleration));
  m.set("retro.center_lines", std::to_string(cfg.retro.center_lines));
  m.set("retro.draws", std::to_string(cfg.retro_draws));
  m.set("retro.lines_per_mask", join(retro_lines));

  const fs::path dir = layout.dataset();
  if (fs::exists(dir)) fs::remove_all(dir);
  cine::save_dataset(dir, all);
  cine::write_tns_complex(dir / "csm.tns", csm.maps);
  cine::write_tns(dir / "acq_mask.tns", acq.as_tensor());
  return PrepareResult{dir, all.pairs.size()};
}

TrainOutcome cmd_train(const ExperimentConfig& cfg) {
  const Layout layout{cfg.out};
  if (!fs::exists(layout.dataset() / "manifest.txt")) {
    throw cine::IoError("no dataset at " + layout.dataset().string() + "; run prepare first");
  }
  const cine::Dataset dataset = cine::load_dataset(layout.dataset());
  const std::size_t nc = std::stoul(dataset.manifest.get("coils.nc"));
  if (nc != cfg.nc) {
    throw cine::ConfigError("dataset has " + std::to_string(nc) + " coils, config has " + std::to_string(cfg.nc));
  }
  const cine::CoilSensitivities csm{cine::read_tns_complex<double>(layout.dataset() / "csm.tns")};
  const auto samples = cine::make_samples<float>(dataset, cfg.model, &csm);
  const auto init = cine::init_model<float>(cfg.model, derive_seed(cfg.seed, Stream::Init));

  std::string loss_csv = "epoch,mean_loss,lr\n";
  auto on_epoch = [&](std::size_t epoch, double loss, double lr) {
    loss_csv += std::to_string(epoch) + "," + cine::format_metric(loss) + "," + cine::format_metric(lr) + "\n";
    std::cerr << "epoch " << epoch + 1 << "/" << cfg.train.epochs << "  loss " << loss << "  lr " << lr << "\n";
  };
  const auto result = cine::train(init, cfg.train, samples, on_epoch);

  cine::KeyValues extra;
  extra.set("train.epochs_completed", std::to_string(result.epoch_loss.size()));
  extra.set("train.diverged", result.diverged ? "true" : "false");
  cine::KeyValues best_extra = extra;
  best_extra.set("train.best_epoch", std::to_string(result.best_epoch));
  for (const char* which : {"final", "best"}) {
    if (fs::exists(layout.checkpoint(which))) fs::remove_all(layout.checkpoint(which));
  }
  cine::save_parameters(layout.checkpoint("final"), result.final_params, extra);
  cine::save_parameters(layout.checkpoint("best"), result.best_params, best_extra);
  cine::write_text(layout.loss_csv(), loss_csv);

  TrainOutcome out{result.epoch_loss, result.diverged, result.failure};
  if (result.diverged) throw cine::NumericError("training diverged (" + result.failure + "); last good parameters kept");
  return out;
}

EvalOutcome cmd_eval(const ExperimentConfig& cfg) {
  const Layout layout{cfg.out};
  const auto& p = cfg.phantom;
  const auto params = cine::load_parameters<float>(layout.checkpoint(cfg.eval.checkpoint));
  if (params.config.nc != cfg.nc) {
    throw cine::IoError("checkpoint expects " + std::to_string(params.config.nc) + " coils, config has " +
                        std::to_string(cfg.nc));
  }
  const cine::CoilSensitivities csm = coil_maps(cfg);
  const std::uint64_t phantom_seed = cfg.eval.phantom == EvalPhantom::Training
                                         ? derive_seed(cfg.seed, Stream::Phantom, 0)
                                         : derive_seed(cfg.seed, Stream::EvalPhantom);
  const CineVolume truth = phantom_volume(cfg, phantom_seed);
  const cine::SamplingMask mask = cine::make_mask(cfg.eval.mask, p.ny, p.nt, derive_seed(cfg.seed, Stream::EvalMask));
  // Per-frame acquisition; frames are reconstructed independently, nothing is merged.
  const MultiCoilKSpace m = cine::encode(truth, cine::EncodingConfig{mask, csm});

  std::vector<std::string> methods = {"network", "zero_filled"};
  std::map<std::string, CineVolume> recon;
  std::map<std::string, std::vector<double>> runtime;
  for (const auto& name : methods) {
    recon[name] = CineVolume(truth.shape());
    runtime[name].assign(p.nt, 0.0);
  }
  for (std::size_t t = 0; t < p.nt; ++t) {
    auto start = std::chrono::steady_clock::now();
    const auto input = cine::make_model_input<float>(m, t, mask, params.config, &csm);
    set_frame(recon["network"], t, cine::reconstruct(params, input));
    runtime["network"][t] = seconds_since(start);

    start = std::chrono::steady_clock::now();
    const CineVolume zf = cine::zero_filled(frame_kspace(m, t), cine::EncodingConfig{mask.frame(t), csm});
    set_frame(recon["zero_filled"], t, frame_of(zf, 0));
    runtime["zero_filled"][t] = seconds_since(start);
  }
  if (cfg.eval.lps) {
    methods.push_back("lps");
    const auto start = std::chrono::steady_clock::now();
    recon["lps"] = cine::lps_recon(m, cine::EncodingConfig{mask, csm}, cfg.eval.lps_config);
    runtime["lps"].assign(p.nt, seconds_since(start) / static_cast<double>(p.nt));
  }

  const fs::path dir = cfg.out / fs::path(cfg.eval.name);
  if (fs::exists(dir)) fs::remove_all(dir);
  fs::create_directories(dir / "images");

  const Tensor<double> truth_mag = cine::magnitude(truth);
  const double peak = *std::max_element(truth_mag.values().begin(), truth_mag.values().end());
  const double inv_peak = peak > 0 ? 1.0 / peak : 1.0;
  const std::size_t yt_x = cfg.eval.yt_x < 0 ? p.nx / 2 : static_cast<std::size_t>(cfg.eval.yt_x);
  cine::write_pgm(dir / "images" / "reference_recon.pgm",
                  cine::to_gray8(scaled(cine::magnitude(frame_of(truth, 0)), inv_peak), 0.0, 1.0));
  cine::write_pgm(dir / "images" / "reference_yt.pgm",
                  cine::to_gray8(scaled(cine::yt_profile(truth, yt_x), inv_peak), 0.0, 1.0));

  EvalOutcome outcome{dir, methods, {}};
  std::vector<cine::MetricsRow> rows, summaries;
  for (const auto& name : methods) {
    std::vector<cine::MetricsRow> method_rows;
    for (std::size_t t = 0; t < p.nt; ++t) {
      Tensor<double> ref = cine::magnitude(frame_of(truth, t));
      Tensor<double> test = cine::magnitude(frame_of(recon[name], t));
      const double sigma = cine::second_moment_sigma(test);
      cine::normalize_to_reference(ref, test);
      method_rows.push_back(cine::MetricsRow{frame_id(name, t), cine::mse(ref, test), cine::psnr(ref, test),
                                             cine::ssim(ref, test), sigma, runtime[name][t]});
    }
    const cine::MetricsSummary s = cine::summarize(method_rows, name);
    outcome.summary[name] = s;
    rows.insert(rows.end(), method_rows.begin(), method_rows.end());
    summaries.push_back(s.mean);
    summaries.push_back(s.stddev);

    cine::write_tns_complex(dir / (name + "_recon.tns"), recon[name]);
    const Tensor<double> frame0 = scaled(cine::magnitude(frame_of(recon[name], 0)), inv_peak);
    const Tensor<double> ref0 = scaled(cine::magnitude(frame_of(truth, 0)), inv_peak);
    cine::write_pgm(dir / "images" / (name + "_recon.pgm"), cine::to_gray8(frame0, 0.0, 1.0));
    cine::write_pgm(dir / "images" / (name + "_error.pgm"),
                    cine::to_gray8(cine::error_map(ref0, frame0, 0.0, cfg.eval.error_range), 0.0, cfg.eval.error_range));
    cine::write_pgm(dir / "images" / (name + "_yt.pgm"),
                    cine::to_gray8(scaled(cine::yt_profile(recon[name], yt_x), inv_peak), 0.0, 1.0));
  }
  rows.insert(rows.end(), summaries.begin(), summaries.end());
  cine::write_metrics_csv(dir / "metrics.csv", rows);

  cine::KeyValues manifest = cfg.to_key_values();
  manifest.set("eval.methods", [&] {
    std::string s;
    for (const auto& n : methods) s += (s.empty() ? "" : ",") + n;
    return s;
  }());
  manifest.set("eval.lines_per_frame", [&] {
    std::vector<std::size_t> lines;
    for (std::size_t t = 0; t < p.nt; ++t) lines.push_back(mask.lines_in_frame(t));
    return join(lines);
  }());
  manifest.set("metrics.ssim", "window=7x7 uniform, k1=0.01, k2=0.03, L=1");
  manifest.set("metrics.normalization", "magnitudes divided by the reference frame peak");
  manifest.set("images.mapping", "round(255 * (v - lo) / (hi - lo)); recon/y-t [0,1] of reference peak, error [0,eval.error_range]");
  manifest.set("images.frame", "0");
  manifest.set("images.yt_x", std::to_string(yt_x));
  cine::write_key_values(dir / "manifest.txt", manifest);
  return outcome;
}

cine::Tensor<std::uint8_t> montage(const std::vector<std::vector<Tensor<std::uint8_t>>>& rows) {
  constexpr std::size_t gap = 2;
  std::size_t th = 0, tw = 0, cols = 0;
  for (const auto& row : rows) {
    cols = std::max(cols, row.size());
    for (const auto& tile : row) {
      th = std::max(th, tile.dim(0));
      tw = std::max(tw, tile.dim(1));
    }
  }
  if (rows.empty() || cols == 0) return Tensor<std::uint8_t>({0, 0});
  const std::size_t h = rows.size() * th + (rows.size() - 1) * gap;
  const std::size_t w = cols * tw + (cols - 1) * gap;
  Tensor<std::uint8_t> out({h, w}, 255);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const std::size_t y0 = r * (th + gap), x0 = c * (tw + gap);
      for (std::size_t y = 0; y < th; ++y) {
        for (std::size_t x = 0; x < tw; ++x) out.at(y0 + y, x0 + x) = 0;
      }
      if (c >= rows[r].size()) continue;
      const auto& tile = rows[r][c];
      for (std::size_t y = 0; y < tile.dim(0); ++y) {
        for (std::size_t x = 0; x < tile.dim(1); ++x) out.at(y0 + y, x0 + x) = tile.at(y, x);
      }
    }
  }
  return out;
}

ReportOutcome cmd_report(const ExperimentConfig& cfg, const std::vector<fs::path>& given) {
  std::vector<fs::path> inputs = given;
  if (inputs.empty()) {
    for (const auto& s : cfg.report_inputs) inputs.emplace_back(s);
  }
  if (inputs.empty()) throw cine::ConfigError("report needs at least one results directory");

  const fs::path dir = cfg.out / fs::path(cfg.report_name);
  if (fs::exists(dir)) fs::remove_all(dir);
  fs::create_directories(dir);
  ReportOutcome outcome{dir, {}};

  // Labels: directory names, disambiguated by position when they repeat.
  std::vector<std::string> labels;
  std::set<std::string> used;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    std::string label = inputs[i].lexically_normal().filename().string();
    if (label.empty()) label = inputs[i].lexically_normal().parent_path().filename().string();
    if (used.count(label)) label += "#" + std::to_string(i);
    used.insert(label);
    labels.push_back(label);
  }

  std::vector<std::vector<cine::MetricsRow>> tables(inputs.size());
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const fs::path csv = inputs[i] / "metrics.csv";
    if (!fs::exists(csv)) {
      outcome.missing.push_back(csv.string());
      continue;
    }
    tables[i] = cine::read_metrics_csv(csv);
  }

  if (inputs.size() == 1) {
    if (outcome.missing.empty()) fs::copy_file(inputs[0] / "metrics.csv", dir / "report.csv");
  } else {
    std::vector<cine::MetricsRow> merged;
    std::vector<std::string> order;
    std::set<std::string> seen;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      for (auto row : tables[i]) {
        if (!seen.count(row.volume)) {
          seen.insert(row.volume);
          order.push_back(row.volume);
        }
        row.volume = labels[i] + ":" + row.volume;
        merged.push_back(row);
      }
    }
    cine::write_metrics_csv(dir / "report.csv", merged);

    std::string wide = "volume";
    for (const auto& l : labels) wide += "," + l + ":mse," + l + ":psnr_db," + l + ":ssim";
    wide += "\n";
    for (const auto& volume : order) {
      wide += volume;
      for (const auto& table : tables) {
        const auto it = std::find_if(table.begin(), table.end(), [&](const auto& r) { return r.volume == volume; });
        if (it == table.end()) {
          wide += ",,,";
        } else {
          wide += "," + cine::format_metric(it->mse) + "," + cine::format_metric(it->psnr_db) + "," +
                  cine::format_metric(it->ssim);
        }
      }
      wide += "\n";
    }
    cine::write_text(dir / "comparison.csv", wide);
  }

  std::vector<std::vector<Tensor<std::uint8_t>>> grid;
  std::string layout_text;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    std::vector<std::string> methods;
    for (const auto& row : tables[i]) {
      const std::string method = row.volume.substr(0, row.volume.find('/'));
      const std::string tail = row.volume.substr(row.volume.find('/') + 1);
      if (tail != "mean" && tail != "std" && std::find(methods.begin(), methods.end(), method) == methods.end()) {
        methods.push_back(method);
      }
    }
    for (const auto& method : methods) {
      std::vector<Tensor<std::uint8_t>> row;
      for (const char* kind : {"recon", "error", "yt"}) {
        const fs::path img = inputs[i] / "images" / (method + "_" + kind + ".pgm");
        if (fs::exists(img)) {
          row.push_back(cine::read_pgm(img));
        } else {
          outcome.missing.push_back(img.string());
          row.push_back(Tensor<std::uint8_t>({1, 1}));
        }
      }
      grid.push_back(std::move(row));
      layout_text += labels[i] + ":" + method + "\n";
    }
  }
  if (!grid.empty()) {
    cine::write_pgm(dir / "montage.pgm", montage(grid));
    cine::write_text(dir / "montage_rows.txt", layout_text);
  }
  if (!outcome.missing.empty()) {
    std::string text;
    for (const auto& f : outcome.missing) text += f + "\n";
    cine::write_text(dir / "missing.txt", text);
  }
  return outcome;
}

int run_cli(int argc, char** argv) {
  CLI::App app{"Unrolled-ADMM cine MRI reconstruction: data preparation, training, evaluation and reports"};
  app.require_subcommand(1);
  std::string config_path, out;
  std::uint64_t seed = 0;
  std::vector<std::string> report_dirs;
  const std::pair<const char*, const char*> subcommands[] = {
      {"prepare", "simulate phantoms, merge interleaved frames, write training pairs"},
      {"train", "train the unrolled network on the prepared dataset"},
      {"eval", "reconstruct a test series and write metrics and images"},
      {"report", "collect metrics from one or more results directories"},
  };
  for (const auto& [name, help] : subcommands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "key=value experiment config")->required();
    sub->add_option("--out", out, "output root (overrides `out`)");
    sub->add_option("--seed", seed, "global seed (overrides `seed`)");
    if (std::string(name) == "report") sub->add_option("dirs", report_dirs, "results directories to compare");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  const CLI::App* sub = app.get_subcommands().front();
  try {
    cine::KeyValues kv = cine::read_key_values(config_path);
    if (sub->count("--out")) kv.set("out", out);
    if (sub->count("--seed")) kv.set("seed", std::to_string(seed));
    const ExperimentConfig cfg = ExperimentConfig::from_key_values(kv);
    if (command == "prepare") {
      const auto r = cmd_prepare(cfg);
      std::cout << "dataset: " << r.dataset_dir.string() << " (" << r.pairs << " pairs)\n";
    } else if (command == "train") {
      const auto r = cmd_train(cfg);
      std::cout << "loss: " << r.epoch_loss.front() << " -> " << r.epoch_loss.back() << "\n";
    } else if (command == "eval") {
      const auto r = cmd_eval(cfg);
      for (const auto& name : r.methods) {
        std::cout << name << ": psnr " << cine::format_metric(r.summary.at(name).mean.psnr_db) << " dB, ssim "
                  << cine::format_metric(r.summary.at(name).mean.ssim) << "\n";
      }
    } else {
      std::vector<fs::path> dirs(report_dirs.begin(), report_dirs.end());
      const auto r = cmd_report(cfg, dirs);
      std::cout << "report: " << r.dir.string() << "\n";
      if (!r.missing.empty()) {
        for (const auto& f : r.missing) std::cerr << "missing: " << f << "\n";
        return 4;
      }
    }
  } catch (const cine::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const cine::NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 3;
  } catch (const cine::IoError& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return 4;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace recon
