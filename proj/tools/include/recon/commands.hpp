#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "cine/metrics.hpp"
#include "recon/config.hpp"

namespace recon {

// Output layout under config.out:
//   dataset/                 manifest.txt, csm.tns, pair_<i>_{input,target,mask}.tns
//   checkpoint/{final,best}/ parameter tensors + manifest.txt
//   loss.csv                 epoch,mean_loss,lr
//   <eval.name>/             metrics.csv, manifest.txt, <method>_recon.tns, images/*.pgm
//   <report.name>/           report.csv, comparison.csv (several inputs), montage.pgm
struct Layout {
  std::filesystem::path root;
  std::filesystem::path dataset() const { return root / "dataset"; }
  std::filesystem::path checkpoint(const std::string& which) const { return root / "checkpoint" / which; }
  std::filesystem::path loss_csv() const { return root / "loss.csv"; }
};

struct PrepareResult {
  std::filesystem::path dataset_dir;
  std::size_t pairs = 0;
};

struct TrainOutcome {
  std::vector<double> epoch_loss;
  bool diverged = false;
  std::string failure;
};

struct EvalOutcome {
  std::filesystem::path dir;
  std::vector<std::string> methods;
  std::map<std::string, cine::MetricsSummary> summary;
};

struct ReportOutcome {
  std::filesystem::path dir;
  std::vector<std::string> missing;
};

PrepareResult cmd_prepare(const ExperimentConfig& cfg);
TrainOutcome cmd_train(const ExperimentConfig& cfg);
EvalOutcome cmd_eval(const ExperimentConfig& cfg);
// Inputs default to cfg.report_inputs when `inputs` is empty.
ReportOutcome cmd_report(const ExperimentConfig& cfg, const std::vector<std::filesystem::path>& inputs);

// Montage of equally sized tiles: rows of (recon | error | y-t) separated by 2-pixel
// white lines. Tiles smaller than the largest tile are zero-padded at the bottom/right.
cine::Tensor<std::uint8_t> montage(const std::vector<std::vector<cine::Tensor<std::uint8_t>>>& rows);

// Full command line; returns the process exit code (0 ok, 2 config, 3 numeric, 4 I/O).
int run_cli(int argc, char** argv);

}  // namespace recon
