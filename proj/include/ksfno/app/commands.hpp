#pragma once

#include <exception>
#include <filesystem>
#include <ostream>
#include <string_view>
#include <vector>

#include "ksfno/app/config.hpp"
#include "ksfno/dataset.hpp"
#include "ksfno/training.hpp"

namespace ksfno::app {

namespace fs = std::filesystem;

/// Process exit status for a failure: 2 validation, 3 numerical blow-up,
/// 4 IO or corrupt file, 1 anything unexpected.
int exit_code_for(const std::exception& e);

/// "<dir>/modes-12.ksf" -> "<dir>/modes-12.history.csv".
fs::path history_path_for(const fs::path& checkpoint);

/// Generates, splits and saves the dataset. Prints per-sample progress and a
/// min/max/mean summary of the final frames.
Dataset cmd_generate(const ExperimentConfig& cfg, const fs::path& out, std::ostream& log);

/// Trains one cutoff and writes the best-validation checkpoint plus its
/// history CSV (epoch,train_loss,val_loss,lr). On divergence the partial
/// history is still written before the error propagates.
TrainResult cmd_train(const ExperimentConfig& cfg, const fs::path& data, std::size_t modes, const fs::path& out,
                      std::ostream& log);

/// Report layout under `out`:
///   manifest.csv                     model,checkpoint,modes,param_count
///   samples.csv                      sample_index,seed (the test split)
///   truth/radial_mean.csv            mean radial spectrum over the test split
///   truth/sample-NNN/                input.csv target.csv log_power.csv radial.csv
///   <model>/sample-NNN/              prediction.csv log_power.csv radial.csv error.csv
///   <model>/summary.csv              sample_index,mse,relative_l2,first_bin_over_1
///   <model>/radial_mean.csv, <model>/error_mean.csv, <model>/history.csv (when found)
///   comparison.csv                   bin_index,bin_center,<model>... normalized errors
///   comparison_first_bin.csv         model,first_bin_over_1
/// The comparison files need two or more checkpoints. <model> is the
/// checkpoint file stem.
void cmd_eval(const ExperimentConfig& cfg, const fs::path& data, const std::vector<fs::path>& checkpoints,
              const fs::path& out, std::ostream& log);

/// Renders SVGs into <report>/plots: fields_<model>.svg, spectrum_<model>.svg
/// (first test sample), error_<model>.svg, loss_<model>.svg when a history
/// exists, comparison.svg when a comparison table exists. Every input is read
/// before anything is written; a missing one raises MISSING_REPORT.
std::vector<fs::path> cmd_plot(const fs::path& report, std::ostream& log);

enum class Scale { Smoke, Paper };
Scale parse_scale(std::string_view text);

/// generate -> train every configured cutoff -> eval -> plot, using the
/// configured paths. Smoke scale applies smoke_scale() first.
void cmd_reproduce(ExperimentConfig cfg, Scale scale, std::ostream& log);

}  // namespace ksfno::app
