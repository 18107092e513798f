#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string_view>
#include <vector>

#include "ksfno/fno.hpp"
#include "ksfno/ks_solver.hpp"
#include "ksfno/training.hpp"

namespace ksfno::app {

struct SplitCounts {
  std::size_t train = 80;
  std::size_t val = 20;
  std::size_t test = 20;
};

struct DataSection {
  std::size_t count = 128;
  std::uint64_t base_seed = 0;
  SplitCounts splits;
};

struct ModelSection {
  std::vector<std::size_t> modes{12, 24};
  std::size_t hidden = 64;
  std::size_t proj_hidden = 128;

  FnoConfig fno(std::size_t mode_count, std::size_t n) const;
};

struct EvalSection {
  std::size_t n_bins = 28;
};

struct PathsSection {
  std::filesystem::path dataset = "out/dataset.ksd";
  std::filesystem::path checkpoints = "out/checkpoints";
  std::filesystem::path reports = "out/reports";
};

struct ExperimentConfig {
  SolverConfig solver;
  DataSection data;
  ModelSection model;
  TrainConfig train;
  EvalSection eval;
  PathsSection paths;

  /// Rejects anything a later stage would reject. Messages start with the
  /// offending key path, e.g. "data.splits: 90+20+20 exceeds data.count 128".
  void validate() const;
};

/// Parses and validates a YAML document. Every section and key is optional and
/// falls back to the defaults above; unknown keys are errors.
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Desk-scale overrides for a quick end-to-end run: n=32, 8 samples, a tiny
/// model and a handful of epochs. Seeds and paths are kept.
ExperimentConfig smoke_scale(ExperimentConfig cfg);

}  // namespace ksfno::app
