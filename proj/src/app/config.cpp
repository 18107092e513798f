#include "ksfno/app/config.hpp"

#include <yaml-cpp/yaml.h>

#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <string>

#include "ksfno/error.hpp"

namespace ksfno::app {
namespace {

[[noreturn]] void invalid(const std::string& path, const std::string& what) {
  throw Error(ErrorCode::InvalidArgument, path + ": " + what);
}

void reject_unknown(const YAML::Node& node, const std::string& path, const std::set<std::string>& known) {
  if (!node.IsMap()) invalid(path, "expected a mapping");
  for (const auto& kv : node) {
    const std::string key = kv.first.as<std::string>();
    if (!known.contains(key)) invalid(path.empty() ? key : path + "." + key, "unknown key");
  }
}

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

std::uint64_t read_u64(const YAML::Node& node, const std::string& path) {
  if (!node.IsScalar()) invalid(path, "expected a non-negative integer");
  const std::string text = node.Scalar();
  if (text.empty() || text.front() == '-') invalid(path, "expected a non-negative integer, got '" + text + "'");
  try {
    return node.as<std::uint64_t>();
  } catch (const YAML::Exception&) {
    invalid(path, "expected a non-negative integer, got '" + text + "'");
  }
}

std::size_t read_size(const YAML::Node& node, const std::string& path) {
  const std::uint64_t v = read_u64(node, path);
  if (v > std::numeric_limits<std::uint32_t>::max()) invalid(path, "value too large");
  return static_cast<std::size_t>(v);
}

double read_double(const YAML::Node& node, const std::string& path) {
  if (!node.IsScalar()) invalid(path, "expected a number");
  try {
    return node.as<double>();
  } catch (const YAML::Exception&) {
    invalid(path, "expected a number, got '" + node.Scalar() + "'");
  }
}

template <typename T, typename Reader>
void maybe(const YAML::Node& section, const std::string& path, const char* key, T& out, Reader read) {
  if (const YAML::Node v = section[key]) out = read(v, join(path, key));
}

void parse_solver(const YAML::Node& node, SolverConfig& s) {
  reject_unknown(node, "solver", {"n", "h", "dt", "t_final", "snapshot_stride"});
  maybe(node, "solver", "n", s.n, read_size);
  maybe(node, "solver", "h", s.h, read_double);
  maybe(node, "solver", "dt", s.dt, read_double);
  maybe(node, "solver", "t_final", s.t_final, read_double);
  maybe(node, "solver", "snapshot_stride", s.snapshot_stride, read_size);
}

void parse_data(const YAML::Node& node, DataSection& d) {
  reject_unknown(node, "data", {"count", "base_seed", "splits"});
  maybe(node, "data", "count", d.count, read_size);
  maybe(node, "data", "base_seed", d.base_seed, read_u64);
  if (const YAML::Node sp = node["splits"]) {
    if (sp.IsSequence()) {
      if (sp.size() != 3) invalid("data.splits", "expected [train, val, test]");
      d.splits.train = read_size(sp[0], "data.splits[0]");
      d.splits.val = read_size(sp[1], "data.splits[1]");
      d.splits.test = read_size(sp[2], "data.splits[2]");
    } else {
      reject_unknown(sp, "data.splits", {"train", "val", "test"});
      maybe(sp, "data.splits", "train", d.splits.train, read_size);
      maybe(sp, "data.splits", "val", d.splits.val, read_size);
      maybe(sp, "data.splits", "test", d.splits.test, read_size);
    }
  }
}

void parse_model(const YAML::Node& node, ModelSection& m) {
  reject_unknown(node, "model", {"modes", "hidden", "proj_hidden"});
  if (const YAML::Node modes = node["modes"]) {
    m.modes.clear();
    if (modes.IsSequence()) {
      for (std::size_t i = 0; i < modes.size(); ++i) m.modes.push_back(read_size(modes[i], "model.modes[" + std::to_string(i) + "]"));
    } else {
      m.modes.push_back(read_size(modes, "model.modes"));
    }
  }
  maybe(node, "model", "hidden", m.hidden, read_size);
  maybe(node, "model", "proj_hidden", m.proj_hidden, read_size);
}

void parse_train(const YAML::Node& node, TrainConfig& t) {
  reject_unknown(node, "train",
                 {"lr", "weight_decay", "scheduler_step", "scheduler_gamma", "batch_size", "max_epochs", "patience", "seed"});
  maybe(node, "train", "lr", t.lr, read_double);
  maybe(node, "train", "weight_decay", t.weight_decay, read_double);
  maybe(node, "train", "scheduler_step", t.scheduler_step, read_size);
  maybe(node, "train", "scheduler_gamma", t.scheduler_gamma, read_double);
  maybe(node, "train", "batch_size", t.batch_size, read_size);
  maybe(node, "train", "max_epochs", t.max_epochs, read_size);
  maybe(node, "train", "seed", t.seed, read_u64);
  if (const YAML::Node p = node["patience"]) {
    if (p.IsNull()) {
      t.early_stop_patience.reset();
    } else {
      t.early_stop_patience = read_size(p, "train.patience");
    }
  }
}

void parse_paths(const YAML::Node& node, PathsSection& p) {
  reject_unknown(node, "paths", {"dataset", "checkpoints", "reports"});
  auto read_path = [](const YAML::Node& v, const std::string& path) -> std::filesystem::path {
    if (!v.IsScalar() || v.Scalar().empty()) invalid(path, "expected a path");
    return v.Scalar();
  };
  maybe(node, "paths", "dataset", p.dataset, read_path);
  maybe(node, "paths", "checkpoints", p.checkpoints, read_path);
  maybe(node, "paths", "reports", p.reports, read_path);
}

}  // namespace

FnoConfig ModelSection::fno(std::size_t mode_count, std::size_t n) const {
  return FnoConfig{.modes = mode_count, .hidden = hidden, .in_channels = 3, .proj_hidden = proj_hidden, .n = n};
}

void ExperimentConfig::validate() const {
  solver.validate();
  if (solver.n % 2 != 0) throw Error(ErrorCode::OddSize, "solver.n must be even for spectral analysis");

  if (data.count == 0) invalid("data.count", "must be >= 1");
  const SplitCounts& s = data.splits;
  if (s.train == 0) invalid("data.splits.train", "must be >= 1");
  if (s.val == 0) invalid("data.splits.val", "must be >= 1");
  if (s.train + s.val + s.test > data.count) {
    invalid("data.splits", std::to_string(s.train) + "+" + std::to_string(s.val) + "+" + std::to_string(s.test) +
                               " exceeds data.count " + std::to_string(data.count));
  }

  if (model.modes.empty()) invalid("model.modes", "needs at least one cutoff");
  for (std::size_t i = 0; i < model.modes.size(); ++i) {
    try {
      model.fno(model.modes[i], solver.n).validate();
    } catch (const Error& e) {
      throw Error(e.code(), "model.modes[" + std::to_string(i) + "]: " + e.detail());
    }
  }

  train.validate();
  if (eval.n_bins == 0) invalid("eval.n_bins", "must be >= 1");
}

ExperimentConfig parse_config(std::string_view text) {
  YAML::Node root;
  try {
    root = YAML::Load(std::string(text));
  } catch (const YAML::Exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("config is not valid YAML: ") + e.what());
  }
  ExperimentConfig cfg;
  if (root.IsNull()) {
    cfg.validate();
    return cfg;
  }
  reject_unknown(root, "", {"solver", "data", "model", "train", "eval", "paths"});
  if (root["solver"]) parse_solver(root["solver"], cfg.solver);
  if (root["data"]) parse_data(root["data"], cfg.data);
  if (root["model"]) parse_model(root["model"], cfg.model);
  if (root["train"]) parse_train(root["train"], cfg.train);
  if (const YAML::Node e = root["eval"]) {
    reject_unknown(e, "eval", {"n_bins"});
    maybe(e, "eval", "n_bins", cfg.eval.n_bins, read_size);
  }
  if (root["paths"]) parse_paths(root["paths"], cfg.paths);
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot read config " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

ExperimentConfig smoke_scale(ExperimentConfig cfg) {
  cfg.solver.n = 32;
  cfg.solver.dt = 0.01;
  cfg.solver.t_final = 1.0;
  cfg.solver.snapshot_stride = 100;
  cfg.data.count = 8;
  cfg.data.splits = {4, 2, 2};
  cfg.model.modes = {4, 8};
  cfg.model.hidden = 8;
  cfg.model.proj_hidden = 16;
  cfg.train.batch_size = 2;
  cfg.train.max_epochs = 5;
  cfg.train.scheduler_step = 2;
  cfg.eval.n_bins = 8;
  cfg.validate();
  return cfg;
}

}  // namespace ksfno::app
